// End-to-end acceptance suite: one PASS/FAIL line per criterion, then the
// aggregated report over every run directory it produced.
//   acceptance [--out DIR] [--only N[,N...]] [--workers N]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tlab/diagrams.hpp"
#include "tlab/experiments.hpp"
#include "tlab/field.hpp"
#include "tlab/limit.hpp"
#include "tlab/spectrum.hpp"

using namespace tlab;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string out_root = "acceptance_runs";
int workers = 1;
std::vector<std::string> run_dirs;

std::string fmt(double x, int prec = 4) {
    std::ostringstream o;
    o.precision(prec);
    o << x;
    return o.str();
}

RunOutcome run(RunKind kind, const std::string& name, KeyValues kv, uint64_t seed) {
    ExperimentConfig c;
    c.kind = kind;
    c.kv = std::move(kv);
    c.seed = seed;
    c.workers = workers;
    c.out_dir = (fs::path(out_root) / name).string();
    fs::remove_all(c.out_dir);
    run_dirs.push_back(c.out_dir);
    return run_experiment(c);
}

// verdicts of a manifest whose name contains `part` (all when empty)
Outcome verdicts(const RunOutcome& o, const std::string& part = "") {
    Outcome r{true, ""};
    int n = 0, bad = 0;
    for (const auto& v : o.manifest["verdicts"]) {
        const std::string name = v["name"];
        if (!part.empty() && name.find(part) == std::string::npos) continue;
        if (!v["mandatory"].get<bool>()) continue;
        ++n;
        if (!v["pass"].get<bool>()) {
            ++bad;
            r.pass = false;
            r.detail += " [failed: " + name + (v.contains("z") ? " z=" + fmt(v["z"].get<double>(), 3) : "") + "]";
        }
    }
    if (n == 0) r.pass = false;
    r.detail = std::to_string(n - bad) + "/" + std::to_string(n) + " checks" + r.detail;
    return r;
}

// Independent count: all perfect matchings of the 2n hands (hand h sits on node h / 2),
// keeping those that never join two hands of the same node.
void brute_matchings(int n, long& complete, long& single) {
    std::vector<int> mate(2 * n, -1);
    std::function<void()> rec = [&] {
        int h = 0;
        while (h < 2 * n && mate[h] >= 0) ++h;
        if (h == 2 * n) {
            ++complete;
            // nodes have degree two, so the diagram is a union of cycles; walk from node 0
            int len = 0, node = 0, from = 0;
            do {
                const int other = (from == 2 * node) ? 2 * node + 1 : 2 * node;
                const int next = mate[other];
                from = next;
                node = next / 2;
                ++len;
            } while (node != 0);
            if (len == n) ++single;
            return;
        }
        for (int g = h + 1; g < 2 * n; ++g) {
            if (mate[g] >= 0 || g / 2 == h / 2) continue;
            mate[h] = g;
            mate[g] = h;
            rec();
            mate[h] = mate[g] = -1;
        }
    };
    rec();
}

Outcome c1() {
    const auto t0 = std::chrono::steady_clock::now();
    const long want_complete[] = {2, 8, 60, 544, 6040};
    const long want_single[] = {2, 8, 48};
    bool ok = true;
    std::string d;
    for (int n = 2; n <= 6; ++n) {
        long bc = 0, bs = 0;
        brute_matchings(n, bc, bs);
        const auto c = diagram_census(n);
        ok = ok && c.complete == bc && bc == want_complete[n - 2] && c.single_cycle == bs;
        if (n <= 4) ok = ok && bs == want_single[n - 2];
        d += (n > 2 ? " " : "") + std::to_string(c.complete) + "/" + std::to_string(c.single_cycle);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 10.0;
    return {ok, "complete/single n=2..6: " + d + ", " + fmt(secs, 3) + " s"};
}

Outcome c2() {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> g;
    double idem = 0.0, sym = 0.0, kill = 0.0;
    for (int d : {2, 3})
        for (int i = 0; i < 10000; ++i) {
            Vec3 k{g(rng), g(rng), d == 3 ? g(rng) : 0.0};
            const Mat3 G = gamma_project(d, k);
            for (int a = 0; a < d; ++a) {
                double gk = 0.0;
                for (int b = 0; b < d; ++b) {
                    double gg = 0.0;
                    for (int c = 0; c < d; ++c) gg += G[a][c] * G[c][b];
                    idem = std::max(idem, std::abs(gg - G[a][b]));
                    sym = std::max(sym, std::abs(G[a][b] - G[b][a]));
                    gk += G[a][b] * k[b];
                }
                kill = std::max(kill, std::abs(gk));
            }
        }
    return {idem <= 1e-12 && sym <= 1e-12 && kill <= 1e-12,
            "max |G^2-G| " + fmt(idem, 2) + ", |G-G^T| " + fmt(sym, 2) + ", |Gk| " + fmt(kill, 2) + " (d=2,3; 10^4 k each)"};
}

Outcome c3() {
    const auto o = run(RunKind::field_cov, "c3_field_cov", {{"cov.replicas", "10000"}, {"cov.modes", "2048"}}, 3);
    auto r = verdicts(o);
    double worst = 0.0;
    for (const auto& v : o.manifest["verdicts"]) worst = std::max(worst, v["z"].get<double>());
    r.detail += ", max z " + fmt(worst, 3);
    return r;
}

Outcome c4() {
    SpectrumParams p;
    const auto vs = variance_scaling_VT(p, {4.0, 8.0, 16.0, 32.0}, 10000, 256, 4, workers);
    const Estimate at8{vs.mean[1], vs.stderr_[1]};
    const Comparison c = compare_to_prediction(at8, {variance_VT_exact(p, 8.0), 0.0});
    const bool ok = !vs.unstable && std::abs(vs.slope - 1.0) <= 0.05 && c.pass;
    return {ok, "slope " + fmt(vs.slope) + " +- " + fmt(vs.slope_stderr, 2) + " (want 1 +- 0.05); E|V_8|^2 " +
                    fmt(at8.value) + " +- " + fmt(at8.stderr_, 3) + " vs " + fmt(variance_VT_exact(p, 8.0)) +
                    " (z " + fmt(c.z, 3) + ")"};
}

Outcome c5() {
    SpectrumParams p;
    p.alpha = 0.4;
    p.beta = 0.4;
    const auto f6 = taylor_kubo(p, 6), f9 = taylor_kubo(p, 9);
    const bool stable = std::abs(f9.D[0][0] - f6.D[0][0]) <= 1e-3 * std::abs(f6.D[0][0]);
    bool ok = f6.finite && f9.finite && stable && f6.D[0][0] > 0.0;
    std::string d = "(0.4,0.4) finite D11 " + fmt(f6.D[0][0], 8) + " -> " + fmt(f9.D[0][0], 8);
    for (auto ab : {std::pair{0.5, 0.75}, std::pair{0.5, 0.5}}) {
        p.alpha = ab.first;
        p.beta = ab.second;
        const auto r = taylor_kubo(p, 8);
        ok = ok && !r.finite;
        d += "; (" + fmt(ab.first) + "," + fmt(ab.second) + ") " + (r.finite ? "finite" : "divergent");
    }
    return {ok, d};
}

Outcome c6() {
    const auto o = run(RunKind::hurst, "c6_hurst", {}, 6);
    Outcome r = verdicts(o);
    const auto& f = o.payload["fit"];
    r.detail += "; slope " + fmt(f["slope"].get<double>()) + " +- " + fmt(f["slope_stderr"].get<double>(), 2) +
                " vs 2H " + fmt(f["target_slope"].get<double>()) + "; control " +
                fmt(o.payload["control"]["slope"].get<double>()) + " +- " +
                fmt(o.payload["control"]["slope_stderr"].get<double>(), 2);
    return r;
}

// criteria 7 and 8 share one tracer run
RunOutcome tracer_run;
bool tracer_done = false;
const RunOutcome& tracer() {
    if (!tracer_done) {
        tracer_run = run(RunKind::tracer_sim, "c7_c8_tracer",
                         {{"tracer.trajectories", "500"},
                          {"tracer.T", "8"},
                          {"tracer.write_trajectories", "false"},
                          {"proximity.T", "8,32,128"},
                          {"proximity.pairs", "200"},
                          {"proximity.t", "1"}},
                         78);
        tracer_done = true;
    }
    return tracer_run;
}

Outcome c7() {
    const auto& o = tracer();
    Outcome r = verdicts(o, "strictly decreasing");
    std::string m;
    for (const auto& v : o.payload["proximity"]["median_ratio"]) m += (m.empty() ? "" : ", ") + fmt(v.get<double>());
    r.detail += "; medians over T=8,32,128: " + m;
    return r;
}

Outcome c8() { return verdicts(tracer(), "Lagrangian"); }

const KeyValues limit_regime = {{"params.alpha", "0.5"}, {"params.beta", "1.25"}};

Outcome c9() {
    KeyValues kv = limit_regime;
    kv.insert({{"moments.mc_paths", "20000"}, {"moments.u_max", "2000"}, {"moments.t", "1"}, {"moments.n_max", "4"}});
    const auto o = run(RunKind::moments, "c9_moments", kv, 9);
    Outcome r = verdicts(o);
    r.detail += "; skewness " + fmt(o.payload["skewness"]["value"].get<double>()) + " +- " +
                fmt(o.payload["skewness"]["stderr"].get<double>(), 2) + ", excess kurtosis " +
                fmt(o.payload["excess_kurtosis"]["value"].get<double>()) + " +- " +
                fmt(o.payload["excess_kurtosis"]["stderr"].get<double>(), 2);
    return r;
}

Outcome c10() {
    const auto o = run(RunKind::rosenblatt_check, "c10_rosenblatt", limit_regime, 7);
    return verdicts(o);
}

Outcome c11() {
    KeyValues kv = limit_regime;
    kv.insert({{"limit.paths", "400"}, {"limit.grid_step", "0.2"}, {"limit.grid_points", "5"},
               {"limit.write_paths", "false"}});
    const auto o = run(RunKind::limit_sim, "c11_decomposition", kv, 11);
    Outcome a = verdicts(o, "Xtilde");
    return a;
}

Outcome c12() {
    bool ok = true;
    std::string d;
    for (int n = 1; n <= 3; ++n) {
        const auto r = validate_product_formula(n, 8, 1200 + n);
        ok = ok && r.pass && r.g_pass;
        d += (n > 1 ? "; " : "") + std::string("n=") + std::to_string(n) + " z " + fmt(r.z, 3) + " (gaussian " +
             fmt(r.g_z, 3) + ")";
    }
    return {ok, d};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--out" && i + 1 < argc) {
            out_root = argv[++i];
        } else if (a == "--workers" && i + 1 < argc) {
            workers = std::max(1, std::atoi(argv[++i]));
        } else if (a == "--only" && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string item;
            while (std::getline(ss, item, ',')) only.insert(std::atoi(item.c_str()));
        } else {
            std::cerr << "usage: acceptance [--out DIR] [--only N,...] [--workers N]\n";
            return 2;
        }
    }
    fs::create_directories(out_root);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"diagram census", c1},
        {"projector algebra", c2},
        {"field covariance", c3},
        {"variance scaling of V_T", c4},
        {"Taylor-Kubo dichotomy", c5},
        {"anomalous diffusion", c6},
        {"frozen-field proximity", c7},
        {"Lagrangian stationarity", c8},
        {"limit-process moments", c9},
        {"Rosenblatt equivalence", c10},
        {"decomposition", c11},
        {"product-formula oracle", c12},
    };
    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first << "): " << o.detail
                  << "  [" << fmt(secs, 3) << " s]" << std::endl;
    }
    if (!run_dirs.empty()) {
        std::string summary;
        const json rep = aggregate_manifests(run_dirs, &summary);
        std::ofstream(fs::path(out_root) / "report.json") << rep.dump(2) << '\n';
        std::cout << "run report: " << (rep["overall_pass"].get<bool>() ? "PASS" : "FAIL") << " over "
                  << rep["runs"].size() << " runs (" << (fs::path(out_root) / "report.json").string() << ")"
                  << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
