#include "tlab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "tlab/diagrams.hpp"
#include "tlab/field.hpp"
#include "tlab/limit.hpp"
#include "tlab/parallel.hpp"
#include "tlab/rng.hpp"
#include "tlab/stats.hpp"
#include "tlab/tracer.hpp"

namespace tlab {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::pair<RunKind, const char*> kKinds[] = {
    {RunKind::field_cov, "field-cov"}, {RunKind::tracer_sim, "tracer-sim"},
    {RunKind::hurst, "hurst"},         {RunKind::diagrams, "diagrams"},
    {RunKind::moments, "moments"},     {RunKind::limit_sim, "limit-sim"},
    {RunKind::rosenblatt_check, "rosenblatt-check"}, {RunKind::report, "report"},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string num(double x) {
    std::ostringstream o;
    o.imbue(std::locale::classic());
    o.precision(17);
    o << x;
    return o.str();
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
    return s;
}

// Typed access to the flat key set. Every key read is recorded with its effective
// value; finish() rejects keys nobody asked for (typos must not pass silently).
class Keys {
public:
    explicit Keys(const KeyValues& kv) : kv_(kv) {}

    double real(const std::string& k, double def, bool positive = true) {
        double v = def;
        if (auto s = find(k)) v = parse_real(k, *s);
        if (!std::isfinite(v) || (positive && !(v > 0.0))) fail(ErrorKind::config, k + " must be a positive number");
        used_[k] = num(v);
        return v;
    }
    long integer(const std::string& k, long def, long min = 1) {
        long v = def;
        if (auto s = find(k)) {
            const double x = parse_real(k, *s);
            if (x != std::floor(x) || std::abs(x) > 9e15) fail(ErrorKind::config, k + " must be an integer");
            v = static_cast<long>(x);
        }
        if (v < min) fail(ErrorKind::config, k + " must be >= " + std::to_string(min));
        used_[k] = std::to_string(v);
        return v;
    }
    bool flag(const std::string& k, bool def) {
        bool v = def;
        if (auto s = find(k)) {
            if (*s == "true" || *s == "1" || *s == "yes") v = true;
            else if (*s == "false" || *s == "0" || *s == "no") v = false;
            else fail(ErrorKind::config, k + " must be true or false");
        }
        used_[k] = v ? "true" : "false";
        return v;
    }
    std::string choice(const std::string& k, const std::string& def, const std::set<std::string>& allowed) {
        std::string v = def;
        if (auto s = find(k)) v = *s;
        if (!allowed.count(v)) {
            std::string all;
            for (const auto& a : allowed) all += (all.empty() ? "" : ", ") + a;
            fail(ErrorKind::config, k + " must be one of: " + all);
        }
        used_[k] = v;
        return v;
    }
    std::vector<double> list(const std::string& k, const std::vector<double>& def, bool allow_empty = false) {
        std::vector<double> v = def;
        if (auto s = find(k)) {
            v.clear();
            std::stringstream ss(*s);
            std::string item;
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (item.empty()) continue;
                v.push_back(parse_real(k, item));
            }
        }
        if (v.empty() && !allow_empty) fail(ErrorKind::config, k + " must be a non-empty list");
        used_[k] = join(v);
        return v;
    }
    void finish() const {
        KeyValues known;
        params_to_kv(SpectrumParams{}, known);
        for (const auto& [k, v] : kv_) {
            if (known.count(k) || k == "run.id") continue;
            if (!used_.count(k)) fail(ErrorKind::config, "unknown or inapplicable key: " + k);
        }
    }
    const KeyValues& used() const { return used_; }

private:
    const std::string* find(const std::string& k) const {
        auto it = kv_.find(k);
        return it == kv_.end() ? nullptr : &it->second;
    }
    static double parse_real(const std::string& k, const std::string& s) {
        std::istringstream in(s);
        in.imbue(std::locale::classic());
        double x;
        if (!(in >> x) || !(in >> std::ws).eof()) fail(ErrorKind::config, k + ": not a number: '" + s + "'");
        return x;
    }
    const KeyValues& kv_;
    KeyValues used_;
};

class Csv {
public:
    Csv(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) fail(ErrorKind::io, "cannot write " + path);
        out_.imbue(std::locale::classic());
        out_.precision(17);
        row(header);
    }
    template <class... A>
    void values(const A&... a) {
        bool first = true;
        ((out_ << (first ? "" : ",") << a, first = false), ...);
        out_ << '\n';
    }
    void row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.stderr_}}; }

json params_json(const SpectrumParams& p) {
    return {{"alpha", p.alpha}, {"beta", p.beta},   {"d", p.d},
            {"a0", p.a0},       {"r0", p.r0},       {"cutoff_profile", profile_name(p.cutoff_profile)},
            {"cutoff_radius", p.cutoff_radius}};
}

std::string iso_utc(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(tp.time_since_epoch()).count() % 1000;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

struct Run {
    const ExperimentConfig& cfg;
    Keys keys;
    SpectrumParams params;
    std::string run_id, out;
    uint64_t hash = 0;
    json verdicts = json::array(), outputs = json::array(), notes = json::array();
    json payload = json::object();
    bool pass = true;

    explicit Run(const ExperimentConfig& c) : cfg(c), keys(c.kv) {}

    // Call after every key has been read: fixes the hash, the run id and the directory.
    void ready() {
        keys.finish();
        KeyValues resolved = keys.used();
        params_to_kv(params, resolved);
        std::string text = "kind=" + run_kind_name(cfg.kind) + "\nseed=" + std::to_string(cfg.seed) + "\n";
        text += format_key_values(resolved);
        hash = fnv1a64(text);
        auto it = cfg.kv.find("run.id");
        run_id = it != cfg.kv.end() ? it->second : run_kind_name(cfg.kind) + "-" + hex64(hash).substr(0, 12);
        out = cfg.out_dir.empty() ? (fs::path("runs") / run_id).string() : cfg.out_dir;
        std::error_code ec;
        fs::create_directories(out, ec);
        if (ec || !fs::is_directory(out)) fail(ErrorKind::io, "cannot create output directory " + out);
    }

    std::string path(const std::string& name) {
        outputs.push_back(name);
        return (fs::path(out) / name).string();
    }

    void verdict(const std::string& name, bool ok, bool mandatory = true, json extra = json::object()) {
        extra["name"] = name;
        extra["pass"] = ok;
        extra["mandatory"] = mandatory;
        verdicts.push_back(extra);
        if (mandatory && !ok) pass = false;
    }
    void compare(const std::string& name, const Estimate& mc, const Estimate& ref, bool mandatory = true) {
        const Comparison c = compare_to_prediction(mc, ref);
        verdict(name, c.pass, mandatory,
                {{"value", mc.value}, {"stderr", mc.stderr_}, {"reference", ref.value},
                 {"reference_stderr", ref.stderr_}, {"z", c.z}});
    }
};

void require_hurst(const SpectrumParams& p) {
    double H = NAN;
    try {
        H = scaling_exponents(p).hurst;
    } catch (const Error&) {
    }
    if (!(H > 0.5 && H < 1.0))
        fail(ErrorKind::config, "this run needs the superdiffusive regime 1/2 < H < 1 (alpha + beta > 1, alpha < 1)");
}

Vec3 to_vec(const std::vector<double>& v, int d, const std::string& key) {
    if (static_cast<int>(v.size()) != d) fail(ErrorKind::config, key + " needs " + std::to_string(d) + " entries");
    Vec3 x{0.0, 0.0, 0.0};
    for (int j = 0; j < d; ++j) x[j] = v[j];
    return x;
}

// ---------------------------------------------------------------------------

void run_field_cov(Run& r) {
    auto& k = r.keys;
    const int modes = static_cast<int>(k.integer("cov.modes", 2048, 2));
    const long replicas = k.integer("cov.replicas", 10000, 20);
    const double t = k.real("cov.t", 0.5);
    const Vec3 x = to_vec(k.list("cov.x", {0.5, 0.0}), r.params.d, "cov.x");
    const long quad = k.integer("cov.quad_budget", 400000, 1000);
    if (!(r.params.alpha < 1.0)) fail(ErrorKind::config, "field covariance diverges for alpha >= 1");
    if (modes % 2 || modes > 2048) fail(ErrorKind::config, "cov.modes must be even and <= 2048");
    r.ready();
    const int d = r.params.d;
    const std::vector<std::pair<double, Vec3>> pts = {{0.0, Vec3{0.0, 0.0, 0.0}}, {t, x}};
    const auto mc = covariance_mc(r.params, pts, replicas, modes, derive_seed(r.cfg.seed, 1), r.cfg.workers);
    Csv csv(r.path("field_cov.csv"), {"point", "t", "x1", "x2", "x3", "a", "b", "mc", "mc_stderr", "quadrature",
                                      "quadrature_stderr", "z", "pass"});
    json pj = json::array();
    for (size_t i = 0; i < pts.size(); ++i) {
        const auto q = covariance_R(r.params, pts[i].first, pts[i].second, quad, derive_seed(r.cfg.seed, 2, i));
        json entries = json::array();
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                const Estimate m{mc[i].value[a][b], mc[i].stderr_[a][b]}, e{q.value[a][b], q.stderr_[a][b]};
                const Comparison c = compare_to_prediction(m, e);
                const auto& px = pts[i].second;
                csv.values(i, pts[i].first, px[0], px[1], px[2], a, b, m.value, m.stderr_, e.value, e.stderr_, c.z,
                           c.pass ? "true" : "false");
                r.compare("R_" + std::to_string(a) + std::to_string(b) + "(t=" + num(pts[i].first) + ", x=(" +
                              num(px[0]) + "," + num(px[1]) + (d == 3 ? "," + num(px[2]) : "") + "))",
                          m, e);
                entries.push_back({{"a", a}, {"b", b}, {"mc", estimate_json(m)}, {"quadrature", estimate_json(e)},
                                   {"z", c.z}});
            }
        pj.push_back({{"t", pts[i].first}, {"x", {pts[i].second[0], pts[i].second[1], pts[i].second[2]}},
                      {"entries", entries}});
    }
    r.payload = {{"points", pj}, {"replicas", replicas}, {"modes", modes}};
}

void write_ensemble(Run& r, const std::vector<TrajectoryPair>& ens, bool with_y) {
    const int d = r.params.d;
    std::vector<std::string> h = {"trajectory", "t"};
    for (int j = 1; j <= d; ++j) h.push_back("x" + std::to_string(j));
    for (int j = 1; j <= d; ++j) h.push_back("v" + std::to_string(j));
    if (with_y)
        for (int j = 1; j <= d; ++j) h.push_back("y" + std::to_string(j));
    Csv csv(r.path("trajectories.csv"), h);
    for (size_t i = 0; i < ens.size(); ++i) {
        const auto& z = ens[i].z;
        for (size_t s = 0; s < z.times.size(); ++s) {
            std::vector<std::string> row = {std::to_string(i), num(z.times[s])};
            for (int j = 0; j < d; ++j) row.push_back(num(z.positions[s][j]));
            for (int j = 0; j < d; ++j) row.push_back(num(z.velocities[s][j]));
            if (with_y)
                for (int j = 0; j < d; ++j) row.push_back(num(ens[i].y.positions[s][j]));
            csv.row(row);
        }
    }
    json seeds = json::array();
    for (const auto& p : ens) seeds.push_back({{"mode_seed", p.z.mode_seed}, {"noise_seed", p.z.noise_seed}});
    const auto& c = ens.front().z.config;
    json side = {{"params", params_json(r.params)},
                 {"config",
                  {{"T", c.T}, {"t_max", c.t_max}, {"dt", c.dt}, {"substeps", c.substeps},
                   {"integrator", c.integrator == Integrator::rk4 ? "rk4" : "midpoint"},
                   {"frozen", c.frozen}, {"record_every", c.record_every}, {"x0", {c.x0[0], c.x0[1], c.x0[2]}}}},
                 {"seed", r.cfg.seed},
                 {"trajectory_seeds", seeds},
                 {"code_version", version_string()}};
    std::ofstream(r.path("trajectories.json")) << side.dump(2) << '\n';
}

void run_tracer_sim(Run& r) {
    auto& k = r.keys;
    EnsembleSpec s;
    s.params = r.params;
    s.traj.T = k.real("tracer.T", 8.0);
    s.traj.t_max = k.real("tracer.t_max", 1.0);
    const double dt_req = k.real("tracer.dt", 0.0, false);
    const double dt_max = k.real("tracer.dt_max", 0.01);
    const long n = k.integer("tracer.trajectories", 100);
    s.n_modes = static_cast<int>(k.integer("tracer.modes", 128, 2));
    const std::string variant = k.choice("tracer.variant", "rescaled", {"rescaled", "gaussian"});
    s.control_rate = k.real("tracer.control_rate", 400.0);
    s.traj.integrator = k.choice("tracer.integrator", "rk4", {"rk4", "midpoint"}) == "rk4" ? Integrator::rk4
                                                                                          : Integrator::midpoint;
    s.traj.record_every = static_cast<int>(k.integer("tracer.record_every", 1));
    s.traj.x0 = to_vec(k.list("tracer.x0", std::vector<double>(r.params.d, 0.0)), r.params.d, "tracer.x0");
    s.traj.frozen = k.flag("tracer.frozen", false);
    s.want_y = k.flag("tracer.with_y", false);
    const int order = static_cast<int>(k.integer("tracer.stationarity_order", 2));
    const bool write = k.flag("tracer.write_trajectories", true);
    const std::vector<double> prox_T = k.list("proximity.T", {}, true);
    const long prox_pairs = k.integer("proximity.pairs", 200, 2);
    const double prox_t = k.real("proximity.t", 1.0);
    const int prox_modes = static_cast<int>(k.integer("proximity.modes", 128, 2));
    if (dt_req < 0.0) fail(ErrorKind::config, "tracer.dt must be >= 0 (0 = resolve the fastest mode)");
    if (order > 4) fail(ErrorKind::config, "tracer.stationarity_order must be <= 4");
    if (!(s.traj.T >= 1.0)) fail(ErrorKind::config, "tracer.T must be >= 1");
    s.variant = variant == "gaussian" ? FieldVariant::gaussian : FieldVariant::rescaled;
    const double theta = s.variant == FieldVariant::gaussian
                             ? s.control_rate
                             : 0.5 * r.params.rate(r.params.cutoff_radius * s.traj.T);
    s.traj.dt = dt_req > 0.0 ? dt_req : resolved_dt(theta, s.traj.t_max, dt_max);
    s.traj.substeps = default_substeps(theta, s.traj.dt);
    s.traj.validate();
    r.ready();

    const auto ens = simulate_ensemble(s, 0, n, r.cfg.seed, r.cfg.workers);
    if (write) write_ensemble(r, ens, s.want_y);
    std::vector<Trajectory> zs;
    for (const auto& p : ens) zs.push_back(p.z);
    r.payload = {{"trajectories", n}, {"dt", s.traj.dt}, {"T", s.traj.T}};
    if (n >= 100) {
        std::vector<double> lags;
        for (int i = 1; i <= 10; ++i) lags.push_back(s.traj.t_max * i / 10.0);
        const auto msd = msd_curve(zs, lags);
        Csv csv(r.path("msd.csv"), {"t", "msd", "stderr"});
        for (const auto& m : msd) csv.values(m.t, m.value, m.stderr_);
    } else {
        r.notes.push_back("msd.csv skipped: needs at least 100 trajectories");
    }
    if (n >= 20) {
        const auto st = lagrangian_stationarity(zs, order);
        Csv csv(r.path("stationarity.csv"),
                {"component", "order", "early", "early_stderr", "late", "late_stderr", "diff", "diff_stderr", "z", "pass"});
        for (const auto& c : st) {
            csv.values(c.component, c.order, c.early.value, c.early.stderr_, c.late.value, c.late.stderr_,
                       c.diff.value, c.diff.stderr_, c.z, c.pass ? "true" : "false");
            r.verdict("Lagrangian E v" + std::to_string(c.component + 1) + "^" + std::to_string(c.order) +
                          " first vs last third",
                      c.pass, true, {{"value", c.diff.value}, {"stderr", c.diff.stderr_}, {"z", c.z}});
        }
    } else {
        r.notes.push_back("stationarity test skipped: needs at least 20 trajectories");
    }
    if (!prox_T.empty()) {
        const auto pr = frozen_proximity(r.params, prox_T, prox_pairs, prox_t, prox_modes,
                                         derive_seed(r.cfg.seed, 7), r.cfg.workers, dt_max);
        Csv csv(r.path("proximity.csv"), {"T", "dt", "median_ratio"});
        for (size_t i = 0; i < pr.T.size(); ++i) csv.values(pr.T[i], pr.dt[i], pr.median_ratio[i]);
        r.verdict("median |z_T - y_T| / rms|y_T| strictly decreasing in T", pr.decreasing, true,
                  {{"T", pr.T}, {"median_ratio", pr.median_ratio}});
        r.payload["proximity"] = {{"T", pr.T}, {"median_ratio", pr.median_ratio}};
    }
}

FitResult msd_fit(Run& r, const std::string& series, const std::vector<TrajectoryPair>& ens,
                  const std::vector<double>& lags, Csv& csv) {
    std::vector<Trajectory> zs;
    zs.reserve(ens.size());
    for (const auto& p : ens) zs.push_back(p.z);
    const auto msd = msd_curve(zs, lags);
    for (const auto& m : msd) csv.values(series, m.t, m.value, m.stderr_);
    (void)r;
    return estimate_hurst(msd);
}

void run_hurst(Run& r) {
    auto& k = r.keys;
    EnsembleSpec s;
    s.params = r.params;
    // UV truncation biases the finite-T slope upward roughly like T^{-1/2} (+0.075 at T = 128, +0.03 at 512)
    s.traj.T = k.real("hurst.T", 512.0);
    s.traj.t_max = k.real("hurst.t_max", 1.0);
    const double res = k.real("hurst.resolution", 0.5);
    const double dt_max = k.real("hurst.dt_max", 0.01);
    const long n = k.integer("hurst.trajectories", 2000, 100);
    s.n_modes = static_cast<int>(k.integer("hurst.modes", 64, 2));
    const auto lags = k.list("hurst.lags", {0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0});
    const double tol = k.real("hurst.tolerance", 0.10);
    const double target_tol = k.real("hurst.target_tolerance", 0.05);
    const bool control = k.flag("control.enabled", true);
    EnsembleSpec c;
    c.params = r.params;
    c.variant = FieldVariant::gaussian;
    c.traj.T = k.real("control.T", 1.0);
    c.traj.t_max = s.traj.t_max;
    c.traj.dt = k.real("control.dt", 0.0025);
    c.traj.record_every = 1;
    const long nc = k.integer("control.trajectories", 2000, 100);
    c.n_modes = static_cast<int>(k.integer("control.modes", 32, 2));
    c.control_rate = k.real("control.rate", 400.0);
    const double ctol = k.real("control.tolerance", 0.05);
    require_hurst(r.params);
    for (double l : lags)
        if (!(l > 0.0) || l > s.traj.t_max) fail(ErrorKind::config, "hurst.lags must lie in (0, hurst.t_max]");
    if (!(s.traj.T >= 1.0) || !(c.traj.T >= 1.0)) fail(ErrorKind::config, "hurst.T and control.T must be >= 1");
    const double theta = 0.5 * r.params.rate(r.params.cutoff_radius * s.traj.T);
    s.traj.dt = resolved_dt(theta, s.traj.t_max, dt_max, res);
    s.traj.substeps = default_substeps(theta, s.traj.dt);
    // record on a grid that contains every lag
    const double rec = resolved_dt(0.0, s.traj.t_max, 0.01);
    s.traj.record_every = std::max(1, static_cast<int>(std::floor(rec / s.traj.dt + 1e-9)));
    c.traj.substeps = default_substeps(c.control_rate, c.traj.dt);
    s.traj.validate();
    c.traj.validate();
    r.ready();

    const double H = scaling_exponents(r.params).hurst;
    Csv csv(r.path("msd.csv"), {"series", "t", "msd", "stderr"});
    const auto ens = simulate_ensemble(s, 0, n, r.cfg.seed, r.cfg.workers);
    const FitResult f = msd_fit(r, "field", ens, lags, csv);
    const json fit = {{"slope", f.slope},       {"slope_stderr", f.stderr_}, {"intercept", f.intercept},
                      {"r_squared", f.r_squared}, {"hurst", f.hurst},        {"hurst_stderr", f.hurst_stderr},
                      {"target_slope", 2.0 * H}, {"target_hurst", H}};
    r.verdict("MSD slope = 2H within " + num(tol), std::abs(f.slope - 2.0 * H) <= tol, true,
              {{"value", f.slope}, {"stderr", f.stderr_}, {"reference", 2.0 * H}});
    r.verdict("MSD slope = 2H within " + num(target_tol), std::abs(f.slope - 2.0 * H) <= target_tol, false,
              {{"value", f.slope}, {"stderr", f.stderr_}, {"reference", 2.0 * H}});
    r.verdict("lags span at least one decade", !f.insufficient_span, true);
    r.payload = {{"fit", fit}, {"trajectories", n}, {"dt", s.traj.dt}, {"T", s.traj.T}};
    if (control) {
        const auto ce = simulate_ensemble(c, 0, nc, derive_seed(r.cfg.seed, 99), r.cfg.workers);
        const FitResult g = msd_fit(r, "control", ce, lags, csv);
        r.verdict("Brownian control slope = 1 within " + num(ctol), std::abs(g.slope - 1.0) <= ctol, true,
                  {{"value", g.slope}, {"stderr", g.stderr_}, {"reference", 1.0}});
        r.payload["control"] = {{"slope", g.slope}, {"slope_stderr", g.stderr_}, {"trajectories", nc}};
    }
}

std::string count_word(int n) {
    static const char* w[] = {"zero", "one", "two", "three", "four", "five", "six", "seven", "eight"};
    return n >= 0 && n <= 8 ? w[n] : std::to_string(n);
}

void run_diagrams(Run& r) {
    const int n = static_cast<int>(r.keys.integer("diagrams.n", 4));
    if (n > 8) fail(ErrorKind::config, "diagrams.n must be <= 8");
    r.ready();
    const auto c = diagram_census(n);
    json census = {{"complete", c.complete}, {"single_cycle", c.single_cycle}};
    Csv csv(r.path("census.csv"), {"component_sizes", "count"});
    for (const auto& [sizes, count] : c.by_component_sizes) {
        std::string key, label;
        for (size_t i = 0; i < sizes.size(); ++i) {
            key += (i ? "_" : "") + count_word(sizes[i]);
            label += (i ? "+" : "") + std::to_string(sizes[i]);
        }
        csv.values(label, count);
        if (sizes.size() > 1) census[key + "_cycles"] = count;
    }
    r.payload = census;
    const int64_t formula = count_complete_formula(n);
    r.verdict("complete count matches inclusion-exclusion", c.complete == formula, true,
              {{"value", c.complete}, {"reference", formula}});
    if (n >= 2) {
        // (n-1)! 2^{n-1}: cyclic orders of the nodes times the hand choices at each link
        int64_t cyc = 1;
        for (int i = 1; i < n; ++i) cyc *= 2 * i;
        r.verdict("single-cycle count matches (n-1)! 2^(n-1)", c.single_cycle == cyc, true,
                  {{"value", c.single_cycle}, {"reference", cyc}});
    }
    std::ofstream(r.path("census.json")) << census.dump(2) << '\n';
}

std::vector<double> pooled_last(const std::vector<SpectralPath>& paths, int rep, int d) {
    std::vector<double> v;
    for (const auto& p : paths)
        for (int j = 0; j < d; ++j) v.push_back(p.rep[rep].back()[j]);
    return v;
}

void run_moments(Run& r) {
    auto& k = r.keys;
    const int n_max = static_cast<int>(k.integer("moments.n_max", 4));
    const double t = k.real("moments.t", 1.0);
    const int qp = static_cast<int>(k.integer("moments.quad_points", 200, 10));
    const long paths = k.integer("moments.mc_paths", 0, 0);
    SpectralConfig sc;
    sc.n_modes = static_cast<int>(k.integer("moments.modes", 512, 2));
    sc.u_max = k.real("moments.u_max", 1000.0);
    require_hurst(r.params);
    if (n_max > 6 || n_max < 2) fail(ErrorKind::config, "moments.n_max must be in 2..6");
    if (paths > 0 && paths < 20) fail(ErrorKind::config, "moments.mc_paths must be 0 or >= 20");
    sc.params = r.params;
    sc.grid = {t, 1};
    r.ready();

    const Psi psi{{1.0}, {t}};
    std::vector<Estimate> ex(n_max + 1);
    for (int n = 1; n <= n_max; ++n) ex[n] = moment_Z(psi, n, r.params, qp);
    {
        // the two-node census is one 2-cycle: E Z(t)^2 = 2 C^2 t^{2H} / (H (2H - 1))
        const double H = scaling_exponents(r.params).hurst, C = cycle_constant_C(r.params);
        const double want = 2.0 * C * C * std::pow(t, 2.0 * H) / (H * (2.0 * H - 1.0));
        r.verdict("diagram E Z^2 equals 2 C^2 t^2H / (H (2H-1))", std::abs(ex[2].value - want) <= 1e-8 * want, true,
                  {{"value", ex[2].value}, {"reference", want}});
    }
    MomentStats st;
    if (paths > 0) {
        std::vector<SpectralPath> sp(paths);
        parallel_for(paths, r.cfg.workers, [&](long i) { sp[i] = simulate_spectral(sc, derive_seed(r.cfg.seed, 10, i)); });
        st = cumulants(pooled_last(sp, 0, r.params.d));
        const double ratio = spectral_variance_ratio(sc, t);
        r.payload["truncated_variance_ratio"] = ratio;
        if (ratio < 0.9) r.notes.push_back("spectral truncation too small: variance deficit above 10%");
        r.verdict("spectral truncation keeps 90% of the variance", ratio >= 0.9, false, {{"value", ratio}});
    }
    Csv csv(r.path("moments.csv"), {"n", "exact", "exact_stderr", "mc", "mc_stderr", "z", "pass"});
    json rows = json::array();
    for (int n = 1; n <= n_max; ++n) {
        json row = {{"n", n}, {"exact", estimate_json(ex[n])}};
        if (paths > 0 && n >= 2 && n <= 4) {
            const Comparison c = compare_to_prediction(st.raw[n], ex[n]);
            csv.values(n, ex[n].value, ex[n].stderr_, st.raw[n].value, st.raw[n].stderr_, c.z, c.pass ? "true" : "false");
            r.compare("spectral E Z(" + num(t) + ")^" + std::to_string(n) + " vs diagrams", st.raw[n], ex[n]);
            row["mc"] = estimate_json(st.raw[n]);
            row["z"] = c.z;
        } else {
            csv.values(n, ex[n].value, ex[n].stderr_, "", "", "", "");
        }
        rows.push_back(row);
    }
    if (paths > 0) {
        for (auto [name, e] : {std::pair<std::string, Estimate>{"skewness", st.skewness},
                               std::pair<std::string, Estimate>{"excess kurtosis", st.excess_kurtosis}}) {
            const double z = e.stderr_ > 0.0 ? e.value / e.stderr_ : 0.0;
            r.verdict(name + " exceeds 0 by more than 5 sigma", z > 5.0, true,
                      {{"value", e.value}, {"stderr", e.stderr_}, {"z", z}});
        }
        r.payload["skewness"] = estimate_json(st.skewness);
        r.payload["excess_kurtosis"] = estimate_json(st.excess_kurtosis);
        r.payload["samples"] = st.n;
    }
    r.payload["moments"] = rows;
    r.payload["C"] = cycle_constant_C(r.params);
}

// sample correlation of two series with a jackknife error
Estimate correlation(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<std::vector<double>> obs(x.size());
    for (size_t i = 0; i < x.size(); ++i) obs[i] = {x[i], y[i], x[i] * x[i], y[i] * y[i], x[i] * y[i]};
    return jackknife(obs, 20, [](const std::vector<double>& m) {
        const double vx = m[2] - m[0] * m[0], vy = m[3] - m[1] * m[1];
        return vx > 0.0 && vy > 0.0 ? (m[4] - m[0] * m[1]) / std::sqrt(vx * vy) : 0.0;
    });
}

void run_limit_sim(Run& r) {
    auto& k = r.keys;
    const std::string rep = k.choice("limit.representation", "spectral", {"spectral", "moving_average"});
    const long paths = k.integer("limit.paths", 200, 20);
    LimitGrid grid;
    grid.step = k.real("limit.grid_step", 0.1);
    grid.points = static_cast<int>(k.integer("limit.grid_points", 10));
    const bool write = k.flag("limit.write_paths", true);
    SpectralConfig sc;
    MovingAverageModel m;
    int cells = 0;
    bool decomp = false;
    if (rep == "spectral") {
        sc.n_modes = static_cast<int>(k.integer("limit.modes", 512, 2));
        sc.u_max = k.real("limit.u_max", 1000.0);
        decomp = k.flag("limit.decomposition", true);
    } else {
        cells = static_cast<int>(k.integer("limit.grid_cells", 400));
        if (cells < grid.points) fail(ErrorKind::config, "limit.grid_cells must be >= limit.grid_points");
    }
    require_hurst(r.params);
    r.ready();
    const int d = r.params.d;
    const double H = scaling_exponents(r.params).hurst;
    const double c_var = moment_Z(Psi{{1.0}, {1.0}}, 2, r.params).value;
    r.payload = {{"representation", rep}, {"H", H}, {"paths", paths}};
    if (rep == "spectral") {
        sc.params = r.params;
        sc.grid = grid;
        sc.want_x = sc.want_xt = decomp;
        std::vector<SpectralPath> sp(paths);
        parallel_for(paths, r.cfg.workers, [&](long i) { sp[i] = simulate_spectral(sc, derive_seed(r.cfg.seed, 10, i)); });
        if (write) {
            Csv csv(r.path("paths.csv"), {"path", "t", "process", "component", "value"});
            const char* names[3] = {"Z", "X", "Xtilde"};
            for (long i = 0; i < paths; ++i)
                for (int q = 0; q < 3; ++q) {
                    if (!sp[i].has(q)) continue;
                    for (int g = 0; g < grid.points; ++g)
                        for (int j = 0; j < d; ++j) csv.values(i, grid.t(g), names[q], j + 1, sp[i].rep[q][g][j]);
                }
        }
        const double ratio = spectral_variance_ratio(sc, grid.t(0));
        r.payload["truncated_variance_ratio_first_time"] = ratio;
        r.verdict("spectral truncation keeps 90% of the variance", ratio >= 0.9, false, {{"value", ratio}});
        if (ratio < 0.9) r.notes.push_back("spectral truncation too small: variance deficit above 10%");
        const std::vector<double> z = pooled_last(sp, 0, d);
        std::vector<double> z2;
        for (double v : z) z2.push_back(v * v);
        std::vector<std::vector<double>> obs(z2.size());
        for (size_t i = 0; i < z2.size(); ++i) obs[i] = {z2[i]};
        const Estimate v = jackknife(obs, 20, [](const std::vector<double>& mm) { return mm[0]; });
        const double tl = grid.t_max();
        r.compare("E Z(" + num(tl) + ")^2 vs truncated law", v, {spectral_covariance(sc, tl, tl, c_var), 0.0});
        if (decomp) {
            double worst = 0.0;
            for (const auto& p : sp) {
                double zmax = 0.0, err = 0.0;
                for (int g = 0; g < grid.points; ++g)
                    for (int j = 0; j < d; ++j) {
                        zmax = std::max(zmax, std::abs(p.rep[0][g][j]));
                        err = std::max(err, std::abs(p.rep[0][g][j] - p.rep[1][g][j] - p.rep[2][g][j]));
                    }
                if (zmax > 0.0) worst = std::max(worst, err / zmax);
            }
            r.verdict("Z = X + Xtilde on shared noise (relative 1e-10)", worst <= 1e-10, true, {{"value", worst}});
            for (int j = 0; j < d; ++j)
                for (int jp = 0; jp < d; ++jp) {
                    std::vector<double> x, xt;
                    for (const auto& p : sp) {
                        x.push_back(p.rep[1].back()[j]);
                        xt.push_back(p.rep[2].back()[jp]);
                    }
                    const Estimate c = correlation(x, xt);
                    r.compare("corr(X_" + std::to_string(j + 1) + ", Xtilde_" + std::to_string(jp + 1) + ") = 0", c,
                              {0.0, 0.0});
                }
        }
    } else {
        const double c = moving_average_constant(r.params);
        m = build_moving_average(H, grid, cells, c);
        const auto b = simulate_moving_average_batch(m, derive_seed(r.cfg.seed, 20), 0, paths, d);
        if (write) {
            Csv csv(r.path("paths.csv"), {"path", "t", "process", "component", "value"});
            for (long i = 0; i < paths; ++i)
                for (int g = 0; g < grid.points; ++g)
                    for (int j = 0; j < d; ++j) csv.values(i, grid.t(g), "Zma", j + 1, b[j][i][g]);
        }
        std::vector<double> last;
        for (long i = 0; i < paths; ++i)
            for (int j = 0; j < d; ++j) last.push_back(b[j][i][grid.points - 1]);
        const MomentStats st = cumulants(last);
        r.compare("E Z(" + num(grid.t_max()) + ")^2 vs discrete law", st.raw[2],
                  {m.covariance(grid.points - 1, grid.points - 1), 0.0});
        r.verdict("skewness positive", st.skewness.value > 0.0, true,
                  {{"value", st.skewness.value}, {"stderr", st.skewness.stderr_}});
        r.payload["cells"] = m.cells();
        r.payload["L"] = m.L;
    }
}

void run_rosenblatt(Run& r) {
    auto& k = r.keys;
    RosenblattBudget b;
    b.spectral_paths = k.integer("rosenblatt.spectral_paths", b.spectral_paths, 20);
    b.ma_paths = k.integer("rosenblatt.ma_paths", b.ma_paths, 20);
    b.n_modes = static_cast<int>(k.integer("rosenblatt.modes", b.n_modes, 2));
    b.u_max = k.real("rosenblatt.u_max", b.u_max);
    b.grid_cells = static_cast<int>(k.integer("rosenblatt.grid_cells", b.grid_cells));
    b.grid.step = k.real("rosenblatt.grid_step", b.grid.step);
    b.grid.points = static_cast<int>(k.integer("rosenblatt.grid_points", b.grid.points, 2));
    b.quad_points = static_cast<int>(k.integer("rosenblatt.quad_points", b.quad_points, 10));
    b.holder_paths = k.integer("rosenblatt.holder_paths", b.holder_paths);
    b.holder_points = static_cast<int>(k.integer("rosenblatt.holder_points", b.holder_points, 8));
    require_hurst(r.params);
    if (b.grid_cells < b.grid.points) fail(ErrorKind::config, "rosenblatt.grid_cells must be >= grid_points");
    b.workers = r.cfg.workers;
    r.ready();
    const auto rep = rosenblatt_equivalence_report(r.params, b, r.cfg.seed);
    Csv csv(r.path("rosenblatt_cov.csv"),
            {"a", "b", "s", "t", "spectral", "spectral_stderr", "moving_average", "moving_average_stderr",
             "spectral_law", "moving_average_law", "self_similar", "z_pair", "z_spectral", "z_moving_average",
             "z_spectral_self_similar", "z_moving_average_self_similar"});
    json cells = json::array();
    for (const auto& c : rep.cells) {
        csv.values(c.a, c.b, c.s, c.t, c.spectral.value, c.spectral.stderr_, c.ma.value, c.ma.stderr_,
                   c.spectral_exact, c.ma_exact, c.continuum, c.z_pair, c.z_spectral, c.z_ma, c.z_spectral_cont,
                   c.z_ma_cont);
        cells.push_back({{"a", c.a}, {"b", c.b}, {"s", c.s}, {"t", c.t}, {"spectral", estimate_json(c.spectral)},
                         {"moving_average", estimate_json(c.ma)}, {"spectral_law", c.spectral_exact},
                         {"moving_average_law", c.ma_exact}, {"self_similar", c.continuum},
                         {"z", {c.z_pair, c.z_spectral, c.z_ma, c.z_spectral_cont, c.z_ma_cont}}});
    }
    json checks = json::array();
    for (const auto& c : rep.checks) {
        r.verdict(c.name, c.pass, c.mandatory,
                  {{"value", c.value}, {"stderr", c.stderr_}, {"reference", c.reference},
                   {"reference_stderr", c.reference_stderr}, {"z", c.z}});
        checks.push_back({{"name", c.name}, {"value", c.value}, {"stderr", c.stderr_}, {"reference", c.reference},
                          {"z", c.z}, {"pass", c.pass}, {"mandatory", c.mandatory}});
    }
    const json full = {{"H", rep.H},
                       {"C", rep.C},
                       {"moving_average_constant", rep.c_ma},
                       {"variance_at_1", rep.c_var},
                       {"spectral_samples", rep.spectral_samples},
                       {"moving_average_samples", rep.ma_samples},
                       {"tests", rep.tests},
                       {"multiplicity_note", "3 sigma per test, no multiplicity correction"},
                       {"cells", cells},
                       {"checks", checks},
                       {"pass", rep.pass}};
    std::ofstream(r.path("rosenblatt_report.json")) << full.dump(2) << '\n';
    json failing = json::array();
    for (const auto& c : rep.checks)
        if (c.mandatory && !c.pass) failing.push_back(c.name);
    r.payload = {{"pass", rep.pass}, {"H", rep.H}, {"tests", rep.tests}, {"failing", failing}};
}

}  // namespace

// ---------------------------------------------------------------------------

RunKind parse_run_kind(const std::string& s) {
    for (const auto& [k, name] : kKinds)
        if (s == name) return k;
    fail(ErrorKind::config, "unknown run kind: " + s);
}

std::string run_kind_name(RunKind k) {
    for (const auto& [kk, name] : kKinds)
        if (kk == k) return name;
    return "unknown";
}

KeyValues parse_config_text(const std::string& text) {
    std::istringstream in(text);
    std::string line, prefix, flat;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string body = line;
        const auto hash = body.find('#');
        if (hash != std::string::npos) body.erase(hash);
        body = trim(body);
        if (!body.empty() && body.front() == '[') {
            if (body.back() != ']' || body.size() < 3)
                fail(ErrorKind::config, "line " + std::to_string(lineno) + ": malformed section header");
            prefix = trim(body.substr(1, body.size() - 2)) + ".";
            flat += "\n";
            continue;
        }
        flat += (body.empty() ? "" : prefix + body) + "\n";
    }
    return parse_key_values(flat);
}

KeyValues load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::config, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    KeyValues kv = parse_config_text(ss.str());
    if (kv.empty()) fail(ErrorKind::config, "config file " + path + " defines no keys");
    return kv;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

RunOutcome run_experiment(const ExperimentConfig& cfg) {
    if (cfg.workers < 1) fail(ErrorKind::config, "workers must be >= 1");
    RunOutcome outcome;
    if (cfg.kind == RunKind::report) {
        if (cfg.inputs.empty()) fail(ErrorKind::config, "report needs at least one run directory");
        for (const auto& [k, v] : cfg.kv) fail(ErrorKind::config, "report takes no config keys (got " + k + ")");
        std::string summary;
        json rep = aggregate_manifests(cfg.inputs, &summary);
        std::string joined;
        for (const auto& d : cfg.inputs) joined += d + "\n";
        outcome.out_dir = cfg.out_dir.empty() ? (fs::path("runs") / ("report-" + hex64(fnv1a64(joined)).substr(0, 12))).string()
                                              : cfg.out_dir;
        std::error_code ec;
        fs::create_directories(outcome.out_dir, ec);
        if (ec || !fs::is_directory(outcome.out_dir)) fail(ErrorKind::io, "cannot create output directory " + outcome.out_dir);
        std::ofstream(fs::path(outcome.out_dir) / "report.json") << rep.dump(2) << '\n';
        std::ofstream(fs::path(outcome.out_dir) / "summary.txt") << summary;
        outcome.pass = rep["overall_pass"].get<bool>();
        outcome.payload = {{"overall_pass", outcome.pass},         {"runs", rep["runs"].size()},
                           {"failing_checks", rep["failing_checks"].size()}, {"missing", rep["missing"].size()},
                           {"corrupt", rep["corrupt"].size()},      {"superseded", rep["superseded"].size()},
                           {"out", outcome.out_dir}};
        outcome.manifest = rep;
        return outcome;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto started = std::chrono::system_clock::now();
    Run r(cfg);
    r.params = params_from_kv(cfg.kv);
    switch (cfg.kind) {
        case RunKind::field_cov: run_field_cov(r); break;
        case RunKind::tracer_sim: run_tracer_sim(r); break;
        case RunKind::hurst: run_hurst(r); break;
        case RunKind::diagrams: run_diagrams(r); break;
        case RunKind::moments: run_moments(r); break;
        case RunKind::limit_sim: run_limit_sim(r); break;
        case RunKind::rosenblatt_check: run_rosenblatt(r); break;
        case RunKind::report: break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json budgets = json::object();
    for (const auto& [k, v] : r.keys.used()) budgets[k] = v;
    json m = {{"run_id", r.run_id},
              {"kind", run_kind_name(cfg.kind)},
              {"version", version_string()},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"config_hash", hex64(r.hash)},
              {"params", params_json(r.params)},
              {"budgets", budgets},
              {"started_utc", iso_utc(started)},
              {"timestamp_ns", std::chrono::duration_cast<std::chrono::nanoseconds>(started.time_since_epoch()).count()},
              {"wall_time_s", wall},
              {"verdicts", r.verdicts},
              {"pass", r.pass},
              {"outputs", r.outputs},
              {"notes", r.notes},
              {"result", r.payload}};
    std::ofstream mf(fs::path(r.out) / "manifest.json");
    if (!(mf << m.dump(2) << '\n')) fail(ErrorKind::io, "cannot write manifest in " + r.out);
    outcome.manifest = m;
    outcome.payload = r.payload;
    outcome.out_dir = r.out;
    outcome.pass = r.pass;
    return outcome;
}

json aggregate_manifests(const std::vector<std::string>& dirs, std::string* summary) {
    json missing = json::array(), corrupt = json::array(), superseded = json::array();
    struct Entry {
        std::string path;
        json m;
        int64_t ts;
    };
    std::map<std::string, Entry> runs;
    auto consider = [&](const fs::path& file) {
        json m;
        try {
            std::ifstream in(file);
            if (!in) throw std::runtime_error("unreadable");
            m = json::parse(in);
        } catch (const std::exception& e) {
            corrupt.push_back({{"path", file.string()}, {"reason", std::string("not valid JSON: ") + e.what()}});
            return;
        }
        std::string why;
        if (!m.is_object()) why = "not an object";
        else if (!m.contains("run_id") || !m["run_id"].is_string()) why = "missing run_id";
        else if (!m.contains("kind") || !m["kind"].is_string()) why = "missing kind";
        else if (!m.contains("timestamp_ns") || !m["timestamp_ns"].is_number_integer()) why = "missing timestamp_ns";
        else if (!m.contains("verdicts") || !m["verdicts"].is_array()) why = "missing verdicts";
        else
            for (const auto& v : m["verdicts"])
                if (!v.is_object() || !v.contains("name") || !v["name"].is_string() || !v.contains("pass") ||
                    !v["pass"].is_boolean() || !v.contains("mandatory") || !v["mandatory"].is_boolean()) {
                    why = "malformed verdict entry";
                    break;
                }
        if (!why.empty()) {
            corrupt.push_back({{"path", file.string()}, {"reason", why}});
            return;
        }
        const std::string id = m["run_id"];
        const int64_t ts = m["timestamp_ns"];
        auto it = runs.find(id);
        if (it == runs.end()) {
            runs[id] = {file.string(), m, ts};
        } else if (ts > it->second.ts) {
            superseded.push_back({{"run_id", id}, {"path", it->second.path}, {"timestamp_ns", it->second.ts}});
            it->second = {file.string(), m, ts};
        } else {
            superseded.push_back({{"run_id", id}, {"path", file.string()}, {"timestamp_ns", ts}});
        }
    };
    for (const auto& d : dirs) {
        const fs::path dir(d);
        std::error_code ec;
        if (fs::is_regular_file(dir / "manifest.json", ec)) {
            consider(dir / "manifest.json");
            continue;
        }
        std::vector<fs::path> found;
        if (fs::is_directory(dir, ec))
            for (const auto& e : fs::directory_iterator(dir, ec))
                if (e.is_directory() && fs::is_regular_file(e.path() / "manifest.json")) found.push_back(e.path() / "manifest.json");
        std::sort(found.begin(), found.end());
        if (found.empty()) missing.push_back({{"path", d}, {"reason", fs::exists(dir) ? "no manifest.json" : "no such directory"}});
        for (const auto& f : found) consider(f);
    }
    json rj = json::array(), failing = json::array();
    bool overall = !runs.empty();
    for (const auto& [id, e] : runs) {
        json failed = json::array();
        for (const auto& v : e.m["verdicts"])
            if (v["mandatory"].get<bool>() && !v["pass"].get<bool>()) {
                failed.push_back(v["name"]);
                failing.push_back({{"run_id", id}, {"check", v["name"]}});
            }
        if (!failed.empty()) overall = false;
        rj.push_back({{"run_id", id},
                      {"kind", e.m["kind"]},
                      {"path", e.path},
                      {"timestamp_ns", e.ts},
                      {"checks", e.m["verdicts"].size()},
                      {"pass", failed.empty()},
                      {"failed", failed}});
    }
    json notes = json::array();
    if (runs.empty()) notes.push_back("no valid manifests: overall verdict is fail");
    json rep = {{"version", version_string()},
                {"generated_utc", iso_utc(std::chrono::system_clock::now())},
                {"overall_pass", overall},
                {"runs", rj},
                {"failing_checks", failing},
                {"missing", missing},
                {"corrupt", corrupt},
                {"superseded", superseded},
                {"notes", notes}};
    if (summary) {
        std::ostringstream s;
        s << "overall: " << (overall ? "PASS" : "FAIL") << " (" << runs.size() << " runs)\n";
        for (const auto& r : rj)
            s << "  " << (r["pass"].get<bool>() ? "PASS " : "FAIL ") << r["run_id"].get<std::string>() << " ["
              << r["kind"].get<std::string>() << "] " << r["checks"].get<size_t>() << " checks\n";
        for (const auto& f : failing)
            s << "  failing: " << f["run_id"].get<std::string>() << ": " << f["check"].get<std::string>() << "\n";
        for (const auto& m : missing)
            s << "  missing: " << m["path"].get<std::string>() << " (" << m["reason"].get<std::string>() << ")\n";
        for (const auto& c : corrupt)
            s << "  corrupt, excluded: " << c["path"].get<std::string>() << " (" << c["reason"].get<std::string>() << ")\n";
        for (const auto& x : superseded)
            s << "  superseded by a newer run: " << x["path"].get<std::string>() << "\n";
        for (const auto& n : notes) s << "  note: " << n.get<std::string>() << "\n";
        *summary = s.str();
    }
    return rep;
}

}  // namespace tlab
