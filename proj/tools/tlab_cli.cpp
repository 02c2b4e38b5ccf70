// Command-line front end; talks to the library only through tlab.h.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tlab/tlab.h"

namespace {

std::string json_escape(const std::string& s) {
    std::string o;
    for (unsigned char c : s) {
        switch (c) {
            case '"': o += "\\\""; break;
            case '\\': o += "\\\\"; break;
            case '\n': o += "\\n"; break;
            case '\t': o += "\\t"; break;
            default:
                if (c < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", c);
                    o += buf;
                } else {
                    o += static_cast<char>(c);
                }
        }
    }
    return o;
}

int report_error(int status, const std::string& msg) {
    const int code = status == TLAB_ERR_RUNTIME ? 3 : 2;
    std::cerr << "{\"error\":{\"status\":" << code << ",\"message\":\"" << json_escape(msg) << "\"}}\n";
    return code;
}

struct Common {
    std::string config;
    uint64_t seed = 1;
    int workers = 1;
    std::string out;
    std::vector<std::string> sets;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tracer experiments"};
    app.set_version_flag("--version", std::string(tlab_version()));
    app.require_subcommand(1);

    Common c;
    int diagrams_n = -1;
    std::vector<std::string> report_dirs;
    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"field-cov", "Eulerian covariance: Monte Carlo against quadrature"},
        {"tracer-sim", "tracer ensemble: trajectories, MSD, Lagrangian stationarity"},
        {"hurst", "MSD slope fit against 2H, with a Brownian control"},
        {"diagrams", "census of complete diagrams"},
        {"moments", "moments of the limit process from the diagram formula"},
        {"limit-sim", "simulate the limit process (spectral or moving average)"},
        {"rosenblatt-check", "spectral vs moving-average equivalence report"},
        {"report", "aggregate run manifests"},
    };
    for (const auto& [name, help] : kinds) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", c.config, "key=value config file ([section] headers allowed)");
        sub->add_option("--seed", c.seed, "master seed")->capture_default_str();
        sub->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--out", c.out, "output directory (default runs/<run id>)");
        sub->add_option("--set", c.sets, "override a config key (key=value), repeatable");
        if (name == "diagrams") sub->add_option("--n", diagrams_n, "number of nodes (1..8)");
        if (name == "report") sub->add_option("dirs", report_dirs, "run directories")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string kind = app.get_subcommands().front()->get_name();

    tlab_config* cfg = nullptr;
    if (tlab_config_new(&cfg) != TLAB_OK) return report_error(3, tlab_last_error());
    int st = TLAB_OK;
    if (!c.config.empty()) st = tlab_config_load(cfg, c.config.c_str());
    for (const auto& kv : c.sets) {
        if (st != TLAB_OK) break;
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            tlab_config_free(cfg);
            return report_error(2, "--set expects key=value, got '" + kv + "'");
        }
        st = tlab_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    if (st == TLAB_OK && diagrams_n >= 0) st = tlab_config_set(cfg, "diagrams.n", std::to_string(diagrams_n).c_str());
    if (st != TLAB_OK) {
        const std::string msg = tlab_last_error();
        tlab_config_free(cfg);
        return report_error(st, msg);
    }

    std::vector<const char*> inputs;
    for (const auto& d : report_dirs) inputs.push_back(d.c_str());
    tlab_run_options opts{c.seed, c.workers, c.out.empty() ? nullptr : c.out.c_str(), inputs.data(), inputs.size()};
    tlab_result* res = nullptr;
    st = tlab_run(kind.c_str(), cfg, &opts, &res);
    tlab_config_free(cfg);
    if (st != TLAB_OK) return report_error(st, tlab_last_error());

    std::cout << tlab_result_payload(res) << std::endl;
    std::cerr << kind << ": " << (tlab_result_passed(res) ? "PASS" : "FAIL") << "  (" << tlab_result_out_dir(res)
              << ")\n";
    tlab_result_free(res);
    return 0;
}
