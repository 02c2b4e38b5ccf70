#include "tlab/tlab.h"

#include <exception>
#include <new>
#include <string>

#include "tlab/experiments.hpp"
#include "tlab/limit.hpp"

struct tlab_config {
    tlab::KeyValues kv;
};

struct tlab_result {
    std::string manifest, payload, out_dir;
    bool pass = false;
};

namespace {

thread_local std::string last_error;

tlab_status set_error(tlab_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

// Maps whatever escaped the core onto a status code. Never lets an exception cross into C.
template <class F>
tlab_status guarded(F&& f) {
    try {
        last_error.clear();
        f();
        return TLAB_OK;
    } catch (const tlab::Error& e) {
        switch (e.kind()) {
            case tlab::ErrorKind::config:
            case tlab::ErrorKind::param:
            case tlab::ErrorKind::domain:
                return set_error(TLAB_ERR_CONFIG, e.what());
            default:
                return set_error(TLAB_ERR_RUNTIME, e.what());
        }
    } catch (const std::bad_alloc&) {
        return set_error(TLAB_ERR_RUNTIME, "out of memory");
    } catch (const std::exception& e) {
        return set_error(TLAB_ERR_RUNTIME, e.what());
    } catch (...) {
        return set_error(TLAB_ERR_RUNTIME, "unknown error");
    }
}

void merge(tlab::KeyValues& into, const tlab::KeyValues& from) {
    for (const auto& [k, v] : from) into[k] = v;
}

}  // namespace

extern "C" {

const char* tlab_version(void) { return tlab::version_string(); }

const char* tlab_last_error(void) { return last_error.c_str(); }

tlab_status tlab_config_new(tlab_config** out) {
    if (!out) return set_error(TLAB_ERR_ARGUMENT, "null output pointer");
    *out = nullptr;
    return guarded([&] { *out = new tlab_config; });
}

void tlab_config_free(tlab_config* cfg) { delete cfg; }

tlab_status tlab_config_load(tlab_config* cfg, const char* path) {
    if (!cfg || !path) return set_error(TLAB_ERR_ARGUMENT, "null argument");
    return guarded([&] { merge(cfg->kv, tlab::load_config_file(path)); });
}

tlab_status tlab_config_parse(tlab_config* cfg, const char* text) {
    if (!cfg || !text) return set_error(TLAB_ERR_ARGUMENT, "null argument");
    return guarded([&] { merge(cfg->kv, tlab::parse_config_text(text)); });
}

tlab_status tlab_config_set(tlab_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return set_error(TLAB_ERR_ARGUMENT, "null argument");
    return guarded([&] {
        const std::string k = key;
        if (k.empty() || k.find_first_of(" \t\r\n=#") != std::string::npos)
            tlab::fail(tlab::ErrorKind::config, "malformed key: '" + k + "'");
        cfg->kv[k] = value;
    });
}

tlab_status tlab_run(const char* kind, const tlab_config* cfg, const tlab_run_options* opts, tlab_result** out) {
    if (!kind || !out) return set_error(TLAB_ERR_ARGUMENT, "null argument");
    *out = nullptr;
    if (opts && opts->n_inputs > 0 && !opts->inputs) return set_error(TLAB_ERR_ARGUMENT, "null inputs");
    return guarded([&] {
        tlab::ExperimentConfig ec;
        ec.kind = tlab::parse_run_kind(kind);
        if (cfg) ec.kv = cfg->kv;
        if (opts) {
            ec.seed = opts->seed;
            ec.workers = opts->workers > 0 ? opts->workers : 1;
            if (opts->out_dir) ec.out_dir = opts->out_dir;
            for (size_t i = 0; i < opts->n_inputs; ++i) {
                if (!opts->inputs[i]) tlab::fail(tlab::ErrorKind::config, "null input directory");
                ec.inputs.emplace_back(opts->inputs[i]);
            }
        }
        const tlab::RunOutcome o = tlab::run_experiment(ec);
        auto* r = new tlab_result;
        r->manifest = o.manifest.dump(2);
        r->payload = o.payload.dump();
        r->out_dir = o.out_dir;
        r->pass = o.pass;
        *out = r;
    });
}

const char* tlab_result_manifest(const tlab_result* r) { return r ? r->manifest.c_str() : ""; }
const char* tlab_result_payload(const tlab_result* r) { return r ? r->payload.c_str() : ""; }
const char* tlab_result_out_dir(const tlab_result* r) { return r ? r->out_dir.c_str() : ""; }
int tlab_result_passed(const tlab_result* r) { return r && r->pass ? 1 : 0; }
void tlab_result_free(tlab_result* r) { delete r; }

tlab_status tlab_cov_selfsimilar(double s, double t, double H, double c_var, double* out) {
    if (!out) return set_error(TLAB_ERR_ARGUMENT, "null output pointer");
    return guarded([&] { *out = tlab::cov_selfsimilar(s, t, H, c_var); });
}

}  // extern "C"
