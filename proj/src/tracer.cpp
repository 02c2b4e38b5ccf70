#include "tlab/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tlab/parallel.hpp"
#include "tlab/stats.hpp"

namespace tlab {

void TrajectoryConfig::validate() const {
    if (!(T >= 1.0)) fail(ErrorKind::param, "trajectory T must be >= 1");
    if (!(dt > 0.0)) fail(ErrorKind::param, "dt must be > 0");
    if (!(t_max >= dt)) fail(ErrorKind::param, "t_max must be >= dt");
    if (substeps < 1) fail(ErrorKind::param, "substeps must be >= 1");
    if (record_every < 1) fail(ErrorKind::param, "record_every must be >= 1");
}

int default_substeps(double theta_max, double dt) {
    int s = static_cast<int>(std::ceil(theta_max * dt / 0.1));
    s = std::max(s, 2);
    return s % 2 == 0 ? s : s + 1;
}

namespace {

struct Runner {
    FieldSampler& fs;
    TrajectoryConfig cfg;
    long nsteps = 0;
    int d = 2;

    Runner(FieldSampler& s, const TrajectoryConfig& c) : fs(s), cfg(c), d(s.params().d) {
        cfg.validate();
        if (std::abs(fs.modes().T_scale - cfg.T) > 1e-12 * cfg.T)
            fail(ErrorKind::mismatch, "sampler scale T differs from trajectory config T");
        if (fs.options().variant == FieldVariant::limit)
            fail(ErrorKind::mismatch, "tracers need a spatial field, not the limit integrand");
        nsteps = std::llround(cfg.t_max / cfg.dt);
        if (nsteps < 1) nsteps = 1;
        cfg.dt = cfg.t_max / static_cast<double>(nsteps);
    }

    void advance(int k) {
        if (cfg.frozen) return;
        const double sub = cfg.dt / cfg.substeps;
        for (int i = 0; i < k; ++i) fs.step(sub);
    }

    Vec3 V(const Vec3& z) const {
        Vec3 x{};
        for (int j = 0; j < d; ++j) x[j] = z[j] / cfg.T;
        return fs.evaluate(x);
    }

    static void check(const Vec3& z, int d, double t) {
        for (int j = 0; j < d; ++j)
            if (!std::isfinite(z[j]) || std::abs(z[j]) > 1e150)
                fail(ErrorKind::numeric, "position overflow at t = " + std::to_string(t) +
                                             " (step too large for the field magnitude)");
    }

    TrajectoryPair run(bool want_z, bool want_y) {
        TrajectoryPair out;
        for (Trajectory* tr : {&out.z, &out.y}) {
            tr->config = cfg;
            tr->params = fs.params();
            tr->mode_seed = fs.options().mode_seed;
            tr->noise_seed = fs.ensemble().seed;
            tr->d = d;
        }
        out.y.config.x0 = Vec3{0.0, 0.0, 0.0};
        Vec3 z = cfg.x0, y{0.0, 0.0, 0.0};
        const Vec3 origin{0.0, 0.0, 0.0};
        const double h = cfg.dt;
        const int first = cfg.substeps / 2, second = cfg.substeps - first;
        Vec3 y0 = want_y ? fs.evaluate(origin) : origin;
        for (long n = 0; n <= nsteps; ++n) {
            const double t = static_cast<double>(n) * h;
            Vec3 k1{};
            if (want_z) k1 = V(z);
            if (n % cfg.record_every == 0 || n == nsteps) {
                if (want_z) {
                    out.z.times.push_back(t);
                    out.z.positions.push_back(z);
                    out.z.velocities.push_back(k1);
                }
                if (want_y) {
                    out.y.times.push_back(t);
                    out.y.positions.push_back(y);
                }
            }
            if (n == nsteps) break;
            advance(first);
            Vec3 k2{}, k3{}, ym{};
            if (want_y) ym = fs.evaluate(origin);
            Vec3 zt{};
            if (want_z) {
                for (int j = 0; j < d; ++j) zt[j] = z[j] + 0.5 * h * k1[j];
                k2 = V(zt);
                if (cfg.integrator == Integrator::rk4) {
                    for (int j = 0; j < d; ++j) zt[j] = z[j] + 0.5 * h * k2[j];
                    k3 = V(zt);
                }
            }
            advance(second);
            Vec3 y1{};
            if (want_y) y1 = fs.evaluate(origin);
            if (want_z) {
                if (cfg.integrator == Integrator::rk4) {
                    for (int j = 0; j < d; ++j) zt[j] = z[j] + h * k3[j];
                    const Vec3 k4 = V(zt);
                    for (int j = 0; j < d; ++j) z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                } else {
                    for (int j = 0; j < d; ++j) z[j] += h * k2[j];
                }
                check(z, d, t + h);
            }
            if (want_y) {
                for (int j = 0; j < d; ++j)
                    y[j] += cfg.integrator == Integrator::rk4 ? h / 6.0 * (y0[j] + 4.0 * ym[j] + y1[j]) : h * ym[j];
                check(y, d, t + h);
                y0 = y1;
            }
        }
        return out;
    }
};

}  // namespace

Trajectory integrate_z_T(FieldSampler& sampler, const TrajectoryConfig& cfg) {
    return Runner(sampler, cfg).run(true, false).z;
}

Trajectory integrate_y_T(FieldSampler& sampler, const TrajectoryConfig& cfg) {
    return Runner(sampler, cfg).run(false, true).y;
}

TrajectoryPair integrate_pair(FieldSampler& sampler, const TrajectoryConfig& cfg) {
    return Runner(sampler, cfg).run(true, true);
}

Vec3 position_at(const Trajectory& tr, double t) {
    const auto& ts = tr.times;
    if (ts.empty()) fail(ErrorKind::param, "empty trajectory");
    if (t < ts.front() - 1e-12 || t > ts.back() * (1.0 + 1e-12) + 1e-12)
        fail(ErrorKind::param, "time outside the trajectory span");
    auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.end()) return tr.positions.back();
    const size_t i = static_cast<size_t>(it - ts.begin());
    if (i == 0 || *it == t) return tr.positions[i];
    const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
    Vec3 p{};
    for (int j = 0; j < 3; ++j) p[j] = (1.0 - w) * tr.positions[i - 1][j] + w * tr.positions[i][j];
    return p;
}

std::vector<MsdPoint> msd_curve(const std::vector<Trajectory>& ens, const std::vector<double>& lags, int blocks) {
    const long n = static_cast<long>(ens.size());
    if (n < 100) fail(ErrorKind::param, "msd_curve needs at least 100 trajectories");
    if (blocks < 2 || blocks > n) fail(ErrorKind::param, "invalid jackknife block count");
    std::vector<MsdPoint> out;
    for (double t : lags) {
        for (const auto& tr : ens)
            if (t > tr.times.back() * (1.0 + 1e-12)) fail(ErrorKind::param, "lag beyond t_max");
        std::vector<double> bsum(blocks, 0.0);
        std::vector<long> bcnt(blocks, 0);
        double total = 0.0;
        for (long i = 0; i < n; ++i) {
            const Vec3 p = position_at(ens[i], t);
            double s = 0.0;
            for (int j = 0; j < ens[i].d; ++j) {
                const double dz = p[j] - ens[i].positions[0][j];
                s += dz * dz;
            }
            const int b = static_cast<int>(i * blocks / n);
            bsum[b] += s;
            bcnt[b] += 1;
            total += s;
        }
        const double mean = total / n;
        double acc = 0.0;
        for (int b = 0; b < blocks; ++b) {
            const double th = (total - bsum[b]) / static_cast<double>(n - bcnt[b]);
            acc += (th - mean) * (th - mean);
        }
        out.push_back({t, mean, std::sqrt((blocks - 1.0) / blocks * acc)});
    }
    return out;
}

std::vector<Vec3> lagrangian_series(FieldSampler& fresh, const Trajectory& tr) {
    if (fresh.ensemble().seed != tr.noise_seed || fresh.options().mode_seed != tr.mode_seed)
        fail(ErrorKind::mismatch, "sampler seeds differ from the trajectory's lineage");
    if (fresh.time() != 0.0) fail(ErrorKind::mismatch, "lagrangian_series needs a sampler at time 0");
    const auto& cfg = tr.config;
    if (std::abs(fresh.modes().T_scale - cfg.T) > 1e-12 * cfg.T)
        fail(ErrorKind::mismatch, "sampler scale T differs from the trajectory's T");
    const int d = fresh.params().d;
    const double sub = cfg.dt / cfg.substeps;
    const int first = cfg.substeps / 2, second = cfg.substeps - first;
    std::vector<Vec3> out;
    long step = 0;
    for (size_t i = 0; i < tr.times.size(); ++i) {
        const long target = std::llround(tr.times[i] / cfg.dt);
        while (step < target) {
            if (!cfg.frozen) {
                for (int k = 0; k < first; ++k) fresh.step(sub);
                for (int k = 0; k < second; ++k) fresh.step(sub);
            }
            ++step;
        }
        Vec3 x{};
        for (int j = 0; j < d; ++j) x[j] = tr.positions[i][j] / cfg.T;
        out.push_back(fresh.evaluate(x));
    }
    return out;
}

double resolved_dt(double theta_max, double t_max, double dt_max, double resolution) {
    if (!(t_max > 0.0) || !(dt_max > 0.0) || !(resolution > 0.0)) fail(ErrorKind::param, "invalid step request");
    const double n = std::max(std::ceil(t_max / dt_max), std::ceil(t_max * theta_max / resolution));
    return t_max / n;
}

std::vector<TrajectoryPair> simulate_ensemble(const EnsembleSpec& spec, long first, long count, uint64_t seed,
                                              int workers) {
    if (count < 0 || first < 0) fail(ErrorKind::param, "negative ensemble range");
    if (spec.variant != FieldVariant::rescaled && spec.variant != FieldVariant::gaussian)
        fail(ErrorKind::param, "ensembles use the rescaled field or the gaussian control");
    std::vector<TrajectoryPair> out(count);
    parallel_for(count, workers, [&](long i) {
        SamplerOptions o;
        o.variant = spec.variant;
        o.T = spec.traj.T;
        o.n_modes = spec.n_modes;
        o.control_rate = spec.control_rate;
        o.mode_seed = derive_seed(seed, 1, first + i);
        o.noise_seed = derive_seed(seed, 2, first + i);
        FieldSampler fs(spec.params, o);
        TrajectoryConfig c = spec.traj;
        if (c.substeps <= 0) c.substeps = default_substeps(fs.modes().theta_max(), c.dt);
        if (spec.want_y)
            out[i] = integrate_pair(fs, c);
        else
            out[i].z = integrate_z_T(fs, c);
    });
    return out;
}

ProximityResult frozen_proximity(const SpectrumParams& p, const std::vector<double>& T_list, long pairs, double t,
                                 int n_modes, uint64_t seed, int workers, double dt_max) {
    if (pairs < 2) fail(ErrorKind::param, "frozen_proximity needs at least 2 pairs");
    if (T_list.size() < 2) fail(ErrorKind::param, "frozen_proximity needs at least 2 values of T");
    ProximityResult res;
    for (size_t k = 0; k < T_list.size(); ++k) {
        const double T = T_list[k];
        if (k > 0 && !(T > T_list[k - 1])) fail(ErrorKind::param, "T_list must be increasing");
        EnsembleSpec s;
        s.params = p;
        s.n_modes = n_modes;
        s.want_y = true;
        s.traj.T = T;
        s.traj.t_max = t;
        s.traj.record_every = 1 << 30;  // endpoints only
        // dt from the fastest rate of this T (the mode set at T = T_k)
        const double theta = 0.5 * p.rate(p.cutoff_radius * T);
        s.traj.dt = resolved_dt(theta, t, dt_max);
        s.traj.substeps = 0;
        const auto ens = simulate_ensemble(s, 0, pairs, derive_seed(seed, 100 + k), workers);
        std::vector<double> dist(pairs);
        double y2 = 0.0;
        for (long i = 0; i < pairs; ++i) {
            const Vec3 &z = ens[i].z.positions.back(), &y = ens[i].y.positions.back();
            double dd = 0.0, yy = 0.0;
            for (int j = 0; j < p.d; ++j) {
                dd += (z[j] - y[j]) * (z[j] - y[j]);
                yy += y[j] * y[j];
            }
            dist[i] = std::sqrt(dd);
            y2 += yy;
        }
        const double rms = std::sqrt(y2 / pairs);
        if (!(rms > 0.0)) fail(ErrorKind::numeric, "frozen_proximity: y_T vanished");
        std::sort(dist.begin(), dist.end());
        const double med = pairs % 2 ? dist[pairs / 2] : 0.5 * (dist[pairs / 2 - 1] + dist[pairs / 2]);
        res.T.push_back(T);
        res.dt.push_back(s.traj.dt);
        res.median_ratio.push_back(med / rms);
    }
    res.decreasing = true;
    for (size_t k = 1; k < res.median_ratio.size(); ++k)
        if (!(res.median_ratio[k] < res.median_ratio[k - 1])) res.decreasing = false;
    return res;
}

std::vector<StationarityCheck> lagrangian_stationarity(const std::vector<Trajectory>& ens, int max_order,
                                                       int blocks) {
    const long n = static_cast<long>(ens.size());
    if (n < blocks || blocks < 2) fail(ErrorKind::param, "fewer replicas than jackknife blocks");
    if (max_order < 1 || max_order > 4) fail(ErrorKind::param, "max_order must be in 1..4");
    const int d = ens[0].d;
    std::vector<StationarityCheck> out;
    for (int j = 0; j < d; ++j)
        for (int k = 1; k <= max_order; ++k) {
            std::vector<std::vector<double>> obs(n);
            for (long r = 0; r < n; ++r) {
                const auto& v = ens[r].velocities;
                const size_t m = v.size();
                if (m < 3) fail(ErrorKind::param, "trajectory records fewer than 3 velocities");
                const size_t third = m / 3;
                double e = 0.0, l = 0.0;
                for (size_t i = 0; i < third; ++i) {
                    e += std::pow(v[i][j], k);
                    l += std::pow(v[m - third + i][j], k);
                }
                obs[r] = {e / third, l / third};
            }
            StationarityCheck c;
            c.component = j;
            c.order = k;
            c.early = jackknife(obs, blocks, [](const std::vector<double>& m) { return m[0]; });
            c.late = jackknife(obs, blocks, [](const std::vector<double>& m) { return m[1]; });
            c.diff = jackknife(obs, blocks, [](const std::vector<double>& m) { return m[1] - m[0]; });
            c.z = c.diff.stderr_ > 0.0 ? std::abs(c.diff.value) / c.diff.stderr_ : (c.diff.value == 0.0 ? 0.0 : INFINITY);
            c.pass = c.z < 3.0;
            out.push_back(c);
        }
    return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& tr) {
    std::ofstream o(path);
    if (!o) fail(ErrorKind::io, "cannot write " + path);
    o.precision(17);
    o << "t";
    for (int j = 0; j < tr.d; ++j) o << ",x" << j + 1;
    o << '\n';
    for (size_t i = 0; i < tr.times.size(); ++i) {
        o << tr.times[i];
        for (int j = 0; j < tr.d; ++j) o << ',' << tr.positions[i][j];
        o << '\n';
    }
}

void write_trajectory_sidecar(const std::string& path, const Trajectory& tr) {
    nlohmann::json j;
    j["mode_seed"] = tr.mode_seed;
    j["noise_seed"] = tr.noise_seed;
    KeyValues kv;
    params_to_kv(tr.params, kv, "");
    j["params"] = kv;
    j["config"] = {{"T", tr.config.T},
                   {"t_max", tr.config.t_max},
                   {"dt", tr.config.dt},
                   {"substeps", tr.config.substeps},
                   {"integrator", tr.config.integrator == Integrator::rk4 ? "rk4" : "midpoint"},
                   {"x0", std::vector<double>(tr.config.x0.begin(), tr.config.x0.begin() + tr.d)},
                   {"frozen", tr.config.frozen}};
    j["samples"] = tr.times.size();
    j["code_version"] = version_string();
    std::ofstream o(path);
    if (!o) fail(ErrorKind::io, "cannot write " + path);
    o << j.dump(2) << '\n';
}

}  // namespace tlab
