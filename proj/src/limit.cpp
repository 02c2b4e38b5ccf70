#include "tlab/limit.hpp"

#include <cstdio>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tlab/diagrams.hpp"
#include "tlab/parallel.hpp"

namespace tlab {

namespace {

double hurst_of(const SpectrumParams& p) {
    const double H = scaling_exponents(p).hurst;
    if (!(H > 0.5 && H < 1.0)) fail(ErrorKind::param, "limit processes need 1/2 < H < 1");
    return H;
}

}  // namespace

double spectral_k_max(const SpectralConfig& c) {
    if (!(c.u_max > 0.0)) fail(ErrorKind::param, "u_max must be > 0");
    return std::pow(c.u_max / c.params.r0, 1.0 / (2.0 * c.params.beta));
}

double spectral_step(const SpectralConfig& c) {
    if (!(c.grid.step > 0.0) || c.grid.points < 1) fail(ErrorKind::param, "invalid output grid");
    if (!(c.step_factor > 0.0)) fail(ErrorKind::param, "step_factor must be > 0");
    const double theta_max = 0.5 * c.u_max;
    const double m = std::ceil(c.grid.step * theta_max / c.step_factor);
    return c.grid.step / m;
}

SpectralPath simulate_spectral(const SpectralConfig& c, uint64_t seed) {
    hurst_of(c.params);
    SamplerOptions o;
    o.variant = FieldVariant::limit;
    o.n_modes = c.n_modes;
    o.k_max = spectral_k_max(c);
    o.projection = Projection::identity;
    o.pair_geometry = c.want_x || c.want_xt;
    o.mode_seed = derive_seed(seed, 1);
    o.noise_seed = derive_seed(seed, 2);
    FieldSampler fs(c.params, o);
    const int d = c.params.d;
    const double h = spectral_step(c);
    const long per = std::lround(c.grid.step / h);
    const Vec3 origin{0.0, 0.0, 0.0};
    const bool want[3] = {c.want_z, c.want_x, c.want_xt};
    const Projection proj[3] = {Projection::identity, Projection::gamma, Projection::complement};
    SpectralPath out;
    out.rep.resize(3);
    Vec3 u0[3], acc[3];
    for (int r = 0; r < 3; ++r) {
        acc[r] = origin;
        if (want[r]) {
            u0[r] = fs.evaluate(origin, proj[r]);
            out.rep[r].assign(c.grid.points, std::vector<double>(d, 0.0));
        }
    }
    for (int g = 0; g < c.grid.points; ++g) {
        for (long s = 0; s < per; ++s) {
            fs.step(h);
            for (int r = 0; r < 3; ++r) {
                if (!want[r]) continue;
                const Vec3 u1 = fs.evaluate(origin, proj[r]);
                for (int j = 0; j < d; ++j) acc[r][j] += 0.5 * h * (u0[r][j] + u1[j]);
                u0[r] = u1;
            }
        }
        for (int r = 0; r < 3; ++r)
            if (want[r])
                for (int j = 0; j < d; ++j) {
                    if (!std::isfinite(acc[r][j])) fail(ErrorKind::numeric, "non-finite limit path");
                    out.rep[r][g][j] = acc[r][j];
                }
    }
    return out;
}

double spectral_variance_ratio(const SpectralConfig& c, double t) {
    const double H = hurst_of(c.params);
    const double e = 2.0 * H - 1.0;
    // tau = t v^{1/e} absorbs the tau^{2H-2} singularity
    auto f = [&](double v) {
        const double tau = t * std::pow(v, 1.0 / e);
        const double P = boost::math::gamma_p(1.0 - H, 0.5 * c.u_max * tau);
        return (t - tau) * P * P;
    };
    double num = 0.0;
    const int panels = 64;
    for (int i = 0; i < panels; ++i) {
        // geometric panels near v = 0 where P varies fastest
        const double lo = i == 0 ? 0.0 : std::pow(2.0, -(panels - i) * 0.5);
        const double hi = std::pow(2.0, -(panels - i - 1) * 0.5);
        num += boost::math::quadrature::gauss<double, 15>::integrate(f, lo, std::min(hi, 1.0));
    }
    num *= std::pow(t, e) / e;
    const double full = std::pow(t, 2.0 * H) / (e * 2.0 * H);
    return num / full;
}

// ---------------------------------------------------------------------------

double MovingAverageModel::covariance(int a, int b) const {
    return 2.0 * c * c * K[a].cwiseProduct(K[b]).sum();
}

MovingAverageModel build_moving_average(double H, const LimitGrid& grid, int grid_cells, double c,
                                        double tail_fraction, double ratio) {
    if (!(H > 0.5 && H < 1.0)) fail(ErrorKind::param, "moving average needs 1/2 < H < 1");
    if (grid_cells < grid.points) fail(ErrorKind::param, "grid_cells smaller than the number of grid points");
    if (!(ratio > 1.0)) fail(ErrorKind::param, "cell growth ratio must exceed 1");
    MovingAverageModel m;
    m.H = H;
    m.c = c;
    m.grid = grid;
    const double tmax = grid.t_max();
    const int per = (grid_cells + grid.points - 1) / grid.points;
    const int n_in = per * grid.points;
    const double h = tmax / n_in;
    const double B = boost::math::beta(0.5 * H, 1.0 - H);
    // neglected L^2 fraction of the kernel beyond -L is below
    //   4 (2H-1) (L/t)^{H-1} / ((1-H)(1+H) B)
    const double rhs = 4.0 * (2.0 * H - 1.0) / ((1.0 - H) * (1.0 + H) * B * tail_fraction);
    m.L = tmax * std::pow(rhs, 1.0 / (1.0 - H));
    std::vector<double> left = {0.0};
    for (double w = h; left.back() > -m.L; w *= ratio) left.push_back(left.back() - w);
    for (size_t i = left.size() - 1; i > 0; --i) {
        m.lo.push_back(left[i]);
        m.hi.push_back(left[i - 1]);
    }
    for (int i = 0; i < n_in; ++i) {
        m.lo.push_back(h * i);
        m.hi.push_back(h * (i + 1));
    }
    const int nc = m.cells();
    const double p = 1.0 - 0.5 * H, q1 = 0.5 * H;
    const double mexp = 1.0 / q1;  // s = lo + h v^m makes (s - lo)^{1-p} linear in v
    using GL = boost::math::quadrature::gauss<double, 8>;
    const auto& xs = GL::abscissa();
    const auto& ws = GL::weights();
    std::vector<double> vnode, vw;
    for (size_t i = 0; i < xs.size(); ++i) {
        for (int sgn : {-1, 1}) {
            if (xs[i] == 0.0 && sgn < 0) continue;
            const double x = 0.5 * (1.0 + sgn * xs[i]);
            vnode.push_back(x);
            vw.push_back(0.5 * ws[i]);
        }
    }
    const int nq = static_cast<int>(vnode.size());
    std::vector<double> isq(nc);
    for (int i = 0; i < nc; ++i) isq[i] = 1.0 / std::sqrt(m.hi[i] - m.lo[i]);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nc, nc);
    int panel = 0;
    for (int g = 0; g < grid.points; ++g) {
        const int upto = per * (g + 1);
        const int np = upto - panel;
        Eigen::MatrixXd Phi(nc, static_cast<Eigen::Index>(np) * nq);
        Eigen::VectorXd W(static_cast<Eigen::Index>(np) * nq);
        for (int k = 0; k < np; ++k) {
            const double a = h * (panel + k);
            for (int q = 0; q < nq; ++q) {
                const double v = vnode[q];
                const double s = a + h * std::pow(v, mexp);
                const Eigen::Index col = static_cast<Eigen::Index>(k) * nq + q;
                W(col) = vw[q] * h * mexp * std::pow(v, mexp - 1.0);
                for (int i = 0; i < nc; ++i) {
                    const double x1 = s - m.lo[i], x2 = s - m.hi[i];
                    const double val = (x1 > 0.0 ? std::pow(x1, q1) : 0.0) - (x2 > 0.0 ? std::pow(x2, q1) : 0.0);
                    Phi(i, col) = val / q1 * isq[i];
                }
            }
        }
        acc.noalias() += Phi * W.asDiagonal() * Phi.transpose();
        panel = upto;
        m.K.push_back(acc);
        m.trace.push_back(acc.trace());
    }
    (void)p;
    return m;
}

std::vector<std::vector<std::vector<double>>> simulate_moving_average_batch(const MovingAverageModel& m,
                                                                             uint64_t seed, long first, long count,
                                                                             int copies) {
    const int nc = m.cells();
    std::vector<std::vector<std::vector<double>>> out(
        copies, std::vector<std::vector<double>>(count, std::vector<double>(m.grid.points, 0.0)));
    for (int cp = 0; cp < copies; ++cp) {
        Eigen::MatrixXd Xi(nc, count);
        for (long i = 0; i < count; ++i) {
            NormalSource rng(derive_seed(derive_seed(seed, first + i), cp));
            for (int r = 0; r < nc; ++r) Xi(r, i) = rng();
        }
        for (int g = 0; g < m.grid.points; ++g) {
            const Eigen::MatrixXd Y = m.K[g] * Xi;
            for (long i = 0; i < count; ++i) {
                const double q = Xi.col(i).dot(Y.col(i)) - m.trace[g];
                out[cp][i][g] = m.c * q;
            }
        }
    }
    return out;
}

std::vector<std::vector<double>> simulate_moving_average(const MovingAverageModel& m, uint64_t seed, int copies) {
    auto b = simulate_moving_average_batch(m, seed, 0, 1, copies);
    std::vector<std::vector<double>> out(copies);
    for (int cp = 0; cp < copies; ++cp) out[cp] = b[cp][0];
    return out;
}

double moving_average_variance(double H, double c) {
    const double B = boost::math::beta(0.5 * H, 1.0 - H);
    return 2.0 * c * c * B * B / (H * (2.0 * H - 1.0));
}

double moving_average_constant(const SpectrumParams& p) {
    const double H = hurst_of(p);
    return cycle_constant_C(p) / boost::math::beta(0.5 * H, 1.0 - H);
}

double cov_selfsimilar(double s, double t, double H, double c_var) {
    if (s < 0.0 || t < 0.0) fail(ErrorKind::param, "cov_selfsimilar needs s, t >= 0");
    if (!(c_var > 0.0)) fail(ErrorKind::param, "cov_selfsimilar needs c_var > 0");
    return 0.5 * c_var * (std::pow(s, 2.0 * H) + std::pow(t, 2.0 * H) - std::pow(std::abs(t - s), 2.0 * H));
}

double spectral_covariance(const SpectralConfig& c, double s, double t, double c_var) {
    if (s < 0.0 || t < 0.0) fail(ErrorKind::param, "spectral_covariance needs s, t >= 0");
    const double H = hurst_of(c.params);
    auto G = [&](double u) { return u > 0.0 ? std::pow(u, 2.0 * H) * spectral_variance_ratio(c, u) : 0.0; };
    return 0.5 * c_var * (G(s) + G(t) - G(std::abs(t - s)));
}

FitResult holder_exponent(const std::vector<std::vector<double>>& paths, double step) {
    if (paths.empty() || !(step > 0.0)) fail(ErrorKind::param, "holder_exponent needs paths and a positive step");
    const size_t n = paths[0].size();
    std::vector<double> x, y;
    for (size_t m = 1; 2 * m <= n; m *= 2) {
        double acc = 0.0;
        for (const auto& p : paths) {
            if (p.size() != n) fail(ErrorKind::param, "paths of unequal length");
            double mx = 0.0;
            for (size_t i = 0; i + m <= n; ++i) {
                const double a = i == 0 ? 0.0 : p[i - 1];  // x(0) = 0
                mx = std::max(mx, std::abs(p[i + m - 1] - a));
            }
            acc += mx;
        }
        x.push_back(std::log(m * step));
        y.push_back(std::log(acc / paths.size()));
    }
    if (x.size() < 3) fail(ErrorKind::param, "holder_exponent needs at least 3 dyadic lags");
    return linear_fit(x, y);
}

namespace {

Estimate mean_of(const std::vector<double>& v) {
    std::vector<std::vector<double>> obs(v.size());
    for (size_t i = 0; i < v.size(); ++i) obs[i] = {v[i]};
    return jackknife(obs, 20, [](const std::vector<double>& m) { return m[0]; });
}

Check make_check(const std::string& name, const Estimate& mc, const Estimate& ref, bool mandatory = true) {
    const Comparison cmp = compare_to_prediction(mc, ref);
    return {name, mc.value, mc.stderr_, ref.value, ref.stderr_, cmp.z, cmp.pass, mandatory};
}

// one-sided: value exceeds zero by more than k standard errors
Check exceeds_zero(const std::string& name, const Estimate& e, double k) {
    const double z = e.stderr_ > 0.0 ? e.value / e.stderr_ : (e.value > 0.0 ? INFINITY : 0.0);
    return {name, e.value, e.stderr_, 0.0, 0.0, z, z > k, true};
}

}  // namespace

RosenblattReport rosenblatt_equivalence_report(const SpectrumParams& p, const RosenblattBudget& b, uint64_t seed) {
    const double H = hurst_of(p);
    if (b.spectral_paths < 20 || b.ma_paths < 20 || b.holder_paths < 1)
        fail(ErrorKind::param, "equivalence report needs at least 20 paths per representation");
    if (b.grid.points < 2) fail(ErrorKind::param, "equivalence report needs at least 2 grid points");
    const int d = p.d, P = b.grid.points;
    RosenblattReport r;
    r.H = H;
    r.C = cycle_constant_C(p);
    r.c_ma = moving_average_constant(p);
    r.c_var = moment_Z(Psi{{1.0}, {1.0}}, 2, p, b.quad_points).value;

    SpectralConfig sc;
    sc.params = p;
    sc.grid = b.grid;
    sc.n_modes = b.n_modes;
    sc.u_max = b.u_max;
    // xs[sample][time], samples ordered path-major then component
    std::vector<std::vector<std::vector<double>>> spaths(b.spectral_paths);
    parallel_for(b.spectral_paths, b.workers,
                 [&](long i) { spaths[i] = simulate_spectral(sc, derive_seed(seed, 10, i)).rep[0]; });
    std::vector<std::vector<double>> xs;
    xs.reserve(spaths.size() * d);
    for (const auto& path : spaths)
        for (int j = 0; j < d; ++j) {
            std::vector<double> v(P);
            for (int g = 0; g < P; ++g) v[g] = path[g][j];
            xs.push_back(std::move(v));
        }
    spaths.clear();

    const MovingAverageModel m = build_moving_average(H, b.grid, b.grid_cells, r.c_ma);
    const long batch = 2000, nb = (b.ma_paths + batch - 1) / batch;
    std::vector<std::vector<std::vector<std::vector<double>>>> mb(nb);
    parallel_for(nb, b.workers, [&](long k) {
        const long first = k * batch, count = std::min(batch, b.ma_paths - first);
        mb[k] = simulate_moving_average_batch(m, derive_seed(seed, 20), first, count, d);
    });
    std::vector<std::vector<double>> xm;
    xm.reserve(b.ma_paths * d);
    for (const auto& blk : mb)
        for (size_t i = 0; i < blk[0].size(); ++i)
            for (int j = 0; j < d; ++j) xm.push_back(blk[j][i]);
    mb.clear();
    r.spectral_samples = static_cast<long>(xs.size());
    r.ma_samples = static_cast<long>(xm.size());

    auto column_products = [](const std::vector<std::vector<double>>& x, int a, int c) {
        std::vector<double> v(x.size());
        for (size_t i = 0; i < x.size(); ++i) v[i] = x[i][a] * x[i][c];
        return v;
    };
    auto zscore = [](double x, double se, double ref) { return se > 0.0 ? std::abs(x - ref) / se : INFINITY; };
    for (int a = 0; a < P; ++a)
        for (int c = a; c < P; ++c) {
            CovCell cell;
            cell.a = a;
            cell.b = c;
            cell.s = b.grid.t(a);
            cell.t = b.grid.t(c);
            cell.spectral = mean_of(column_products(xs, a, c));
            cell.ma = mean_of(column_products(xm, a, c));
            cell.spectral_exact = spectral_covariance(sc, cell.s, cell.t, r.c_var);
            cell.ma_exact = m.covariance(a, c);
            cell.continuum = cov_selfsimilar(cell.s, cell.t, H, r.c_var);
            cell.z_pair = zscore(cell.spectral.value, std::hypot(cell.spectral.stderr_, cell.ma.stderr_), cell.ma.value);
            cell.z_spectral = zscore(cell.spectral.value, cell.spectral.stderr_, cell.spectral_exact);
            cell.z_ma = zscore(cell.ma.value, cell.ma.stderr_, cell.ma_exact);
            cell.z_spectral_cont = zscore(cell.spectral.value, cell.spectral.stderr_, cell.continuum);
            cell.z_ma_cont = zscore(cell.ma.value, cell.ma.stderr_, cell.continuum);
            const std::string tag = "cov(" + std::to_string(a) + "," + std::to_string(c) + ") ";
            r.checks.push_back(make_check(tag + "spectral vs moving-average", cell.spectral, cell.ma));
            r.checks.push_back(make_check(tag + "spectral vs truncated law", cell.spectral, {cell.spectral_exact, 0.0}));
            r.checks.push_back(make_check(tag + "moving-average vs discrete law", cell.ma, {cell.ma_exact, 0.0}));
            r.checks.push_back(make_check(tag + "spectral vs self-similar", cell.spectral, {cell.continuum, 0.0}));
            r.checks.push_back(make_check(tag + "moving-average vs self-similar", cell.ma, {cell.continuum, 0.0}));
            r.cells.push_back(cell);
        }

    // marginal moments at the last grid time
    const int last = P - 1;
    const Psi psi{{1.0}, {b.grid.t(last)}};
    std::vector<double> zs(xs.size()), zm(xm.size());
    for (size_t i = 0; i < xs.size(); ++i) zs[i] = xs[i][last];
    for (size_t i = 0; i < xm.size(); ++i) zm[i] = xm[i][last];
    r.spectral_z1 = cumulants(zs);
    r.ma_z1 = cumulants(zm);
    Estimate pred[5];
    for (int k = 2; k <= 4; ++k) pred[k] = moment_Z(psi, k, p, b.quad_points);
    for (int k = 2; k <= 4; ++k) {
        const std::string e = "E Z^" + std::to_string(k);
        r.checks.push_back(make_check("spectral " + e + " vs diagrams", r.spectral_z1.raw[k], pred[k]));
        r.checks.push_back(make_check("moving-average " + e + " vs diagrams", r.ma_z1.raw[k], pred[k]));
        if (k > 2) r.checks.push_back(make_check("spectral vs moving-average " + e, r.spectral_z1.raw[k], r.ma_z1.raw[k]));
    }
    // shape: predicted skewness / excess kurtosis, errors from the quadrature errors (first order)
    const double m2 = pred[2].value;
    const Estimate skew{pred[3].value / std::pow(m2, 1.5),
                        std::hypot(pred[3].stderr_ / std::pow(m2, 1.5), 1.5 * pred[3].value * pred[2].stderr_ / std::pow(m2, 2.5))};
    const Estimate kurt{pred[4].value / (m2 * m2) - 3.0,
                        std::hypot(pred[4].stderr_ / (m2 * m2), 2.0 * pred[4].value * pred[2].stderr_ / (m2 * m2 * m2))};
    for (auto [name, st] : {std::pair<std::string, const MomentStats*>{"spectral", &r.spectral_z1},
                            std::pair<std::string, const MomentStats*>{"moving-average", &r.ma_z1}}) {
        r.checks.push_back(exceeds_zero(name + " skewness > 0 (5 sigma)", st->skewness, 5.0));
        r.checks.push_back(exceeds_zero(name + " excess kurtosis > 0 (5 sigma)", st->excess_kurtosis, 5.0));
        r.checks.push_back(make_check(name + " skewness vs diagrams", st->skewness, skew));
        r.checks.push_back(make_check(name + " excess kurtosis vs diagrams", st->excess_kurtosis, kurt));
    }

    // self-similarity E Z(2t)^2 / E Z(t)^2 = 2^{2H} for every grid pair (t, 2t)
    for (int a = 0; a < P; ++a)
        for (int c = a + 1; c < P; ++c) {
            if (std::abs(b.grid.t(c) - 2.0 * b.grid.t(a)) > 1e-9 * b.grid.t(c)) continue;
            for (auto [name, x] : {std::pair<std::string, const std::vector<std::vector<double>>*>{"spectral", &xs},
                                   std::pair<std::string, const std::vector<std::vector<double>>*>{"moving-average", &xm}}) {
                std::vector<std::vector<double>> obs(x->size());
                for (size_t i = 0; i < x->size(); ++i) obs[i] = {(*x)[i][a] * (*x)[i][a], (*x)[i][c] * (*x)[i][c]};
                const Estimate ratio = jackknife(obs, 20, [](const std::vector<double>& mm) { return mm[1] / mm[0]; });
                char buf[64];
                std::snprintf(buf, sizeof buf, " E Z(%g)^2 / E Z(%g)^2", b.grid.t(c), b.grid.t(a));
                r.checks.push_back(make_check(name + buf, ratio, {std::pow(2.0, 2.0 * H), 0.0}));
            }
        }

    // dyadic Hölder exponent of moving-average paths on a fine grid
    {
        const LimitGrid fine{1.0 / b.holder_points, b.holder_points};
        const MovingAverageModel mf = build_moving_average(H, fine, 4 * b.holder_points, r.c_ma);
        const auto hp = simulate_moving_average_batch(mf, derive_seed(seed, 30), 0, b.holder_paths, 1)[0];
        const FitResult f = holder_exponent(hp, fine.step);
        // informational: the max over 1/delta increments carries a log(1/delta) factor that a
        // finite dyadic depth cannot separate from the power law
        Check c{"Hoelder exponent >= H - 0.1", f.slope, f.stderr_, H - 0.1, 0.0, 0.0, f.slope >= H - 0.1, false};
        c.z = f.stderr_ > 0.0 ? (f.slope - (H - 0.1)) / f.stderr_ : 0.0;
        r.checks.push_back(c);
    }

    r.tests = static_cast<int>(r.checks.size());
    r.pass = true;
    for (const auto& c : r.checks)
        if (c.mandatory && !c.pass) r.pass = false;
    return r;
}

}  // namespace tlab
