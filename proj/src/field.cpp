#include "tlab/field.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/random/sobol.hpp>
#include <algorithm>
#include <cmath>
#include <complex>

#include "tlab/parallel.hpp"

namespace tlab {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

ModeOptions mode_options(const SpectrumParams& p, const SamplerOptions& o) {
    ModeOptions mo;
    mo.n_modes = o.n_modes;
    mo.scheme = o.scheme;
    mo.seed = o.mode_seed;
    switch (o.variant) {
        case FieldVariant::base:
            mo.T_scale = 1.0;
            break;
        case FieldVariant::rescaled:
        case FieldVariant::gaussian:
            if (!(o.T >= 1.0)) fail(ErrorKind::param, "rescaled field needs T >= 1");
            mo.T_scale = o.T;
            break;
        case FieldVariant::limit:
            if (!(o.k_max > 0.0)) fail(ErrorKind::param, "limit integrand needs k_max > 0");
            mo.flat = true;
            mo.k_max = o.k_max;
            break;
    }
    (void)p;
    return mo;
}

ModeSet control_modes(ModeSet ms, const SpectrumParams& p, const SamplerOptions& o) {
    if (o.variant != FieldVariant::gaussian) return ms;
    if (!(o.control_rate > 0.0)) fail(ErrorKind::param, "control_rate must be > 0");
    // same spatial spectrum, every mode decorrelating at one fast rate
    for (int m = 0; m < ms.size(); ++m) {
        const double e = ms.spectral_weight(m);
        ms.theta[m] = o.control_rate;
        ms.amp[m] = std::sqrt(2.0 * o.control_rate * e);
    }
    (void)p;
    return ms;
}

// Sum over unordered half-mode pairs of the real parts of b_j(h1) b_j(h2)
// (wavevector k1 + k2) and b_j(h1) conj(b_j(h2)) (wavevector k1 - k2), each
// passed through Gamma (Comp = false) or I - Gamma (Comp = true).
template <int D, bool Comp>
void pair_sum(int P, const std::vector<size_t>& row, const std::vector<double>* ks, const std::vector<double>* kd,
              const std::vector<double>* br, const std::vector<double>* bi, const std::vector<Vec3>& khat,
              double* out) {
    double diag[D] = {}, off[D] = {};
    for (int h1 = 0; h1 < P; ++h1) {
        double r1[D], i1[D];
        for (int j = 0; j < D; ++j) {
            r1[j] = br[j][h1];
            i1[j] = bi[j][h1];
        }
        {
            double c[D], w = 0.0;
            for (int j = 0; j < D; ++j) {
                c[j] = r1[j] * r1[j] - i1[j] * i1[j];
                w += khat[h1][j] * c[j];
            }
            for (int j = 0; j < D; ++j) diag[j] += Comp ? khat[h1][j] * w : c[j] - khat[h1][j] * w;
        }
        const size_t base = row[h1];
        const int len = P - h1 - 1;
        double acc[D] = {};
        const double* s[D];
        const double* df[D];
        const double* r2[D];
        const double* i2[D];
        for (int j = 0; j < D; ++j) {
            s[j] = ks[j].data() + base;
            df[j] = kd[j].data() + base;
            r2[j] = br[j].data() + h1 + 1;
            i2[j] = bi[j].data() + h1 + 1;
        }
        for (int q = 0; q < len; ++q) {
            double cs[D], cd[D], ws = 0.0, wd = 0.0;
            for (int j = 0; j < D; ++j) {
                const double rr = r1[j] * r2[j][q], ii = i1[j] * i2[j][q];
                cs[j] = rr - ii;
                cd[j] = rr + ii;
                ws += s[j][q] * cs[j];
                wd += df[j][q] * cd[j];
            }
            for (int j = 0; j < D; ++j) {
                if (Comp)
                    acc[j] += s[j][q] * ws + df[j][q] * wd;
                else
                    acc[j] += (cs[j] - s[j][q] * ws) + (cd[j] - df[j][q] * wd);
            }
        }
        for (int j = 0; j < D; ++j) off[j] += acc[j];
    }
    for (int j = 0; j < D; ++j) out[j] = 2.0 * (diag[j] + 2.0 * off[j]);
}

}  // namespace

FieldSampler::FieldSampler(const SpectrumParams& p, const SamplerOptions& opt)
    : p_(p),
      opt_(opt),
      ms_(control_modes(build_mode_set(p, mode_options(p, opt)), p, opt)),
      ens_(ou_init_stationary(ms_, opt.noise_seed)) {
    init_geometry();
}

FieldSampler::FieldSampler(const SpectrumParams& p, ModeSet modes, OUEnsemble ens, const SamplerOptions& opt)
    : p_(p), opt_(opt), ms_(std::move(modes)), ens_(std::move(ens)) {
    if (ens_.n != ms_.size() || ens_.modes_fp != ms_.fingerprint())
        fail(ErrorKind::mismatch, "ensemble does not belong to this mode set");
    if (ms_.d != p_.d) fail(ErrorKind::mismatch, "mode set dimension differs from params");
    init_geometry();
}

void FieldSampler::init_geometry() {
    p_.validate();
    try {
        ex_ = scaling_exponents(p_);
    } catch (const Error&) {
        ex_ = {NAN, NAN};  // alpha + 2 beta = 1 is a legal field, just not a scaling regime
    }
    const int P = ms_.half, d = ms_.d;
    row_.assign(P, 0);
    size_t total = 0;
    for (int h = 0; h < P; ++h) {
        row_[h] = total;
        total += static_cast<size_t>(P - h - 1);
    }
    const size_t pairs = opt_.pair_geometry || opt_.projection != Projection::identity ? total : 0;
    for (int j = 0; j < d; ++j) {
        ks_[j].assign(pairs, 0.0);
        kd_[j].assign(pairs, 0.0);
        br_[j].assign(P, 0.0);
        bi_[j].assign(P, 0.0);
    }
    if ((!opt_.pair_geometry && opt_.projection == Projection::identity) || opt_.variant == FieldVariant::gaussian)
        return;
    for (int h1 = 0; h1 < P; ++h1)
        for (int h2 = h1 + 1; h2 < P; ++h2) {
            Vec3 s{}, df{};
            for (int j = 0; j < d; ++j) {
                s[j] = ms_.k[h1][j] + ms_.k[h2][j];
                df[j] = ms_.k[h1][j] - ms_.k[h2][j];
            }
            const double ns = std::sqrt(norm2(s, d)), nd = std::sqrt(norm2(df, d));
            if (!(ns > 0.0) || !(nd > 0.0)) fail(ErrorKind::numeric, "degenerate mode pair (k_m + k_n = 0)");
            const size_t idx = row_[h1] + static_cast<size_t>(h2 - h1 - 1);
            for (int j = 0; j < d; ++j) {
                ks_[j][idx] = s[j] / ns;
                kd_[j][idx] = df[j] / nd;
            }
        }
}

void FieldSampler::load_b(const Vec3& x) const {
    const int P = ms_.half, d = ms_.d;
    const bool spatial = opt_.variant != FieldVariant::limit;
    for (int h = 0; h < P; ++h) {
        double c = 1.0, s = 0.0;
        if (spatial) {
            const double ph = dot(ms_.k[h], x, d);
            c = std::cos(ph);
            s = std::sin(ph);
        }
        const double A = ms_.amp[h];
        for (int j = 0; j < d; ++j) {
            const std::complex<double> g = ens_.at(j, h);
            br_[j][h] = A * (g.real() * c - g.imag() * s);
            bi_[j][h] = A * (g.real() * s + g.imag() * c);
        }
    }
}

Vec3 FieldSampler::evaluate(const Vec3& x) const { return evaluate(x, opt_.projection); }

Vec3 FieldSampler::evaluate(double t, const Vec3& x) const {
    if (std::abs(t - ens_.time) > 1e-12 * std::max(1.0, std::abs(t)))
        fail(ErrorKind::mismatch, "sampler time differs from requested evaluation time");
    return evaluate(x);
}

Vec3 FieldSampler::evaluate_linear(Projection proj) const {
    const int P = ms_.half, d = ms_.d;
    Vec3 v{0.0, 0.0, 0.0};
    for (int h = 0; h < P; ++h) {
        const double n2 = norm2(ms_.k[h], d);
        double w = 0.0;
        for (int j = 0; j < d; ++j) w += ms_.k[h][j] * br_[j][h];
        for (int j = 0; j < d; ++j) {
            const double par = ms_.k[h][j] * w / n2;
            v[j] += 2.0 * (proj == Projection::identity ? br_[j][h]
                           : proj == Projection::gamma  ? br_[j][h] - par
                                                        : par);
        }
    }
    return v;
}

Vec3 FieldSampler::evaluate(const Vec3& x, Projection proj) const {
    load_b(x);
    if (opt_.variant == FieldVariant::gaussian) return evaluate_linear(proj);
    const int P = ms_.half, d = ms_.d;
    Vec3 v{0.0, 0.0, 0.0};
    if (proj == Projection::identity) {
        // Sum over all pairs factorizes: V_j = (2 Re S_j)^2 - 2 sum_h |b_jh|^2.
        for (int j = 0; j < d; ++j) {
            double sr = 0.0, sq = 0.0;
            for (int h = 0; h < P; ++h) {
                sr += br_[j][h];
                sq += br_[j][h] * br_[j][h] + bi_[j][h] * bi_[j][h];
            }
            v[j] = 4.0 * sr * sr - 2.0 * sq;
        }
        return v;
    }
    if (P > 1 && ks_[0].empty())
        fail(ErrorKind::param, "sampler was built without pair geometry");
    std::vector<Vec3> khat(P);
    for (int h = 0; h < P; ++h) {
        const double n = std::sqrt(norm2(ms_.k[h], d));
        for (int j = 0; j < d; ++j) khat[h][j] = ms_.k[h][j] / n;
    }
    double out[3] = {0.0, 0.0, 0.0};
    const bool comp = proj == Projection::complement;
    if (d == 2)
        comp ? pair_sum<2, true>(P, row_, ks_, kd_, br_, bi_, khat, out)
             : pair_sum<2, false>(P, row_, ks_, kd_, br_, bi_, khat, out);
    else
        comp ? pair_sum<3, true>(P, row_, ks_, kd_, br_, bi_, khat, out)
             : pair_sum<3, false>(P, row_, ks_, kd_, br_, bi_, khat, out);
    for (int j = 0; j < d; ++j) v[j] = out[j];
    return v;
}

Vec3 FieldSampler::evaluate_exact(const Vec3& x, double* imag_residue) const {
    const int n = ms_.size(), d = ms_.d;
    const bool spatial = opt_.variant != FieldVariant::limit;
    std::vector<std::complex<double>> b(static_cast<size_t>(d) * n);
    for (int m = 0; m < n; ++m) {
        const double ph = spatial ? dot(ms_.k[m], x, d) : 0.0;
        const std::complex<double> e(std::cos(ph), std::sin(ph));
        for (int j = 0; j < d; ++j) b[static_cast<size_t>(j) * n + m] = ms_.amp[m] * ens_.at(j, m) * e;
    }
    std::complex<double> acc[3] = {};
    double mag = 0.0;
    if (opt_.variant == FieldVariant::gaussian) {
        for (int m = 0; m < n; ++m) {
            Mat3 G = gamma_project(d, ms_.k[m]);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const double id = i == j ? 1.0 : 0.0;
                    if (opt_.projection == Projection::identity) G[i][j] = id;
                    else if (opt_.projection == Projection::complement) G[i][j] = id - G[i][j];
                }
            for (int j = 0; j < d; ++j)
                for (int jp = 0; jp < d; ++jp) {
                    const std::complex<double> t = G[j][jp] * b[static_cast<size_t>(jp) * n + m];
                    acc[j] += t;
                    mag += std::abs(t);
                }
        }
    }
    for (int m = 0; m < n && opt_.variant != FieldVariant::gaussian; ++m)
        for (int q = 0; q < n; ++q) {
            if (q == ms_.partner(m)) continue;  // k_m + k_n = 0: excluded, carries the Wick constant
            Vec3 K{};
            for (int j = 0; j < d; ++j) K[j] = ms_.k[m][j] + ms_.k[q][j];
            Mat3 G{};
            if (opt_.projection == Projection::identity) {
                for (int j = 0; j < d; ++j) G[j][j] = 1.0;
            } else {
                G = gamma_project(d, K);
                if (opt_.projection == Projection::complement)
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) G[i][j] = (i == j ? 1.0 : 0.0) - G[i][j];
            }
            for (int j = 0; j < d; ++j)
                for (int jp = 0; jp < d; ++jp) {
                    const std::complex<double> t =
                        G[j][jp] * b[static_cast<size_t>(jp) * n + m] * b[static_cast<size_t>(jp) * n + q];
                    acc[j] += t;
                    mag += std::abs(t);
                }
        }
    Vec3 v{0.0, 0.0, 0.0};
    double res = 0.0;
    for (int j = 0; j < d; ++j) {
        v[j] = acc[j].real();
        res = std::max(res, std::abs(acc[j].imag()));
    }
    res = mag > 0.0 ? res / mag : 0.0;
    if (imag_residue) *imag_residue = res;
    if (res > 1e-10) fail(ErrorKind::numeric, "synthesized field has a non-negligible imaginary part");
    return v;
}

// ---------------------------------------------------------------------------

CovarianceResult covariance_R(const SpectrumParams& p, double t, const Vec3& x, long budget, uint64_t seed) {
    CovarianceResult res;
    if (!(p.alpha < 1.0)) {
        res.divergent = true;
        return res;
    }
    p.validate();
    if (budget < 1000) fail(ErrorKind::param, "covariance_R needs a budget of at least 1000 points");
    const int d = p.d;
    const RadialLaw law(p, 1.0, false, 0.0);
    const double M = law.mass();
    const int dims = 2 * (d == 2 ? 2 : 3);
    const int shifts = 16;
    const long per = std::max<long>(64, budget / shifts);
    NormalSource rng(derive_seed(seed, 0x636f76ULL));
    std::vector<Mat3> est(shifts);
    for (int sh = 0; sh < shifts; ++sh) {
        std::vector<double> shift(dims);
        for (auto& u : shift) u = rng.uniform();
        boost::random::sobol qrng(dims);
        const double scale = 1.0 / (static_cast<double>(qrng.max()) + 1.0);
        Mat3 acc{};
        std::vector<double> u(dims);
        for (long i = 0; i < per; ++i) {
            for (int c = 0; c < dims; ++c) {
                const double q = static_cast<double>(qrng()) * scale + shift[c];
                u[c] = q - std::floor(q);
            }
            Vec3 k1{}, k2{};
            auto place = [&](Vec3& k, const double* uu) {
                const double rho = law.quantile(uu[0]);
                if (d == 2) {
                    const double phi = 2.0 * kPi * uu[1];
                    k[0] = rho * std::cos(phi);
                    k[1] = rho * std::sin(phi);
                } else {
                    const double z = 2.0 * uu[1] - 1.0, phi = 2.0 * kPi * uu[2];
                    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
                    k[0] = rho * s * std::cos(phi);
                    k[1] = rho * s * std::sin(phi);
                    k[2] = rho * z;
                }
                return rho;
            };
            const int half = dims / 2;
            const double r1 = place(k1, u.data()), r2 = place(k2, u.data() + half);
            Vec3 K{};
            for (int j = 0; j < d; ++j) K[j] = k1[j] + k2[j];
            const double K2 = norm2(K, d);
            if (!(K2 > 0.0)) continue;
            const double w = std::cos(dot(K, x, d)) * std::exp(-0.5 * (p.rate(r1) + p.rate(r2)) * std::abs(t));
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) acc[a][b] += w * ((a == b ? 1.0 : 0.0) - K[a] * K[b] / K2);
        }
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) est[sh][a][b] = 2.0 * M * M * acc[a][b] / per;
    }
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            double m = 0.0, s2 = 0.0;
            for (const auto& e : est) m += e[a][b];
            m /= shifts;
            for (const auto& e : est) s2 += (e[a][b] - m) * (e[a][b] - m);
            res.value[a][b] = m;
            res.stderr_[a][b] = std::sqrt(s2 / (shifts - 1) / shifts);
        }
    return res;
}

double energy_spectrum_hat(const SpectrumParams& p, double t, double xi, int budget) {
    if (!(xi > 0.0)) fail(ErrorKind::domain, "energy spectrum needs xi > 0");
    if (!(p.alpha < 1.0)) return INFINITY;
    p.validate();
    const int d = p.d;
    const double R = p.cutoff_radius;
    if (xi >= 2.0 * R) return 0.0;
    // F(q) = 2 int e(|q - l|) e(|l|) exp(-(r + r')|t|/2) dl; the two halves split by the
    // bisecting plane of [0, q] are mirror images, so F = 4 x (half nearer the origin),
    // done in polar coordinates around the origin (phi measured from q).
    const int nphi = std::max(16, static_cast<int>(std::sqrt(static_cast<double>(budget)) / 4));
    const double ang = (d == 2) ? 2.0 : 2.0 * kPi;  // azimuthal factor over [0, pi]
    using GL = boost::math::quadrature::gauss<double, 10>;
    auto e_of = [&](double r) { return p.cutoff(r) * std::pow(r, 1.0 - p.alpha - d); };
    auto radial = [&](double phi) {
        const double c = std::cos(phi), s = std::sin(phi);
        double rmax = R;
        if (c > 0.0) rmax = std::min(rmax, 0.5 * xi / c);
        std::vector<double> br = {0.0, rmax};
        auto add = [&](double b) {
            if (b > 0.0 && b < rmax) br.push_back(b);
        };
        add(0.5 * R);
        for (double cc : {0.5 * R, R}) {
            const double disc = cc * cc - xi * xi * s * s;
            if (disc >= 0.0) {
                add(xi * c - std::sqrt(disc));
                add(xi * c + std::sqrt(disc));
            }
        }
        // geometric panels resolve the scale xi when xi << R
        for (double b = 0.25 * xi; b < rmax; b *= 2.0) add(b);
        std::sort(br.begin(), br.end());
        auto f = [&](double rho) {
            const double l2 = xi * xi - 2.0 * xi * rho * c + rho * rho;
            const double lq = std::sqrt(std::max(l2, 0.0));
            if (!(lq > 0.0)) return 0.0;
            const double val = p.cutoff(rho) * std::pow(rho, -p.alpha) * e_of(lq) *
                               std::exp(-0.5 * (p.rate(rho) + p.rate(lq)) * std::abs(t));
            return val;
        };
        double sum = 0.0;
        const double g = 1.0 - p.alpha;
        for (size_t i = 0; i + 1 < br.size(); ++i) {
            const double lo = br[i], hi = br[i + 1];
            if (hi <= lo) continue;
            if (lo == 0.0) {
                // rho^{-alpha} d rho = dv / g with v = rho^g
                const double vh = std::pow(hi, g);
                sum += GL::integrate(
                           [&](double v) {
                               const double rho = std::pow(v, 1.0 / g);
                               return f(rho) / std::pow(rho, -p.alpha);
                           },
                           0.0, vh) /
                       g;
            } else {
                sum += GL::integrate(f, lo, hi);
            }
        }
        return sum * (d == 3 ? s : 1.0);
    };
    // phi panels; kinks follow the moving breakpoints, so use many of them
    double total = 0.0;
    for (int i = 0; i < nphi; ++i) {
        const double lo = kPi * i / nphi, hi = kPi * (i + 1) / nphi;
        total += GL::integrate(radial, lo, hi);
    }
    const double F = 4.0 * ang * total;
    return std::pow(xi, d - 1) * F;
}

TaylorKuboResult taylor_kubo(const SpectrumParams& p, int refinement_levels) {
    p.validate();
    if (refinement_levels < 2) fail(ErrorKind::param, "taylor_kubo needs at least 2 refinement levels");
    const int d = p.d;
    const double R = p.cutoff_radius, S = sphere_area(d);
    using GL = boost::math::quadrature::gauss<double, 10>;
    // log-radius panels of width ln 2, plus the kink of the hat at R/2
    auto panels_for = [&](double eps) {
        std::vector<double> b;
        for (double x = std::log(eps); x < std::log(R); x += std::log(2.0)) b.push_back(x);
        b.push_back(std::log(R));
        b.push_back(std::log(0.5 * R));
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end(), [](double u, double v) { return std::abs(u - v) < 1e-12; }), b.end());
        while (!b.empty() && b.front() < std::log(eps) - 1e-12) b.erase(b.begin());
        return b;
    };
    auto g = [&](double x) {
        const double rho = std::exp(x);
        return p.cutoff(rho) * std::pow(rho, 1.0 - p.alpha);
    };
    auto I = [&](double eps) {
        const auto b = panels_for(eps);
        double sum = 0.0;
        for (size_t i = 0; i + 1 < b.size(); ++i)
            for (size_t j = 0; j + 1 < b.size(); ++j)
                sum += GL::integrate(
                    [&](double x) {
                        const double gx = g(x), rx = p.rate(std::exp(x));
                        return gx * GL::integrate([&](double y) { return g(y) / (rx + p.rate(std::exp(y))); }, b[j],
                                                  b[j + 1]);
                    },
                    b[i], b[i + 1]);
        return sum;
    };
    // D = int_0^inf (R + R^T) dt at x = 0; isotropic average of Gamma gives (d-1)/d.
    const double pref = 8.0 * (d - 1.0) / d * S * S;
    TaylorKuboResult res;
    for (int l = 0; l <= refinement_levels; ++l) res.partial.push_back(pref * I(R * std::pow(4.0, -(l + 1))));
    const size_t L = res.partial.size();
    const double d1 = res.partial[L - 1] - res.partial[L - 2], d0 = res.partial[L - 2] - res.partial[L - 3];
    res.ratio = d0 != 0.0 ? d1 / d0 : 0.0;
    res.finite = res.ratio < 0.9;
    double Ds = res.partial.back();
    if (res.finite) {
        // the missing small-|k| part expands in eps^kappa, eps^{1-alpha}, ...: eliminate the
        // known exponents by Richardson, fall back to Aitken when they are not separated
        const double kappa = 2.0 * (1.0 - p.alpha - p.beta), e2 = 1.0 - p.alpha;
        std::vector<double> exps;
        if (kappa > 0.02) exps.push_back(kappa);
        if (!exps.empty() && std::abs(e2 - kappa) > 0.05) exps.push_back(e2);
        if (exps.empty() || L < exps.size() + 1) {
            Ds = res.partial.back() + d1 * res.ratio / (1.0 - res.ratio);
        } else {
            std::vector<double> t = res.partial;
            for (double e : exps) {
                const double q = std::pow(4.0, -e);
                for (size_t i = t.size() - 1; i > 0; --i) t[i] = (t[i] - q * t[i - 1]) / (1.0 - q);
                t.erase(t.begin());
            }
            Ds = t.back();
        }
    }
    for (int j = 0; j < d; ++j) res.D[j][j] = Ds;
    return res;
}

std::vector<CovarianceResult> covariance_mc(const SpectrumParams& p, const std::vector<std::pair<double, Vec3>>& points,
                                            long replicas, int n_modes, uint64_t seed, int workers, int blocks) {
    p.validate();
    if (points.empty()) fail(ErrorKind::param, "covariance_mc needs at least one point");
    for (const auto& pt : points)
        if (!(pt.first >= 0.0)) fail(ErrorKind::param, "covariance_mc needs t >= 0");
    if (replicas < blocks || blocks < 2) fail(ErrorKind::param, "covariance_mc needs at least as many replicas as blocks");
    const int d = p.d;
    const size_t np = points.size();
    std::vector<size_t> order(np);
    for (size_t i = 0; i < np; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return points[a].first < points[b].first; });
    std::vector<std::vector<Mat3>> prod(replicas, std::vector<Mat3>(np));
    parallel_for(replicas, workers, [&](long r) {
        SamplerOptions o;
        o.n_modes = n_modes;
        o.mode_seed = derive_seed(seed, 1, r);
        o.noise_seed = derive_seed(seed, 2, r);
        FieldSampler fs(p, o);
        const Vec3 v0 = fs.evaluate(Vec3{0.0, 0.0, 0.0});
        double now = 0.0;
        for (size_t k : order) {
            if (points[k].first > now) {
                fs.step(points[k].first - now);
                now = points[k].first;
            }
            const Vec3 v1 = fs.evaluate(points[k].second);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) prod[r][k][a][b] = v1[a] * v0[b];
        }
    });
    // block means in replica order; the spread of leave-one-block-out means gives the error
    std::vector<CovarianceResult> out(np);
    for (size_t k = 0; k < np; ++k) {
        auto& res = out[k];
        std::vector<Mat3> bsum(blocks);
        std::vector<long> bcnt(blocks, 0);
        Mat3 tot{};
        for (long r = 0; r < replicas; ++r) {
            const int b = static_cast<int>(r * blocks / replicas);
            for (int a = 0; a < d; ++a)
                for (int c = 0; c < d; ++c) {
                    bsum[b][a][c] += prod[r][k][a][c];
                    tot[a][c] += prod[r][k][a][c];
                }
            ++bcnt[b];
        }
        for (int a = 0; a < d; ++a)
            for (int c = 0; c < d; ++c) {
                res.value[a][c] = tot[a][c] / replicas;
                double mean = 0.0;
                std::vector<double> th(blocks);
                for (int b = 0; b < blocks; ++b) {
                    th[b] = (tot[a][c] - bsum[b][a][c]) / static_cast<double>(replicas - bcnt[b]);
                    mean += th[b] / blocks;
                }
                double acc = 0.0;
                for (double v : th) acc += (v - mean) * (v - mean);
                res.stderr_[a][c] = std::sqrt((blocks - 1.0) / blocks * acc);
                if (!std::isfinite(res.value[a][c])) fail(ErrorKind::numeric, "non-finite covariance estimate");
            }
    }
    return out;
}

CovarianceResult covariance_mc(const SpectrumParams& p, double t, const Vec3& x, long replicas, int n_modes,
                               uint64_t seed, int workers, int blocks) {
    return covariance_mc(p, {{t, x}}, replicas, n_modes, seed, workers, blocks)[0];
}

double variance_VT_exact(const SpectrumParams& p, double T) {
    const double M = spectral_mass(p, T);
    return 2.0 * (p.d - 1.0) * M * M;
}

VarianceScaling variance_scaling_VT(const SpectrumParams& p, const std::vector<double>& T_list, int replicas,
                                    int n_modes, uint64_t seed, int workers) {
    if (T_list.size() < 3) fail(ErrorKind::param, "variance scaling needs at least 3 values of T");
    for (size_t i = 1; i < T_list.size(); ++i)
        if (!(T_list[i] > T_list[i - 1])) fail(ErrorKind::param, "T_list must be increasing");
    if (replicas < 20) fail(ErrorKind::param, "variance scaling needs at least 20 replicas");
    VarianceScaling out;
    out.T = T_list;
    for (size_t ti = 0; ti < T_list.size(); ++ti) {
        std::vector<double> v2(replicas);
        parallel_for(replicas, workers, [&](long r) {
            SamplerOptions o;
            o.variant = FieldVariant::rescaled;
            o.T = T_list[ti];
            o.n_modes = n_modes;
            o.mode_seed = derive_seed(seed, 100 + ti, 2 * r);
            o.noise_seed = derive_seed(seed, 100 + ti, 2 * r + 1);
            FieldSampler fs(p, o);
            const Vec3 v = fs.evaluate(Vec3{0.0, 0.0, 0.0});
            v2[r] = norm2(v, p.d);
        });
        double m = 0.0, s2 = 0.0;
        for (double x : v2) m += x;
        m /= replicas;
        for (double x : v2) s2 += (x - m) * (x - m);
        const double se = std::sqrt(s2 / (replicas - 1) / replicas);
        out.mean.push_back(m);
        out.stderr_.push_back(se);
        if (!(m > 0.0) || 2.0 * 1.96 * se / m > 0.5) out.unstable = true;
    }
    // weighted least squares of log mean on log T
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < T_list.size(); ++i) {
        if (!(out.mean[i] > 0.0)) continue;
        const double sl = out.stderr_[i] / out.mean[i];
        const double w = 1.0 / std::max(sl * sl, 1e-300);
        const double x = std::log(T_list[i]), y = std::log(out.mean[i]);
        sw += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    const double den = sw * sxx - sx * sx;
    out.slope = (sw * sxy - sx * sy) / den;
    out.slope_stderr = std::sqrt(sw / den);
    return out;
}

}  // namespace tlab
