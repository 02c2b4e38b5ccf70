#include "tlab/diagrams.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/sobol.hpp>
#include <numeric>

namespace tlab {

void Diagram::validate() const {
    std::vector<int> seen(static_cast<size_t>(n) * r, 0);
    for (auto [a, b] : links) {
        if (a < 0 || b < 0 || a >= n * r || b >= n * r) fail(ErrorKind::param, "hand index out of range");
        if (node_of(a) == node_of(b)) fail(ErrorKind::param, "link joins two hands of the same node");
        if (++seen[a] > 1 || ++seen[b] > 1) fail(ErrorKind::param, "hand used by more than one link");
    }
    for (int f : free)
        if (++seen[f] > 1) fail(ErrorKind::param, "free hand also linked");
}

void for_each_complete(int n, int r, const std::function<void(const Diagram&)>& visit) {
    if (n < 1 || n > 8) fail(ErrorKind::param, "diagram enumeration supports 1 <= n <= 8");
    if (r < 1 || r > 2) fail(ErrorKind::param, "hands per node must be 1 or 2");
    const int H = n * r;
    if (H % 2 != 0) return;
    std::vector<char> used(H, 0);
    Diagram g;
    g.n = n;
    g.r = r;
    std::function<void()> rec = [&] {
        int first = -1;
        for (int h = 0; h < H; ++h)
            if (!used[h]) {
                first = h;
                break;
            }
        if (first < 0) {
            visit(g);
            return;
        }
        used[first] = 1;
        for (int h = first + 1; h < H; ++h) {
            if (used[h] || h / r == first / r) continue;
            used[h] = 1;
            g.links.emplace_back(first, h);
            rec();
            g.links.pop_back();
            used[h] = 0;
        }
        used[first] = 0;
    };
    rec();
}

std::vector<Diagram> enumerate_complete(int n) {
    if (n > 6) fail(ErrorKind::param, "explicit diagram lists are kept for n <= 6; stream larger n");
    std::vector<Diagram> out;
    for_each_complete(n, 2, [&](const Diagram& g) { out.push_back(g); });
    return out;
}

int64_t count_complete_formula(int n) {
    auto dfact = [](int m) {  // (m)!! for odd m, (-1)!! = 1
        int64_t v = 1;
        for (int k = m; k > 1; k -= 2) v *= k;
        return v;
    };
    auto binom = [](int a, int b) {
        int64_t v = 1;
        for (int k = 1; k <= b; ++k) v = v * (a - b + k) / k;
        return v;
    };
    int64_t s = 0;
    for (int j = 0; j <= n; ++j) s += (j % 2 ? -1 : 1) * binom(n, j) * dfact(2 * n - 2 * j - 1);
    return s;
}

std::vector<std::vector<int>> connected_components(const Diagram& g) {
    if (!g.complete()) fail(ErrorKind::param, "connected components need a complete diagram");
    std::vector<int> parent(g.n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); };
    for (auto [a, b] : g.links) parent[find(g.node_of(a))] = find(g.node_of(b));
    std::map<int, std::vector<int>> cls;
    for (int v = 0; v < g.n; ++v) cls[find(v)].push_back(v);
    std::vector<std::vector<int>> out;
    for (auto& [root, nodes] : cls) out.push_back(nodes);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> cycle_order(const Diagram& g, const std::vector<int>& component) {
    if (g.r != 2) fail(ErrorKind::param, "cycle order needs two hands per node");
    std::vector<int> partner(static_cast<size_t>(g.n) * 2, -1);
    for (auto [a, b] : g.links) {
        partner[a] = b;
        partner[b] = a;
    }
    std::vector<int> order;
    const int start = component.front();
    int node = start, hand = 2 * start + 1;  // leave through slot 1
    do {
        order.push_back(node);
        const int other = partner[hand];
        if (other < 0) fail(ErrorKind::param, "incomplete diagram");
        node = g.node_of(other);
        hand = (other % 2 == 0) ? other + 1 : other - 1;  // the node's other hand
    } while (node != start && order.size() <= component.size());
    if (order.size() != component.size()) fail(ErrorKind::param, "component is not a single cycle");
    return order;
}

DiagramCensus diagram_census(int n) {
    DiagramCensus c;
    for_each_complete(n, 2, [&](const Diagram& g) {
        ++c.complete;
        const auto comps = connected_components(g);
        if (comps.size() == 1) ++c.single_cycle;
        std::vector<int> sizes;
        for (const auto& v : comps) sizes.push_back(static_cast<int>(v.size()));
        std::sort(sizes.begin(), sizes.end());
        ++c.by_component_sizes[sizes];
    });
    return c;
}

double cycle_constant_C(const SpectrumParams& p) {
    if (!(p.alpha < 1.0)) fail(ErrorKind::param, "cycle constant needs alpha < 1");
    p.validate();
    const double s = (1.0 - p.alpha) / (2.0 * p.beta);  // = 1 - H
    // a0 S_{d-1} int_0^inf rho^{-alpha} exp(-r0 rho^{2 beta} / 2) d rho
    return p.a0 * sphere_area(p.d) / (2.0 * p.beta) * std::pow(0.5 * p.r0, -s) * std::tgamma(s);
}

double Psi::operator()(double t) const {
    double v = 0.0;
    for (size_t m = 0; m < b.size(); ++m)
        if (t >= 0.0 && t <= r[m]) v += b[m];
    return v;
}

void Psi::validate() const {
    if (b.empty() || b.size() != r.size()) fail(ErrorKind::param, "psi needs matching b and r lists");
    for (double x : r)
        if (!(x > 0.0)) fail(ErrorKind::param, "psi interval ends must be > 0");
}

namespace {

// int_a^b int_c^d |t - s|^q ds dt for q > -1
double rect(double a, double b, double c, double d, double q) {
    auto G = [q](double x) { return std::pow(std::abs(x), q + 2.0) / ((q + 1.0) * (q + 2.0)); };
    return -(G(b - d) - G(b - c) - G(a - d) + G(a - c));
}

struct Mesh {
    std::vector<double> lo, hi, psi;
};

Mesh make_mesh(const Psi& psi, int cells) {
    std::vector<double> br = {0.0};
    for (double x : psi.r) br.push_back(x);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    const double L = br.back();
    Mesh m;
    for (size_t i = 0; i + 1 < br.size(); ++i) {
        const double len = br[i + 1] - br[i];
        const int k = std::max(1, static_cast<int>(std::lround(cells * len / L)));
        for (int j = 0; j < k; ++j) {
            const double a = br[i] + len * j / k, b = br[i] + len * (j + 1) / k;
            m.lo.push_back(a);
            m.hi.push_back(b);
            m.psi.push_back(psi(0.5 * (a + b)));
        }
    }
    return m;
}

double galerkin_trace(int n, const Psi& psi, double H, int cells) {
    const Mesh m = make_mesh(psi, cells);
    const int N = static_cast<int>(m.lo.size());
    Eigen::MatrixXd M(N, N);
    for (int a = 0; a < N; ++a)
        for (int b = a; b < N; ++b) {
            const double v = rect(m.lo[a], m.hi[a], m.lo[b], m.hi[b], H - 1.0) /
                             std::sqrt((m.hi[a] - m.lo[a]) * (m.hi[b] - m.lo[b]));
            M(a, b) = v;
            M(b, a) = v;
        }
    // trace((Psi M)^n) = sum lambda^n with lambda the spectrum of L^T Psi L, M = L L^T
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) fail(ErrorKind::numeric, "kernel matrix is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();
    const Eigen::MatrixXd B = L.transpose() * Eigen::Map<const Eigen::VectorXd>(m.psi.data(), N).asDiagonal() * L;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += std::pow(es.eigenvalues()[i], n);
    return s;
}

}  // namespace

Estimate cycle_time_integral(int n, const Psi& psi, double H, int quad_points) {
    if (!(H > 0.5 && H < 1.0)) fail(ErrorKind::param, "cycle integral needs 1/2 < H < 1");
    if (n < 2) fail(ErrorKind::param, "cycle integral needs n >= 2");
    psi.validate();
    if (n == 2) {
        // |t - s|^{2H-2} integrated exactly over the rectangles where psi is constant
        std::vector<double> br = {0.0};
        for (double x : psi.r) br.push_back(x);
        std::sort(br.begin(), br.end());
        br.erase(std::unique(br.begin(), br.end()), br.end());
        double s = 0.0;
        for (size_t i = 0; i + 1 < br.size(); ++i)
            for (size_t j = 0; j + 1 < br.size(); ++j) {
                const double pi = psi(0.5 * (br[i] + br[i + 1])), pj = psi(0.5 * (br[j] + br[j + 1]));
                s += pi * pj * rect(br[i], br[i + 1], br[j], br[j + 1], 2.0 * H - 2.0);
            }
        return {s, 1e-14 * std::abs(s)};
    }
    if (quad_points < 8) fail(ErrorKind::param, "quad_points too small");
    const double t1 = galerkin_trace(n, psi, H, quad_points);
    const double t2 = galerkin_trace(n, psi, H, 2 * quad_points);
    const double t4 = galerkin_trace(n, psi, H, 4 * quad_points);
    const double rate = std::min(n * H - 1.0, 2.0);
    const double f = std::pow(2.0, rate) - 1.0;
    const double ra = t2 + (t2 - t1) / f, rb = t4 + (t4 - t2) / f;
    return {rb, std::abs(rb - ra) + 1e-13 * std::abs(rb)};
}

Estimate eval_IG_cycle(int n, const Psi& psi, double H, int quad_points, double C) {
    const Estimate e = cycle_time_integral(n, psi, H, quad_points);
    const double cn = std::pow(C, n);
    return {cn * e.value, cn * e.stderr_};
}

Estimate moment_Z(const Psi& psi, int n, const SpectrumParams& p, int quad_points) {
    if (n < 1 || n > 6) fail(ErrorKind::param, "moment_Z supports 1 <= n <= 6");
    const double H = scaling_exponents(p).hurst;
    const double C = cycle_constant_C(p);
    if (n == 1) return {0.0, 0.0};
    const DiagramCensus census = diagram_census(n);
    std::map<int, Estimate> cyc;
    Estimate out;
    for (const auto& [sizes, count] : census.by_component_sizes) {
        double v = static_cast<double>(count), rel = 0.0;
        for (int k : sizes) {
            if (!cyc.count(k)) cyc[k] = eval_IG_cycle(k, psi, H, quad_points, C);
            v *= cyc[k].value;
            rel += cyc[k].stderr_ / std::abs(cyc[k].value);
        }
        out.value += v;
        out.stderr_ += std::abs(v) * rel;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct CycleKey {
    std::vector<double> t;
    std::vector<int> comp;
    std::vector<int> proj;
    bool operator<(const CycleKey& o) const {
        return std::tie(t, comp, proj) < std::tie(o.t, o.comp, o.proj);
    }
};

// Position of a point drawn from the density ~ |s - sigma|^g on [0, t]; returns the
// normalizer of that density through *Z.
double chain_step(double sigma, double t, double g, double u, double* Z) {
    const double g1 = g + 1.0;
    auto mass = [g1](double lo, double hi) { return (std::pow(hi, g1) - std::pow(lo, g1)) / g1; };
    double lL, hL, lR = 0.0, hR = 0.0;
    if (sigma <= t) {
        lL = 0.0;
        hL = sigma;
        hR = t - sigma;
    } else {
        lL = sigma - t;
        hL = sigma;
    }
    const double mL = mass(lL, hL), mR = mass(lR, hR);
    *Z = mL + mR;
    bool left = u * (*Z) < mL;
    double lo, hi, uu;
    if (left) {
        uu = mL > 0.0 ? u * (*Z) / mL : 0.5;
        lo = lL;
        hi = hL;
    } else {
        uu = mR > 0.0 ? (u * (*Z) - mL) / mR : 0.5;
        lo = lR;
        hi = hR;
    }
    uu = std::clamp(uu, 0.0, 1.0);
    const double a = std::pow(lo, g1), b = std::pow(hi, g1);
    const double dist = std::pow(a + uu * (b - a), 1.0 / g1);
    return left ? sigma - dist : sigma + dist;
}

Estimate cycle_X(const CycleKey& key, const SpectrumParams& p, double H, double C, long budget, uint64_t seed) {
    const int k = static_cast<int>(key.t.size());
    const int d = p.d;
    const int ddir = d == 2 ? 1 : 2;
    const int dims = k + k * (1 + ddir);
    const int shifts = 16;
    const long per = std::max<long>(64, budget / shifts);
    const double shape = 1.0 - H;
    const double inv2b = 1.0 / (2.0 * p.beta);
    NormalSource rng(seed);
    std::vector<double> est(shifts);
    std::vector<double> u(dims), sigma(k), delta(k);
    std::vector<Vec3> q(k), K(k);
    for (int sh = 0; sh < shifts; ++sh) {
        std::vector<double> shift(dims);
        for (auto& s : shift) s = rng.uniform();
        boost::random::sobol qrng(dims);
        const double scale = 1.0 / (static_cast<double>(qrng.max()) + 1.0);
        double acc = 0.0;
        for (long i = 0; i < per; ++i) {
            for (int c = 0; c < dims; ++c) {
                const double x = static_cast<double>(qrng()) * scale + shift[c];
                u[c] = x - std::floor(x);
            }
            // time chain
            double w = key.t[0];
            sigma[0] = u[0] * key.t[0];
            const double g = (k == 2) ? 2.0 * H - 2.0 : H - 1.0;
            for (int l = 1; l < k; ++l) {
                double Z = 0.0;
                sigma[l] = chain_step(sigma[l - 1], key.t[l], g, u[l], &Z);
                w *= Z;
            }
            for (int l = 0; l < k; ++l) delta[l] = std::abs(sigma[(l + 1) % k] - sigma[l]);
            if (k > 2) w *= std::pow(delta[k - 1], H - 1.0);
            bool bad = !(w > 0.0) || !std::isfinite(w);
            // link wavevectors, scaled by |Delta sigma|^{-1/(2 beta)}
            for (int l = 0; l < k && !bad; ++l) {
                const double* uu = u.data() + k + l * (1 + ddir);
                const double y = boost::math::gamma_p_inv(shape, std::clamp(uu[0], 1e-300, 1.0 - 1e-16));
                const double rho = std::pow(2.0 * y / p.r0, inv2b);
                const double dl = (k == 2) ? delta[0] : delta[l];
                if (!(dl > 0.0)) {
                    bad = true;
                    break;
                }
                const double s = rho * std::pow(dl, -inv2b);
                if (d == 2) {
                    const double phi = 2.0 * M_PI * uu[1];
                    q[l] = {s * std::cos(phi), s * std::sin(phi), 0.0};
                } else {
                    const double z = 2.0 * uu[1] - 1.0, phi = 2.0 * M_PI * uu[2];
                    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
                    q[l] = {s * r * std::cos(phi), s * r * std::sin(phi), s * z};
                }
            }
            if (bad) continue;
            // node l sits between links l-1 and l: K = q_l - q_{l-1}
            double f = 0.0;
            for (int jp = 0; jp < d; ++jp) {
                double prod = 1.0;
                for (int l = 0; l < k && prod != 0.0; ++l) {
                    const int prv = (l + k - 1) % k;
                    Vec3 KK{};
                    for (int c = 0; c < d; ++c) KK[c] = q[l][c] - q[prv][c];
                    const double K2 = norm2(KK, d);
                    const int j = key.comp[l];
                    const double id = (j == jp) ? 1.0 : 0.0;
                    double e;
                    switch (static_cast<Projection>(key.proj[l])) {
                        case Projection::identity:
                            e = id;
                            break;
                        case Projection::gamma:
                            e = K2 > 0.0 ? id - KK[j] * KK[jp] / K2 : 0.0;
                            break;
                        default:
                            e = K2 > 0.0 ? KK[j] * KK[jp] / K2 : 0.0;
                            break;
                    }
                    prod *= e;
                }
                f += prod;
            }
            acc += w * f;
        }
        est[sh] = acc / per;
    }
    double m = 0.0, s2 = 0.0;
    for (double e : est) m += e;
    m /= shifts;
    for (double e : est) s2 += (e - m) * (e - m);
    const double ck = std::pow(C, k);
    return {ck * m, ck * std::sqrt(s2 / (shifts - 1) / shifts)};
}

}  // namespace

MomentXResult moment_X(const std::vector<XNode>& nodes, const SpectrumParams& p, long budget, uint64_t seed) {
    const int n = static_cast<int>(nodes.size());
    if (n < 1 || n > 4) fail(ErrorKind::param, "moment_X supports 1 <= n <= 4");
    const double H = scaling_exponents(p).hurst;
    if (!(H > 0.5 && H < 1.0)) fail(ErrorKind::param, "moment_X needs 1/2 < H < 1");
    for (const auto& nd : nodes) {
        if (!(nd.t > 0.0)) fail(ErrorKind::param, "moment_X node times must be > 0");
        if (nd.component < 0 || nd.component >= p.d) fail(ErrorKind::param, "component index out of range");
    }
    const double C = cycle_constant_C(p);
    MomentXResult res;
    if (n == 1) return res;
    std::map<CycleKey, Estimate> memo;
    uint64_t salt = 0;
    for_each_complete(n, 2, [&](const Diagram& g) {
        double v = 1.0, rel = 0.0;
        for (const auto& comp : connected_components(g)) {
            const auto order = cycle_order(g, comp);
            CycleKey key;
            for (int nd : order) {
                key.t.push_back(nodes[nd].t);
                key.comp.push_back(nodes[nd].component);
                key.proj.push_back(static_cast<int>(nodes[nd].projection));
            }
            auto it = memo.find(key);
            if (it == memo.end())
                it = memo.emplace(key, cycle_X(key, p, H, C, budget, derive_seed(seed, ++salt))).first;
            v *= it->second.value;
            rel += it->second.value != 0.0 ? it->second.stderr_ / std::abs(it->second.value) : 0.0;
        }
        res.value.value += v;
        res.value.stderr_ += std::abs(v) * rel;
    });
    res.flagged = res.value.stderr_ > 0.05 * std::abs(res.value.value) && res.value.stderr_ > 1e-12 * std::pow(C, n);
    return res;
}

// ---------------------------------------------------------------------------

ProductFormulaReport validate_product_formula(int n, int grid_cells, uint64_t seed, long samples) {
    if (n < 1 || n > 3) fail(ErrorKind::param, "product formula check supports n <= 3");
    if (grid_cells < 1 || grid_cells > 8) fail(ErrorKind::param, "product formula check supports <= 8 cells");
    if (samples < 1000) fail(ErrorKind::param, "too few samples");
    const int c = grid_cells;
    NormalSource rng(derive_seed(seed, 0x7066ULL));
    // random symmetric kernels (double integrals) and vectors (single integrals)
    std::vector<Eigen::MatrixXd> f(n, Eigen::MatrixXd(c, c));
    std::vector<Eigen::VectorXd> g(n, Eigen::VectorXd(c));
    for (int l = 0; l < n; ++l) {
        for (int a = 0; a < c; ++a)
            for (int b = a; b < c; ++b) f[l](a, b) = f[l](b, a) = (2.0 * rng.uniform() - 1.0) / c;
        for (int a = 0; a < c; ++a) g[l](a) = (2.0 * rng.uniform() - 1.0) / std::sqrt(static_cast<double>(c));
    }
    ProductFormulaReport rep;
    rep.n = n;
    rep.cells = c;
    rep.samples = samples;

    // exact: sum over complete diagrams of finite sums over cell labels of the links
    auto exact_sum = [&](int r) {
        double total = 0.0;
        for_each_complete(n, r, [&](const Diagram& G) {
            const int L = static_cast<int>(G.links.size());
            std::vector<int> cell(L, 0), hand_cell(static_cast<size_t>(n) * r);
            long combos = 1;
            for (int i = 0; i < L; ++i) combos *= c;
            for (long code = 0; code < combos; ++code) {
                long x = code;
                for (int i = 0; i < L; ++i) {
                    cell[i] = static_cast<int>(x % c);
                    x /= c;
                    hand_cell[G.links[i].first] = cell[i];
                    hand_cell[G.links[i].second] = cell[i];
                }
                double prod = 1.0;
                for (int l = 0; l < n; ++l)
                    prod *= (r == 2) ? f[l](hand_cell[2 * l], hand_cell[2 * l + 1]) : g[l](hand_cell[l]);
                total += prod;
            }
        });
        return total;
    };
    rep.exact = exact_sum(2);
    rep.g_exact = exact_sum(1);

    Eigen::VectorXd xi(c);
    double s = 0.0, s2 = 0.0, gs = 0.0, gs2 = 0.0;
    for (long i = 0; i < samples; ++i) {
        for (int a = 0; a < c; ++a) xi(a) = rng();
        double prod = 1.0, gprod = 1.0;
        for (int l = 0; l < n; ++l) {
            prod *= xi.dot(f[l] * xi) - f[l].trace();  // Wick-ordered double integral
            gprod *= g[l].dot(xi);
        }
        s += prod;
        s2 += prod * prod;
        gs += gprod;
        gs2 += gprod * gprod;
    }
    const double N = static_cast<double>(samples);
    rep.mc_mean = s / N;
    rep.mc_stderr = std::sqrt(std::max(0.0, s2 / N - rep.mc_mean * rep.mc_mean) / (N - 1.0));
    rep.g_mc_mean = gs / N;
    rep.g_mc_stderr = std::sqrt(std::max(0.0, gs2 / N - rep.g_mc_mean * rep.g_mc_mean) / (N - 1.0));
    auto zscore = [](double a, double b, double se) {
        return se > 0.0 ? std::abs(a - b) / se : (a == b ? 0.0 : INFINITY);
    };
    rep.z = zscore(rep.mc_mean, rep.exact, rep.mc_stderr);
    rep.g_z = zscore(rep.g_mc_mean, rep.g_exact, rep.g_mc_stderr);
    rep.pass = rep.z < 3.0;
    rep.g_pass = rep.g_z < 3.0;
    return rep;
}

}  // namespace tlab
