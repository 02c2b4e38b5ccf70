#include "tlab/modes.hpp"

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tlab {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

uint64_t fnv(const void* data, size_t len, uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

Vec3 random_direction(int d, NormalSource& rng) {
    Vec3 v{0.0, 0.0, 0.0};
    if (d == 2) {
        const double phi = 2.0 * kPi * rng.uniform();
        v[0] = std::cos(phi);
        v[1] = std::sin(phi);
        return v;
    }
    double n = 0.0;
    do {
        for (int i = 0; i < d; ++i) v[i] = rng();
        n = std::sqrt(norm2(v, d));
    } while (n < 1e-12);
    for (int i = 0; i < d; ++i) v[i] /= n;
    return v;
}

// Equal-area directions covering one hemisphere (the other half comes from reflection).
Vec3 lattice_direction(int d, int j, int n_dir) {
    Vec3 v{0.0, 0.0, 0.0};
    if (d == 2) {
        const double phi = kPi * (j + 0.5) / n_dir;
        v[0] = std::cos(phi);
        v[1] = std::sin(phi);
        return v;
    }
    const double z = (j + 0.5) / n_dir;
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    const double s = std::sqrt(1.0 - z * z);
    v[0] = s * std::cos(golden * j);
    v[1] = s * std::sin(golden * j);
    v[2] = z;
    return v;
}

}  // namespace

double ModeSet::theta_max() const {
    double m = 0.0;
    for (double t : theta) m = std::max(m, t);
    return m;
}

uint64_t ModeSet::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv(&d, sizeof d, h);
    h = fnv(&half, sizeof half, h);
    h = fnv(k.data(), k.size() * sizeof(Vec3), h);
    h = fnv(theta.data(), theta.size() * sizeof(double), h);
    h = fnv(amp.data(), amp.size() * sizeof(double), h);
    return h;
}

double mode_density(const SpectrumParams& p, const ModeSet& ms, double rho) {
    const double a = ms.flat ? (rho <= ms.k_max ? p.a0 : 0.0) : p.cutoff(rho / ms.T_scale);
    return a * std::pow(rho, 1.0 - p.alpha - p.d);
}

RadialLaw::RadialLaw(const SpectrumParams& p, double T_scale, bool flat, double k_max)
    : p_(p), T_(T_scale), g_(1.0 - p.alpha), flat_(flat) {
    p.validate();
    const double S = sphere_area(p.d);
    if (flat_) {
        if (!(k_max > 0.0)) fail(ErrorKind::param, "flat radial law needs k_max > 0");
        vmax_ = std::pow(k_max, g_);
        mass_ = S * p.a0 * vmax_ / g_;
        return;
    }
    vmax_ = std::pow(p.cutoff_radius, g_);
    const int panels = 4096;
    vgrid_.resize(panels + 1);
    cdf_.assign(panels + 1, 0.0);
    const double vk = std::pow(0.5 * p.cutoff_radius, g_);  // hat kink on a grid node
    for (int i = 0; i <= panels / 2; ++i) {
        vgrid_[i] = vk * i / (panels / 2);
        vgrid_[panels / 2 + i] = vk + (vmax_ - vk) * i / (panels / 2);
    }
    for (int i = 0; i < panels; ++i)
        cdf_[i + 1] = cdf_[i] + boost::math::quadrature::gauss<double, 7>::integrate(
                                    [&](double v) { return p_.cutoff(std::pow(v, 1.0 / g_)); }, vgrid_[i],
                                    vgrid_[i + 1]);
    mass_ = S * std::pow(T_, g_) * cdf_.back() / g_;
}

double RadialLaw::vq(double u) const {
    const double target = u * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
    size_t i = static_cast<size_t>(std::max<std::ptrdiff_t>(1, it - cdf_.begin())) - 1;
    if (i >= vgrid_.size() - 1) i = vgrid_.size() - 2;
    const double lo = vgrid_[i], hi = vgrid_[i + 1];
    const double rem = target - cdf_[i];
    const double span = cdf_[i + 1] - cdf_[i];
    double v = span > 0.0 ? lo + (hi - lo) * rem / span : lo;
    auto a_at = [&](double vv) { return p_.cutoff(std::pow(vv, 1.0 / g_)); };
    for (int it2 = 0; it2 < 6; ++it2) {
        const double F = boost::math::quadrature::gauss<double, 7>::integrate(a_at, lo, v) - rem;
        const double f = a_at(v);
        if (!(f > 0.0)) break;
        const double nv = std::clamp(v - F / f, lo, hi);
        if (std::abs(nv - v) < 1e-15 * (1.0 + v)) {
            v = nv;
            break;
        }
        v = nv;
    }
    return v;
}

double RadialLaw::quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    if (flat_) return std::pow(u * vmax_, 1.0 / g_);
    return T_ * std::pow(vq(u), 1.0 / g_);
}

ModeSet build_mode_set(const SpectrumParams& p, const ModeOptions& opt) {
    p.validate();
    const int n = opt.n_modes;
    if (n <= 0 || n % 2 != 0) fail(ErrorKind::param, "n_modes must be a positive even number");
    if (n > kMaxModes) fail(ErrorKind::param, "n_modes exceeds the evaluation cap of 2048");
    if (opt.scheme == ModeScheme::radial_stratified && n < 2 * p.d)
        fail(ErrorKind::param, "n_modes < 2d cannot resolve isotropy");
    if (!(opt.T_scale >= 1.0)) fail(ErrorKind::param, "T_scale must be >= 1");

    ModeSet ms;
    ms.d = p.d;
    ms.half = n / 2;
    ms.T_scale = opt.T_scale;
    ms.flat = opt.flat;
    ms.k_max = opt.k_max;
    ms.k.assign(n, Vec3{0.0, 0.0, 0.0});
    ms.weight.assign(n, 0.0);
    ms.theta.assign(n, 0.0);
    ms.amp.assign(n, 0.0);

    const RadialLaw law(p, opt.T_scale, opt.flat, opt.k_max);
    const int P = ms.half;
    NormalSource rng(derive_seed(opt.seed, 0x6d6f646573ULL));

    auto finish = [&](int h, double rho, const Vec3& dir, double w) {
        for (int i = 0; i < p.d; ++i) {
            ms.k[h][i] = rho * dir[i];
            ms.k[h + P][i] = -rho * dir[i];
        }
        const double r = p.rate(rho);
        const double dens = mode_density(p, ms, rho);
        for (int m : {h, h + P}) {
            ms.weight[m] = w;
            ms.theta[m] = 0.5 * r;
            ms.amp[m] = std::sqrt(w * dens * r);
        }
    };

    if (opt.scheme == ModeScheme::radial_stratified) {
        // Every mode carries the same spectral weight M / n.
        const double e = law.mass() / n;
        for (int h = 0; h < P; ++h) {
            double rho = 0.0;
            for (int tries = 0; tries < 64 && !(rho > 0.0 && mode_density(p, ms, rho) > 0.0); ++tries)
                rho = law.quantile((h + rng.uniform()) / P);
            if (!(rho > 0.0)) fail(ErrorKind::numeric, "radial sampling produced a zero-density mode");
            const Vec3 dir = random_direction(p.d, rng);
            finish(h, rho, dir, e / mode_density(p, ms, rho));
        }
    } else {
        int n_dir = 1;
        for (int c = 1; c * c <= P; ++c)
            if (P % c == 0) n_dir = c;
        const int n_rad = P / n_dir;
        const double S = sphere_area(p.d);
        const double rmax = opt.flat ? opt.k_max : p.cutoff_radius * opt.T_scale;
        const double g = 1.0 - p.alpha;
        for (int i = 0; i < n_rad; ++i) {
            const double r_lo = rmax * std::pow(static_cast<double>(i) / n_rad, 1.0 / g);
            const double r_hi = rmax * std::pow(static_cast<double>(i + 1) / n_rad, 1.0 / g);
            const double r_mid = rmax * std::pow((i + 0.5) / n_rad, 1.0 / g);
            // exact spectral mass of the shell, shared by its 2 n_dir modes
            auto f = [&](double v) {
                const double r = std::pow(v, 1.0 / g);
                return std::pow(r, p.d - 1) * mode_density(p, ms, r) * r / (g * v);
            };
            const double v_lo = std::pow(r_lo, g), v_hi = std::pow(r_hi, g);
            const double vk = std::pow(0.5 * p.cutoff_radius * opt.T_scale, g);
            double cell = 0.0;
            if (!opt.flat && vk > v_lo && vk < v_hi)
                cell = boost::math::quadrature::gauss<double, 20>::integrate(f, v_lo, vk) +
                       boost::math::quadrature::gauss<double, 20>::integrate(f, vk, v_hi);
            else
                cell = boost::math::quadrature::gauss<double, 20>::integrate(f, v_lo, v_hi);
            cell *= S;
            const double dm = mode_density(p, ms, r_mid);
            if (!(dm > 0.0)) fail(ErrorKind::numeric, "lattice shell midpoint has zero density");
            for (int j = 0; j < n_dir; ++j)
                finish(i * n_dir + j, r_mid, lattice_direction(p.d, j, n_dir), cell / (2.0 * n_dir * dm));
        }
    }
    return ms;
}

OUEnsemble ou_init_stationary(const ModeSet& ms, uint64_t seed) {
    if (ms.half <= 0) fail(ErrorKind::param, "empty mode set");
    OUEnsemble e;
    e.d = ms.d;
    e.n = ms.size();
    e.modes_fp = ms.fingerprint();
    e.seed = seed;
    e.rng = NormalSource(derive_seed(seed, 0x6f75ULL));
    e.g.assign(static_cast<size_t>(e.d) * e.n, {0.0, 0.0});
    for (int h = 0; h < ms.half; ++h) {
        const double sd = std::sqrt(1.0 / (4.0 * ms.theta[h]));  // per real component
        for (int j = 0; j < e.d; ++j) {
            const double re = sd * e.rng(), im = sd * e.rng();
            e.at(j, h) = {re, im};
            e.at(j, h + ms.half) = {re, -im};
        }
    }
    return e;
}

void ou_step(OUEnsemble& ens, const ModeSet& ms, double dt) {
    if (!(dt > 0.0)) fail(ErrorKind::param, "ou_step needs dt > 0");
    if (ens.verified != &ms) {
        if (ens.n != ms.size() || ens.modes_fp != ms.fingerprint())
            fail(ErrorKind::mismatch, "ensemble does not belong to this mode set");
        ens.verified = &ms;
        ens.cached_dt = -1.0;
    }
    const int P = ms.half;
    if (ens.cached_dt != dt) {
        ens.decay.resize(P);
        ens.noise_sd.resize(P);
        for (int h = 0; h < P; ++h) {
            const double th = ms.theta[h];
            ens.decay[h] = std::exp(-th * dt);
            ens.noise_sd[h] = std::sqrt(-std::expm1(-2.0 * th * dt) / (4.0 * th));
        }
        ens.cached_dt = dt;
    }
    for (int j = 0; j < ens.d; ++j) {
        std::complex<double>* g = &ens.g[static_cast<size_t>(j) * ens.n];
        for (int h = 0; h < P; ++h) {
            const double re = ens.rng(), im = ens.rng();
            const std::complex<double> v =
                ens.decay[h] * g[h] + std::complex<double>(ens.noise_sd[h] * re, ens.noise_sd[h] * im);
            g[h] = v;
            g[h + P] = std::conj(v);
        }
    }
    ens.time += dt;
}

namespace {

constexpr char kMagic[8] = {'T', 'L', 'A', 'B', 'O', 'U', 'C', 'K'};
constexpr uint32_t kFormat = 1;

template <class T>
void put(std::ostream& o, const T& v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
void get(std::istream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) fail(ErrorKind::io, "checkpoint truncated");
}

}  // namespace

void save_checkpoint(const std::string& path, const ModeSet& ms, const OUEnsemble& ens) {
    std::ofstream o(path, std::ios::binary);
    if (!o) fail(ErrorKind::io, "cannot open checkpoint for writing: " + path);
    o.write(kMagic, sizeof kMagic);
    put(o, kFormat);
    put(o, static_cast<int32_t>(ms.d));
    put(o, static_cast<int32_t>(ms.half));
    put(o, ms.T_scale);
    put(o, static_cast<uint8_t>(ms.flat));
    put(o, ms.k_max);
    for (int m = 0; m < ms.size(); ++m) {
        for (int i = 0; i < 3; ++i) put(o, ms.k[m][i]);
        put(o, ms.weight[m]);
        put(o, ms.theta[m]);
        put(o, ms.amp[m]);
    }
    put(o, ens.time);
    put(o, ens.seed);
    for (const auto& z : ens.g) {
        put(o, z.real());
        put(o, z.imag());
    }
    std::ostringstream rs;
    rs << ens.rng.engine() << " end";
    const std::string s = rs.str();
    put(o, static_cast<uint64_t>(s.size()));
    o.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!o) fail(ErrorKind::io, "checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, ModeSet& ms, OUEnsemble& ens) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) fail(ErrorKind::io, "not a checkpoint file");
    uint32_t fmt = 0;
    get(in, fmt);
    if (fmt != kFormat) fail(ErrorKind::io, "unsupported checkpoint format version " + std::to_string(fmt));
    int32_t d = 0, half = 0;
    uint8_t flat = 0;
    ModeSet m;
    get(in, d);
    get(in, half);
    if (d < 2 || d > 3 || half <= 0 || half > kMaxModes) fail(ErrorKind::io, "corrupt checkpoint header");
    m.d = d;
    m.half = half;
    get(in, m.T_scale);
    get(in, flat);
    m.flat = flat != 0;
    get(in, m.k_max);
    const int n = 2 * half;
    m.k.resize(n);
    m.weight.resize(n);
    m.theta.resize(n);
    m.amp.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) get(in, m.k[i][c]);
        get(in, m.weight[i]);
        get(in, m.theta[i]);
        get(in, m.amp[i]);
    }
    OUEnsemble e;
    e.d = d;
    e.n = n;
    e.modes_fp = m.fingerprint();
    get(in, e.time);
    get(in, e.seed);
    e.g.resize(static_cast<size_t>(d) * n);
    for (auto& z : e.g) {
        double re, im;
        get(in, re);
        get(in, im);
        z = {re, im};
    }
    uint64_t len = 0;
    get(in, len);
    if (len > (1u << 20)) fail(ErrorKind::io, "corrupt checkpoint generator state");
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) fail(ErrorKind::io, "checkpoint truncated");
    std::istringstream rs(s);
    std::string tag;
    rs >> e.rng.engine() >> tag;
    if (tag != "end") fail(ErrorKind::io, "corrupt checkpoint generator state");
    ms = std::move(m);
    ens = std::move(e);
}

}  // namespace tlab
