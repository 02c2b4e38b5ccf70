#include "tlab/spectrum.hpp"

#include <limits>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cstdlib>
#include <sstream>
#include <utility>

namespace tlab {


void SpectrumParams::validate() const {
    if (!(alpha < 1.0)) fail(ErrorKind::param, "alpha must be < 1");
    if (!(beta > 0.0)) fail(ErrorKind::param, "beta must be > 0");
    if (!(r0 > 0.0)) fail(ErrorKind::param, "r0 must be > 0");
    if (!(a0 > 0.0)) fail(ErrorKind::param, "a0 must be > 0");
    if (!(cutoff_radius > 0.0)) fail(ErrorKind::param, "cutoff_radius must be > 0");
    if (d < 2 || d > 3) fail(ErrorKind::param, "d must be 2 or 3");
}

double SpectrumParams::cutoff(double xi) const {
    const double R = cutoff_radius;
    if (xi < 0.0) xi = -xi;
    if (xi >= R) return 0.0;
    switch (cutoff_profile) {
        case CutoffProfile::hat:
            return xi <= 0.5 * R ? a0 : a0 * 2.0 * (1.0 - xi / R);
        case CutoffProfile::bump: {
            const double u = xi / R;
            return a0 * std::exp(1.0 - 1.0 / (1.0 - u * u));
        }
    }
    return 0.0;
}

ScalingExponents scaling_exponents(const SpectrumParams& p) {
    const double den = p.alpha + 2.0 * p.beta - 1.0;
    if (den == 0.0) fail(ErrorKind::param, "alpha + 2 beta = 1: scaling exponent delta is undefined");
    if (!(p.beta > 0.0)) fail(ErrorKind::param, "beta must be > 0");
    ScalingExponents e;
    e.delta = p.beta / den;
    e.hurst = den / (2.0 * p.beta);
    return e;
}

Mat3 gamma_project(int d, const Vec3& k) {
    const double k2 = norm2(k, d);
    if (!(k2 > 0.0)) fail(ErrorKind::domain, "projector undefined at k = 0");
    Mat3 g{};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g[i][j] = (i == j ? 1.0 : 0.0) - k[i] * k[j] / k2;
    return g;
}

double kernel_eval(const SpectrumParams& p, KernelVariant v, double T, double s, double s2, const Vec3& k,
                   const Vec3& k2) {
    if (s < 0.0 || s2 < 0.0) fail(ErrorKind::domain, "kernel lags must be non-negative");
    const double n1 = std::sqrt(norm2(k, p.d)), n2 = std::sqrt(norm2(k2, p.d));
    if (!(n1 > 0.0) || !(n2 > 0.0)) fail(ErrorKind::domain, "kernel undefined at zero wavevector");
    const double e = 0.5 * (p.d + p.alpha - 1.0);
    // log-space assembly: |k|^{-e} overflows for the tiny |k| that importance sampling favours
    auto one = [&](double n, double lag, double a) {
        if (a <= 0.0) return -std::numeric_limits<double>::infinity();
        const double r = p.rate(n);
        return 0.5 * (std::log(r) + std::log(a)) - e * std::log(n) - 0.5 * r * lag;
    };
    switch (v) {
        case KernelVariant::E:
            return std::exp(one(n1, s, p.cutoff(n1)) + one(n2, s2, p.cutoff(n2)));
        case KernelVariant::E_T: {
            if (!(T > 0.0)) fail(ErrorKind::domain, "T must be > 0");
            // r_T(xi) = T^{2 beta} r(xi / T) coincides with r for the pure power rate
            auto oneT = [&](double n, double lag) {
                const double a = p.cutoff(n / T);
                if (a <= 0.0) return -std::numeric_limits<double>::infinity();
                const double r = std::pow(T, 2.0 * p.beta) * p.rate(n / T);
                return 0.5 * (std::log(r) + std::log(a)) - e * std::log(n) - 0.5 * r * lag;
            };
            return std::exp(oneT(n1, s) + oneT(n2, s2));
        }
        case KernelVariant::E_inf: {
            const double ex = e - p.beta;
            const double lg = std::log(p.a0 * p.r0) - ex * (std::log(n1) + std::log(n2)) -
                              0.5 * p.r0 * (std::pow(n1, 2.0 * p.beta) * s + std::pow(n2, 2.0 * p.beta) * s2);
            return std::exp(lg);
        }
    }
    return 0.0;
}

double sphere_area(int d) {
    const double pi = boost::math::constants::pi<double>();
    return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d);
}

double radial_integral(const SpectrumParams& p) {
    // v = u^{1-alpha}: u^{-alpha} du = dv / (1 - alpha), integrand a(u(v)) is bounded.
    const double g = 1.0 - p.alpha;
    const double vmax = std::pow(p.cutoff_radius, g);
    // the hat has a kink at R/2; keep it on a panel edge
    const double vk = std::pow(0.5 * p.cutoff_radius, g);
    const int panels = 32;
    double sum = 0.0;
    for (auto [a, b] : {std::pair{0.0, vk}, std::pair{vk, vmax}})
        for (int i = 0; i < panels; ++i) {
            const double lo = a + (b - a) * i / panels, hi = a + (b - a) * (i + 1) / panels;
            sum += boost::math::quadrature::gauss<double, 20>::integrate(
                [&](double v) { return p.cutoff(std::pow(v, 1.0 / g)); }, lo, hi);
        }
    return sum / g;
}

double spectral_mass(const SpectrumParams& p, double T_scale) {
    return sphere_area(p.d) * std::pow(T_scale, 1.0 - p.alpha) * radial_integral(p);
}

std::string profile_name(CutoffProfile c) { return c == CutoffProfile::hat ? "hat" : "bump"; }

CutoffProfile parse_profile(const std::string& s) {
    if (s == "hat") return CutoffProfile::hat;
    if (s == "bump") return CutoffProfile::bump;
    fail(ErrorKind::config, "unknown cutoff_profile '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
        fail(ErrorKind::config, "key '" + key + "': not a finite number: '" + v + "'");
    return x;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::config, "line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(ErrorKind::config, "line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::ostringstream out;
    for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
    return out.str();
}

SpectrumParams params_from_kv(const KeyValues& kv, const std::string& prefix) {
    SpectrumParams p;
    auto get = [&](const char* name) -> const std::string* {
        auto it = kv.find(prefix + name);
        if (it == kv.end() && !prefix.empty()) it = kv.find(name);
        return it == kv.end() ? nullptr : &it->second;
    };
    if (auto v = get("alpha")) p.alpha = to_double("alpha", *v);
    if (auto v = get("beta")) p.beta = to_double("beta", *v);
    if (auto v = get("a0")) p.a0 = to_double("a0", *v);
    if (auto v = get("r0")) p.r0 = to_double("r0", *v);
    if (auto v = get("cutoff_radius")) p.cutoff_radius = to_double("cutoff_radius", *v);
    if (auto v = get("cutoff_profile")) p.cutoff_profile = parse_profile(*v);
    if (auto v = get("d")) {
        const double x = to_double("d", *v);
        if (x != std::floor(x)) fail(ErrorKind::config, "d must be an integer");
        p.d = static_cast<int>(x);
    }
    try {
        p.validate();
    } catch (const Error& e) {
        fail(ErrorKind::config, e.what());
    }
    return p;
}

void params_to_kv(const SpectrumParams& p, KeyValues& kv, const std::string& prefix) {
    auto num = [](double x) {
        std::ostringstream o;
        o.precision(17);
        o << x;
        return o.str();
    };
    kv[prefix + "alpha"] = num(p.alpha);
    kv[prefix + "beta"] = num(p.beta);
    kv[prefix + "d"] = std::to_string(p.d);
    kv[prefix + "a0"] = num(p.a0);
    kv[prefix + "r0"] = num(p.r0);
    kv[prefix + "cutoff_profile"] = profile_name(p.cutoff_profile);
    kv[prefix + "cutoff_radius"] = num(p.cutoff_radius);
}

}  // namespace tlab
