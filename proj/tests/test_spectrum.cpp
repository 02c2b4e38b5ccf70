#include <doctest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <random>

#include "tlab/spectrum.hpp"

using namespace tlab;

namespace {

double ref_radial(const SpectrumParams& p) {
    boost::math::quadrature::tanh_sinh<double> ts;
    // split at the kink of the hat profile
    auto f = [&](double u) { return p.cutoff(u) * std::pow(u, -p.alpha); };
    const double R = p.cutoff_radius;
    return ts.integrate(f, 0.0, 0.5 * R) + ts.integrate(f, 0.5 * R, R);
}

}  // namespace

TEST_CASE("radial integral agrees with tanh-sinh") {
    for (auto prof : {CutoffProfile::hat, CutoffProfile::bump})
        for (double alpha : {0.2, 0.5, 0.9}) {
            SpectrumParams p;
            p.alpha = alpha;
            p.cutoff_profile = prof;
            p.cutoff_radius = 1.7;
            p.a0 = 2.5;
            CHECK(radial_integral(p) == doctest::Approx(ref_radial(p)).epsilon(1e-9));
        }
}

TEST_CASE("hat radial integral in closed form") {
    // a0 [ (R/2)^g / g + int_{R/2}^R 2(1 - u/R) u^{-alpha} du ],  g = 1 - alpha
    SpectrumParams p;
    p.alpha = 0.5;
    const double g = 0.5, R = 1.0;
    const double inner = std::pow(0.5, g) / g;
    auto prim = [&](double u) { return 2.0 * (std::pow(u, g) / g - std::pow(u, g + 1.0) / ((g + 1.0) * R)); };
    CHECK(radial_integral(p) == doctest::Approx(inner + prim(1.0) - prim(0.5)).epsilon(1e-12));
}

TEST_CASE("spectral mass scales as T^(1-alpha)") {
    SpectrumParams p;
    p.d = 3;
    p.alpha = 0.3;
    const double m1 = spectral_mass(p, 1.0);
    CHECK(m1 == doctest::Approx(4.0 * M_PI * radial_integral(p)).epsilon(1e-13));
    CHECK(spectral_mass(p, 8.0) == doctest::Approx(m1 * std::pow(8.0, 0.7)).epsilon(1e-12));
}

TEST_CASE("scaling exponents") {
    SpectrumParams p;
    auto e = scaling_exponents(p);
    CHECK(e.hurst == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(e.delta == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(2.0 * e.hurst * e.delta == doctest::Approx(1.0).epsilon(1e-15));
    p.alpha = 0.9;
    p.beta = 0.2;
    e = scaling_exponents(p);
    CHECK(e.delta == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(e.hurst == doctest::Approx(0.75).epsilon(1e-14));
    p.alpha = 0.0;
    p.beta = 0.5;
    CHECK_THROWS_AS(scaling_exponents(p), Error);
}

TEST_CASE("parameter validation") {
    SpectrumParams p;
    p.d = 4;
    CHECK_THROWS_AS(p.validate(), Error);
    p.d = 2;
    p.beta = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.beta = 0.75;
    p.alpha = 1.0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.alpha = 0.5;
    p.cutoff_radius = 0.0;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("projector by hand") {
    const Mat3 G = gamma_project(2, Vec3{3.0, 4.0, 0.0});
    CHECK(G[0][0] == doctest::Approx(16.0 / 25.0).epsilon(1e-15));
    CHECK(G[0][1] == doctest::Approx(-12.0 / 25.0).epsilon(1e-15));
    CHECK(G[1][1] == doctest::Approx(9.0 / 25.0).epsilon(1e-15));
    const Mat3 E1 = gamma_project(2, Vec3{1.0, 0.0, 0.0});
    CHECK(E1[0][0] == 0.0);
    CHECK(E1[0][1] == 0.0);
    CHECK(E1[1][1] == 1.0);
}

TEST_CASE("projector algebra over random wavevectors") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> N;
    for (int d : {2, 3})
        for (int it = 0; it < 2000; ++it) {
            Vec3 k{N(eng), N(eng), d == 3 ? N(eng) : 0.0};
            const double s = std::exp(4.0 * N(eng));
            for (auto& c : k) c *= s;
            const Mat3 G = gamma_project(d, k);
            double tr = 0.0;
            for (int i = 0; i < d; ++i) {
                tr += G[i][i];
                double gk = 0.0;
                for (int j = 0; j < d; ++j) {
                    gk += G[i][j] * k[j];
                    CHECK(std::abs(G[i][j] - G[j][i]) < 1e-15);
                    double gg = 0.0;
                    for (int l = 0; l < d; ++l) gg += G[i][l] * G[l][j];
                    CHECK(std::abs(gg - G[i][j]) < 1e-12);
                }
                CHECK(std::abs(gk) < 1e-12 * std::sqrt(norm2(k, d)));
            }
            CHECK(tr == doctest::Approx(d - 1.0).epsilon(1e-13));
        }
    CHECK_THROWS_AS(gamma_project(2, Vec3{0.0, 0.0, 0.0}), Error);
}

TEST_CASE("kernel variants") {
    SpectrumParams p;
    const Vec3 k{0.3, -0.2, 0.0}, k2{0.1, 0.25, 0.0};
    const double E = kernel_eval(p, KernelVariant::E, 1.0, 0.4, 1.3, k, k2);
    // pure power rate: the T = 1 rescaling is the identity
    CHECK(kernel_eval(p, KernelVariant::E_T, 1.0, 0.4, 1.3, k, k2) == doctest::Approx(E).epsilon(1e-14));
    // direct evaluation of sqrt(r a) |k|^{-(d+alpha-1)/2} e^{-r s/2}
    auto one = [&](const Vec3& q, double s) {
        const double n = std::sqrt(norm2(q, 2));
        return std::sqrt(p.rate(n) * p.cutoff(n)) * std::pow(n, -0.5 * (p.d + p.alpha - 1.0)) *
               std::exp(-0.5 * p.rate(n) * s);
    };
    CHECK(E == doctest::Approx(one(k, 0.4) * one(k2, 1.3)).epsilon(1e-13));
    // for |k| well inside R T the profile is flat and E_T agrees with E_inf
    const double Ei = kernel_eval(p, KernelVariant::E_inf, 0.0, 0.4, 1.3, k, k2);
    CHECK(kernel_eval(p, KernelVariant::E_T, 100.0, 0.4, 1.3, k, k2) == doctest::Approx(Ei).epsilon(1e-12));
    CHECK_THROWS_AS(kernel_eval(p, KernelVariant::E, 1.0, -0.1, 0.0, k, k2), Error);
    CHECK_THROWS_AS(kernel_eval(p, KernelVariant::E, 1.0, 0.0, 0.0, Vec3{}, k2), Error);
    // unit wavevectors at zero lag: the exponent (alpha + d - 1)/2 - beta vanishes
    CHECK(kernel_eval(p, KernelVariant::E_inf, 0.0, 0.0, 0.0, Vec3{1, 0, 0}, Vec3{0, 1, 0}) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // beyond the cutoff the kernel vanishes
    CHECK(kernel_eval(p, KernelVariant::E, 1.0, 0.0, 0.0, Vec3{1.5, 0.0, 0.0}, k2) == 0.0);
}

TEST_CASE("bump profile is smooth and compactly supported") {
    SpectrumParams p;
    p.cutoff_profile = CutoffProfile::bump;
    CHECK(p.cutoff(0.0) == doctest::Approx(p.a0));
    CHECK(p.cutoff(1.0) == 0.0);
    CHECK(p.cutoff(0.999) < 1e-100);
    CHECK(p.cutoff(0.5) > 0.0);
}

TEST_CASE("key-value config") {
    const std::string text =
        "# sweep\n"
        "params.alpha = 0.4\n"
        "params.beta=0.4   # inline\n"
        "\n"
        "params.cutoff_profile=bump\n"
        "run.replicas=100\n";
    const auto kv = parse_key_values(text);
    CHECK(kv.at("run.replicas") == "100");
    const auto p = params_from_kv(kv);
    CHECK(p.alpha == 0.4);
    CHECK(p.beta == 0.4);
    CHECK(p.cutoff_profile == CutoffProfile::bump);
    KeyValues back;
    params_to_kv(p, back);
    const auto p2 = params_from_kv(parse_key_values(format_key_values(back)));
    CHECK(p2.alpha == p.alpha);
    CHECK(p2.cutoff_radius == p.cutoff_radius);
    CHECK(p2.d == p.d);

    try {
        parse_key_values("params.alpha=0.5\nthis line is broken\n");
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK_THROWS_AS(params_from_kv(parse_key_values("params.alpha=abc\n")), Error);
    try {
        params_from_kv(parse_key_values("params.d=5\n"));
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::config);
    }
}

TEST_CASE("kernel symmetry, domination and the large-T limit") {
    std::mt19937_64 eng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (auto prof : {CutoffProfile::hat, CutoffProfile::bump}) {
        SpectrumParams p;
        p.cutoff_profile = prof;
        for (int it = 0; it < 500; ++it) {
            const Vec3 k{2.0 * U(eng) - 1.0, 2.0 * U(eng) - 1.0, 0.0};
            const Vec3 k2{2.0 * U(eng) - 1.0, 2.0 * U(eng) - 1.0, 0.0};
            const double s = 3.0 * U(eng), s2 = 3.0 * U(eng), T = 1.0 + 50.0 * U(eng);
            for (auto v : {KernelVariant::E, KernelVariant::E_T, KernelVariant::E_inf})
                CHECK(kernel_eval(p, v, T, s, s2, k, k2) ==
                      doctest::Approx(kernel_eval(p, v, T, s2, s, k2, k)).epsilon(1e-14));
            // a <= a0 and the rate is a pure power: C = c = 1
            CHECK(kernel_eval(p, KernelVariant::E_T, T, s, s2, k, k2) <=
                  kernel_eval(p, KernelVariant::E_inf, T, s, s2, k, k2) * (1.0 + 1e-13));
        }
        const Vec3 k{0.9, 0.0, 0.0}, k2{0.0, 0.95, 0.0};
        const double Ei = kernel_eval(p, KernelVariant::E_inf, 0.0, 0.2, 0.1, k, k2);
        double prev = 0.0;
        for (double T : {1.0, 10.0, 100.0}) {
            const double r = kernel_eval(p, KernelVariant::E_T, T, 0.2, 0.1, k, k2) / Ei;
            CHECK(r >= prev);
            prev = r;
        }
        CHECK(prev == doctest::Approx(1.0).epsilon(0.01));
    }
}
