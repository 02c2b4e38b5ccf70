#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tlab/modes.hpp"

using namespace tlab;

TEST_CASE("mode set construction errors") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 7;
    CHECK_THROWS_AS(build_mode_set(p, o), Error);
    o.n_modes = 2;
    CHECK_THROWS_AS(build_mode_set(p, o), Error);  // < 2d
    o.n_modes = kMaxModes + 2;
    CHECK_THROWS_AS(build_mode_set(p, o), Error);
    o.n_modes = 64;
    o.T_scale = 0.5;
    CHECK_THROWS_AS(build_mode_set(p, o), Error);
}

TEST_CASE("minimal lattice set") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 2;
    o.scheme = ModeScheme::lattice;
    const auto ms = build_mode_set(p, o);
    REQUIRE(ms.size() == 2);
    CHECK(ms.k[0][0] == -ms.k[1][0]);
    CHECK(ms.k[0][1] == -ms.k[1][1]);
    CHECK(ms.weight[0] == ms.weight[1]);
}

TEST_CASE("reflection symmetry and stored support") {
    for (auto scheme : {ModeScheme::radial_stratified, ModeScheme::lattice})
        for (int d : {2, 3}) {
            SpectrumParams p;
            p.d = d;
            ModeOptions o;
            o.n_modes = 96;
            o.scheme = scheme;
            o.T_scale = 4.0;
            o.seed = 5;
            const auto ms = build_mode_set(p, o);
            for (int m = 0; m < ms.size(); ++m) {
                const int q = ms.partner(m);
                CHECK(ms.partner(q) == m);
                for (int j = 0; j < d; ++j) CHECK(ms.k[q][j] == -ms.k[m][j]);
                CHECK(ms.weight[q] == ms.weight[m]);
                CHECK(ms.theta[m] == doctest::Approx(0.5 * p.rate(std::sqrt(norm2(ms.k[m], d)))));
                CHECK(std::sqrt(norm2(ms.k[m], d)) <= p.cutoff_radius * o.T_scale);
                // folded amplitude: amp^2 / (2 theta) = w a(|k|/T) |k|^{1-alpha-d}
                const double rho = std::sqrt(norm2(ms.k[m], d));
                const double dens = p.cutoff(rho / o.T_scale) * std::pow(rho, 1.0 - p.alpha - d);
                CHECK(ms.spectral_weight(m) == doctest::Approx(ms.weight[m] * dens).epsilon(1e-12));
            }
        }
}

TEST_CASE("weighted mode measure reproduces the spectral mass") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 1024;
    const auto ms = build_mode_set(p, o);
    double s = 0.0;
    for (int m = 0; m < ms.size(); ++m) s += ms.spectral_weight(m);
    // one-dimensional radial quadrature oracle, independent of the mode sampler
    const double M = sphere_area(2) * radial_integral(p);
    CHECK(s == doctest::Approx(M).epsilon(0.01));
    // lattice: midpoint rule in v = rho^{1-alpha}, converges with refinement
    o.scheme = ModeScheme::lattice;
    double sl = 0.0;
    const auto ml = build_mode_set(p, o);
    for (int m = 0; m < ml.size(); ++m) sl += ml.spectral_weight(m);
    CHECK(sl == doctest::Approx(M).epsilon(0.01));
}

TEST_CASE("radial law quantiles") {
    SpectrumParams p;
    p.alpha = 0.3;
    // flat law: F(rho) = (rho / k_max)^{1-alpha}
    RadialLaw flat(p, 1.0, true, 5.0);
    for (double u : {0.01, 0.3, 0.77, 1.0}) CHECK(flat.quantile(u) == doctest::Approx(5.0 * std::pow(u, 1.0 / 0.7)));
    RadialLaw law(p, 2.0, false, 0.0);
    double prev = 0.0;
    for (int i = 1; i <= 100; ++i) {
        const double q = law.quantile(i / 100.0);
        CHECK(q > prev);
        prev = q;
    }
    CHECK(prev == doctest::Approx(2.0).epsilon(1e-9));
    // inside the flat part of the hat: F(rho) = rho^g / (g * integral)
    const double I = radial_integral(p), g = 0.7;
    const double u = std::pow(0.2, g) / (g * I);
    CHECK(law.quantile(u) == doctest::Approx(2.0 * 0.2).epsilon(1e-10));
}

TEST_CASE("stationary initialization") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 8;
    const auto ms = build_mode_set(p, o);
    const auto a = ou_init_stationary(ms, 42), b = ou_init_stationary(ms, 42);
    CHECK(a.g == b.g);
    for (int j = 0; j < 2; ++j)
        for (int m = 0; m < ms.size(); ++m) CHECK(a.at(j, ms.partner(m)) == std::conj(a.at(j, m)));

    const int reps = 100000;
    double s2 = 0.0, s4 = 0.0, mr = 0.0, mr2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        const auto e = ou_init_stationary(ms, derive_seed(9, r));
        const double v = std::norm(e.at(0, 0)) * 2.0 * ms.theta[0];
        s2 += v;
        s4 += v * v;
        const double re = e.at(1, 2).real();
        mr += re;
        mr2 += re * re;
    }
    const double mean = s2 / reps, se = std::sqrt((s4 / reps - mean * mean) / reps);
    CHECK(std::abs(mean - 1.0) < 3.0 * se);
    const double m1 = mr / reps, se1 = std::sqrt((mr2 / reps - m1 * m1) / reps);
    CHECK(std::abs(m1) < 3.0 * se1);
}

TEST_CASE("exact OU update") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 8;
    const auto ms = build_mode_set(p, o);
    auto e = ou_init_stationary(ms, 1);
    CHECK_THROWS_AS(ou_step(e, ms, 0.0), Error);
    CHECK_THROWS_AS(ou_step(e, ms, -1.0), Error);

    // semigroup: the variance identity of two half steps vs one step
    const double th = ms.theta[0], dt = 0.37;
    const double one = -std::expm1(-2.0 * th * dt) / (2.0 * th);
    const double half = -std::expm1(-th * dt) / (2.0 * th);
    CHECK(std::exp(-th * dt) * half + half == doctest::Approx(one).epsilon(1e-12));

    // autocorrelation E g(t) conj g(0) = e^{-theta t} / (2 theta)
    const int reps = 10000;
    const double t = 0.8;
    for (int m : {0, 3}) {
        double acc = 0.0, acc2 = 0.0;
        for (int r = 0; r < reps; ++r) {
            auto x = ou_init_stationary(ms, derive_seed(77, r));
            const auto g0 = x.at(0, m);
            ou_step(x, ms, 0.5 * t);
            ou_step(x, ms, 0.5 * t);
            const double c = (x.at(0, m) * std::conj(g0)).real();
            acc += c;
            acc2 += c * c;
        }
        const double mean = acc / reps, se = std::sqrt((acc2 / reps - mean * mean) / reps);
        const double want = std::exp(-ms.theta[m] * t) / (2.0 * ms.theta[m]);
        CHECK(std::abs(mean - want) < 3.0 * se);
    }

    // stationarity over many steps and preserved conjugate symmetry
    auto s = ou_init_stationary(ms, 5);
    for (int i = 0; i < 1000; ++i) ou_step(s, ms, 0.05);
    CHECK(s.time == doctest::Approx(50.0));
    for (int m = 0; m < ms.size(); ++m) CHECK(s.at(1, ms.partner(m)) == std::conj(s.at(1, m)));

    // full decorrelation
    auto u = ou_init_stationary(ms, 6);
    const auto before = u.at(0, 0);
    ou_step(u, ms, 1e6);
    CHECK(u.at(0, 0) != before);
}

TEST_CASE("ensemble bound to another mode set is rejected") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 8;
    const auto a = build_mode_set(p, o);
    o.seed = 1;
    const auto b = build_mode_set(p, o);
    auto e = ou_init_stationary(a, 1);
    CHECK_THROWS_AS(ou_step(e, b, 0.1), Error);
}

TEST_CASE("checkpoint round trip") {
    SpectrumParams p;
    ModeOptions o;
    o.n_modes = 16;
    o.seed = 3;
    const auto ms = build_mode_set(p, o);
    auto e = ou_init_stationary(ms, 12);
    for (int i = 0; i < 5; ++i) ou_step(e, ms, 0.1);
    const auto path = (std::filesystem::temp_directory_path() / "tlab_ck_test.bin").string();
    save_checkpoint(path, ms, e);
    ModeSet ms2;
    OUEnsemble e2;
    load_checkpoint(path, ms2, e2);
    CHECK(ms2.fingerprint() == ms.fingerprint());
    CHECK(e2.time == e.time);
    for (int i = 0; i < 7; ++i) {
        ou_step(e, ms, 0.03);
        ou_step(e2, ms2, 0.03);
    }
    CHECK(e.g == e2.g);

    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(load_checkpoint(path, ms2, e2), Error);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path, ms2, e2), Error);
}
