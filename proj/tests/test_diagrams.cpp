#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <chrono>
#include <functional>
#include <set>

#include "tlab/diagrams.hpp"

using namespace tlab;

namespace {

// Independent oracle: every perfect matching of 2n labelled hands, filtered for
// intra-node links afterwards; components by depth-first search.
struct Brute {
    long complete = 0, single = 0;
    std::map<std::vector<int>, long> sizes;
};

Brute brute_force(int n) {
    Brute b;
    const int H = 2 * n;
    std::vector<int> mate(H, -1);
    std::function<void()> rec = [&] {
        int a = 0;
        while (a < H && mate[a] >= 0) ++a;
        if (a == H) {
            for (int h = 0; h < H; ++h)
                if (h / 2 == mate[h] / 2) return;
            ++b.complete;
            std::vector<int> comp(n, -1);
            std::vector<int> sz;
            for (int s = 0; s < n; ++s) {
                if (comp[s] >= 0) continue;
                int cnt = 0;
                std::vector<int> stack = {s};
                comp[s] = s;
                while (!stack.empty()) {
                    const int v = stack.back();
                    stack.pop_back();
                    ++cnt;
                    for (int hand : {2 * v, 2 * v + 1}) {
                        const int w = mate[hand] / 2;
                        if (comp[w] < 0) {
                            comp[w] = s;
                            stack.push_back(w);
                        }
                    }
                }
                sz.push_back(cnt);
            }
            std::sort(sz.begin(), sz.end());
            if (sz.size() == 1) ++b.single;
            ++b.sizes[sz];
            return;
        }
        for (int c = a + 1; c < H; ++c) {
            if (mate[c] >= 0) continue;
            mate[a] = c;
            mate[c] = a;
            rec();
            mate[a] = mate[c] = -1;
        }
    };
    rec();
    return b;
}

}  // namespace

TEST_CASE("diagram census against brute force") {
    const auto t0 = std::chrono::steady_clock::now();
    const long want[] = {0, 0, 2, 8, 60, 544, 6040};
    CHECK(enumerate_complete(1).empty());
    for (int n = 2; n <= 6; ++n) {
        const auto c = diagram_census(n);
        const auto b = brute_force(n);
        CHECK(c.complete == want[n]);
        CHECK(c.complete == b.complete);
        CHECK(c.complete == count_complete_formula(n));
        CHECK(c.single_cycle == b.single);
        long fact = 1;
        for (int k = 2; k < n; ++k) fact *= k;
        CHECK(c.single_cycle == fact * (1L << (n - 1)));
        for (const auto& [sz, cnt] : b.sizes) CHECK(c.by_component_sizes.at(sz) == cnt);
        CHECK(c.by_component_sizes.size() == b.sizes.size());
    }
    CHECK(diagram_census(4).by_component_sizes.at({2, 2}) == 12);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(secs < 10.0);
}

TEST_CASE("emitted diagrams are valid and distinct") {
    const auto all = enumerate_complete(5);
    std::set<std::vector<std::pair<int, int>>> seen;
    for (const auto& g : all) {
        CHECK_NOTHROW(g.validate());
        CHECK(g.complete());
        auto l = g.links;
        std::sort(l.begin(), l.end());
        seen.insert(l);
    }
    CHECK(seen.size() == all.size());
    CHECK_THROWS_AS(enumerate_complete(7), Error);
    long n7 = 0;
    for_each_complete(7, 2, [&](const Diagram&) { ++n7; });
    CHECK(n7 == count_complete_formula(7));
    CHECK_THROWS_AS(for_each_complete(9, 2, [](const Diagram&) {}), Error);
    Diagram bad;
    bad.n = 2;
    bad.links = {{0, 1}};
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("components and cycles") {
    Diagram two;
    two.n = 4;
    two.links = {{0, 2}, {1, 3}, {4, 6}, {5, 7}};
    CHECK(connected_components(two).size() == 2);
    Diagram ring;
    ring.n = 4;
    ring.links = {{1, 2}, {3, 4}, {5, 6}, {0, 7}};
    const auto comps = connected_components(ring);
    REQUIRE(comps.size() == 1);
    const auto ord = cycle_order(ring, comps[0]);
    CHECK(ord.size() == 4);
    Diagram part;
    part.n = 2;
    part.links = {{0, 2}};
    part.free = {1, 3};
    CHECK_THROWS_AS(connected_components(part), Error);
}

TEST_CASE("Gaussian one-hand diagrams") {
    long n4 = 0, n6 = 0, n3 = 0;
    for_each_complete(4, 1, [&](const Diagram&) { ++n4; });
    for_each_complete(6, 1, [&](const Diagram&) { ++n6; });
    for_each_complete(3, 1, [&](const Diagram&) { ++n3; });
    CHECK(n4 == 3);
    CHECK(n6 == 15);
    CHECK(n3 == 0);
}

TEST_CASE("cycle constant") {
    SpectrumParams p;
    CHECK(cycle_constant_C(p) == doctest::Approx(14.137).epsilon(2e-4));
    // 1-d quadrature of S int rho^{-alpha} exp(-r0 rho^{2 beta}/2)
    for (double a : {0.1, 0.5, 0.8}) {
        p.alpha = a;
        auto f = [&](double u) {
            // rho = u^{1/(1-a)} removes the endpoint singularity
            const double rho = std::pow(u, 1.0 / (1.0 - a));
            return std::exp(-0.5 * std::pow(rho, 2.0 * p.beta)) / (1.0 - a);
        };
        const double q = 2.0 * M_PI * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                                          f, 0.0, std::numeric_limits<double>::infinity(), 10, 1e-12);
        CHECK(cycle_constant_C(p) == doctest::Approx(q).epsilon(1e-9));
    }
    p.alpha = 0.0;
    p.beta = 0.5;
    CHECK(cycle_constant_C(p) == doctest::Approx(2.0 * 2.0 * M_PI).epsilon(1e-14));
    p.beta = 0.75;
    // Gamma((1 - alpha) / (2 beta)) grows as alpha -> 1, so C increases with alpha
    double prev = 0.0;
    for (double a = 0.05; a < 1.0; a += 0.1) {
        p.alpha = a;
        const double c = cycle_constant_C(p);
        CHECK(c > prev);
        prev = c;
    }
    p.alpha = 1.0;
    CHECK_THROWS_AS(cycle_constant_C(p), Error);
}

TEST_CASE("cycle time integrals") {
    const Psi one{{1.0}, {1.0}};
    CHECK(cycle_time_integral(2, one, 2.0 / 3.0, 50).value == doctest::Approx(4.5).epsilon(1e-13));
    CHECK(cycle_time_integral(2, one, 0.999, 50).value == doctest::Approx(1.0 / (0.999 * 0.998)).epsilon(1e-12));
    // two-step psi, n = 2: psi = 1[0,1] - 0.6 1[0,0.4] and
    //   int_0^x int_0^y |t - s|^{2H-2} = (x^{2H} + y^{2H} - |x - y|^{2H}) / (2H (2H - 1))
    const Psi two{{1.0, -0.6}, {1.0, 0.4}};
    const double H = 0.75;
    auto G = [&](double x, double y) {
        return (std::pow(x, 2 * H) + std::pow(y, 2 * H) - std::pow(std::abs(x - y), 2 * H)) / (2 * H * (2 * H - 1));
    };
    double ref = 0.0;
    for (size_t i = 0; i < 2; ++i)
        for (size_t j = 0; j < 2; ++j) ref += two.b[i] * two.b[j] * G(two.r[i], two.r[j]);
    CHECK(cycle_time_integral(2, two, H, 50).value == doctest::Approx(ref).epsilon(1e-12));

    // n = 3 closed form on [0,1]: 6 B(H,H) / (3H (3H - 1))
    for (double h : {2.0 / 3.0, 0.8}) {
        const auto e = cycle_time_integral(3, one, h, 100);
        const double want = 6.0 * boost::math::beta(h, h) / (3.0 * h * (3.0 * h - 1.0));
        CHECK(e.value > 0.0);
        CHECK(std::abs(e.value - want) < 3.0 * e.stderr_ + 1e-7 * want);
        const auto f = cycle_time_integral(3, one, h, 200);
        CHECK(std::abs(f.value - e.value) <= e.stderr_);
    }
    // scaling: psi = 1[0, r] gives r^{nH}
    const Psi wide{{1.0}, {2.5}};
    const auto a = cycle_time_integral(4, one, 0.7, 100), b = cycle_time_integral(4, wide, 0.7, 100);
    CHECK(b.value == doctest::Approx(a.value * std::pow(2.5, 4 * 0.7)).epsilon(1e-5));
    CHECK_THROWS_AS(cycle_time_integral(3, one, 0.5, 100), Error);
    CHECK_THROWS_AS(cycle_time_integral(3, one, 1.0, 100), Error);
    CHECK_THROWS_AS(cycle_time_integral(1, one, 0.7, 100), Error);
}

TEST_CASE("moments of Z") {
    SpectrumParams p;
    const Psi one{{1.0}, {1.0}};
    const double C = cycle_constant_C(p), H = 2.0 / 3.0;
    CHECK(moment_Z(one, 1, p).value == 0.0);
    CHECK(moment_Z(one, 2, p).value == doctest::Approx(9.0 * C * C).epsilon(1e-12));
    // quoted reference figure 1798.7 is 9 C^2 = 1799.0 rounded
    CHECK(moment_Z(one, 2, p).value == doctest::Approx(1798.7).epsilon(5e-4));
    const auto i3 = eval_IG_cycle(3, one, H, 200, C);
    CHECK(moment_Z(one, 3, p).value == doctest::Approx(8.0 * i3.value).epsilon(1e-12));
    const auto i4 = eval_IG_cycle(4, one, H, 200, C), i2 = eval_IG_cycle(2, one, H, 200, C);
    const auto m4 = moment_Z(one, 4, p);
    CHECK(m4.value == doctest::Approx(48.0 * i4.value + 12.0 * i2.value * i2.value).epsilon(1e-12));
    const double m2 = moment_Z(one, 2, p).value;
    CHECK(m4.value / (m2 * m2) - 3.0 > 0.0);
    CHECK_THROWS_AS(moment_Z(one, 7, p), Error);
}

TEST_CASE("moments with the projector") {
    SpectrumParams p;
    p.beta = 1.25;  // H = 0.8
    const XNode z0{1.0, 0, Projection::identity};
    const auto zz = moment_X({z0, z0}, p, 40000, 3);
    const Psi one{{1.0}, {1.0}};
    const auto exact = moment_Z(one, 2, p);
    CHECK_FALSE(zz.flagged);
    CHECK(std::abs(zz.value.value - exact.value) < 3.0 * zz.value.stderr_ + 1e-9 * exact.value);
    const XNode x0{1.0, 0, Projection::gamma}, xt1{1.0, 1, Projection::complement}, xt0{1.0, 0, Projection::complement};
    const auto xx = moment_X({x0, x0}, p, 40000, 4);
    CHECK(xx.value.value < exact.value);
    for (const auto& other : {xt0, xt1}) {
        const auto c = moment_X({x0, other}, p, 40000, 5);
        CHECK(std::abs(c.value.value) < 3.0 * c.value.stderr_ + 1e-9 * exact.value);
    }
    // three nodes with identity projection: the n = 3 cycle value
    const auto z3 = moment_X({z0, z0, z0}, p, 80000, 6);
    const auto e3 = moment_Z(one, 3, p);
    CHECK(std::abs(z3.value.value - e3.value) < 3.0 * std::hypot(z3.value.stderr_, e3.stderr_));
    CHECK_THROWS_AS(moment_X(std::vector<XNode>(5, z0), p, 1000), Error);
}

TEST_CASE("product formula on discretized noise") {
    for (int n = 1; n <= 3; ++n) {
        const auto r = validate_product_formula(n, 6, 100 + n);
        CHECK(r.pass);
        CHECK(r.g_pass);
        if (n == 1) CHECK(r.exact == 0.0);
    }
    CHECK_THROWS_AS(validate_product_formula(4, 6, 1), Error);
    CHECK_THROWS_AS(validate_product_formula(2, 9, 1), Error);
}
