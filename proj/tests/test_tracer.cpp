#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tlab/stats.hpp"
#include "tlab/tracer.hpp"

using namespace tlab;

namespace {

FieldSampler sampler(const SpectrumParams& p, double T, uint64_t seed, int n = 32,
                     FieldVariant v = FieldVariant::rescaled) {
    SamplerOptions o;
    o.variant = v;
    o.T = T;
    o.n_modes = n;
    o.mode_seed = seed;
    o.noise_seed = derive_seed(seed, 1);
    return FieldSampler(p, o);
}

double dist(const Vec3& a, const Vec3& b) { return std::sqrt(std::pow(a[0] - b[0], 2) + std::pow(a[1] - b[1], 2)); }

}  // namespace

TEST_CASE("config validation") {
    TrajectoryConfig c;
    c.T = 0.5;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.t_max = 0.001;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.substeps = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(default_substeps(1.0, 0.01) == 2);
    CHECK(default_substeps(100.0, 0.01) == 10);
    CHECK(default_substeps(100.0, 0.011) == 12);
}

TEST_CASE("vanishing field leaves the tracer at rest") {
    SpectrumParams p;
    auto fs = sampler(p, 2.0, 1);
    for (auto& g : fs.ensemble().g) g = 0.0;
    TrajectoryConfig c;
    c.T = 2.0;
    c.frozen = true;
    c.x0 = {0.3, -0.2, 0.0};
    const auto pr = integrate_pair(fs, c);
    for (const auto& x : pr.z.positions) CHECK(dist(x, c.x0) == 0.0);
    for (const auto& y : pr.y.positions) CHECK(dist(y, Vec3{}) == 0.0);
}

TEST_CASE("trajectory shape and determinism") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 2.0;
    c.t_max = 0.5;
    c.dt = 0.01;
    c.x0 = {0.1, 0.2, 0.0};
    auto a = sampler(p, 2.0, 7), b = sampler(p, 2.0, 7);
    const auto ta = integrate_z_T(a, c), tb = integrate_z_T(b, c);
    REQUIRE(ta.times.size() == 51);
    CHECK(ta.times.front() == 0.0);
    CHECK(ta.times.back() == doctest::Approx(0.5));
    CHECK(dist(ta.positions.front(), c.x0) == 0.0);
    CHECK(ta.positions == tb.positions);
    CHECK(ta.positions.size() == ta.times.size());
    // mismatched T
    auto s = sampler(p, 3.0, 7);
    CHECK_THROWS_AS(integrate_z_T(s, c), Error);
}

TEST_CASE("rk4 order on a frozen realization") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 1.0;
    c.t_max = 1.0;
    c.frozen = true;
    std::vector<Vec3> end;
    for (double dt : {0.1, 0.05, 0.025}) {
        auto fs = sampler(p, 1.0, 11, 16, FieldVariant::base);
        c.dt = dt;
        end.push_back(integrate_z_T(fs, c).positions.back());
    }
    const double e1 = dist(end[0], end[1]), e2 = dist(end[1], end[2]);
    CHECK(std::log2(e1 / e2) >= 3.5);
}

TEST_CASE("frozen y is a straight line") {
    SpectrumParams p;
    auto fs = sampler(p, 4.0, 3);
    const Vec3 v0 = fs.evaluate(Vec3{});
    TrajectoryConfig c;
    c.T = 4.0;
    c.frozen = true;
    c.t_max = 2.0;
    c.dt = 0.1;
    const auto y = integrate_y_T(fs, c);
    for (size_t i = 0; i < y.times.size(); ++i)
        for (int j = 0; j < 2; ++j) CHECK(y.positions[i][j] == doctest::Approx(y.times[i] * v0[j]).epsilon(1e-12));
}

TEST_CASE("y ignores the starting point") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 2.0;
    c.t_max = 0.3;
    c.dt = 0.01;
    auto a = sampler(p, 2.0, 5), b = sampler(p, 2.0, 5);
    const auto ya = integrate_y_T(a, c);
    c.x0 = {5.0, 5.0, 0.0};
    const auto yb = integrate_y_T(b, c);
    CHECK(ya.positions == yb.positions);
}

TEST_CASE("lagrangian series replays the recorded velocities") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 2.0;
    c.t_max = 0.4;
    c.dt = 0.02;
    c.substeps = 4;
    c.record_every = 3;
    auto fs = sampler(p, 2.0, 9);
    const auto tr = integrate_z_T(fs, c);
    auto fresh = sampler(p, 2.0, 9);
    const auto v = lagrangian_series(fresh, tr);
    REQUIRE(v.size() == tr.velocities.size());
    for (size_t i = 0; i < v.size(); ++i)
        for (int j = 0; j < 2; ++j) CHECK(v[i][j] == doctest::Approx(tr.velocities[i][j]).epsilon(1e-12));
    auto wrong = sampler(p, 2.0, 10);
    CHECK_THROWS_AS(lagrangian_series(wrong, tr), Error);
    auto used = sampler(p, 2.0, 9);
    used.step(0.1);
    CHECK_THROWS_AS(lagrangian_series(used, tr), Error);
}

TEST_CASE("msd curve") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 1.0;
    c.t_max = 0.5;
    c.dt = 0.05;
    std::vector<Trajectory> ens;
    for (int r = 0; r < 120; ++r) {
        auto fs = sampler(p, 1.0, derive_seed(1, r), 16);
        ens.push_back(integrate_z_T(fs, c));
    }
    const auto m = msd_curve(ens, {0.0, 0.25, 0.5});
    CHECK(m[0].value == 0.0);
    CHECK(m[1].value > 0.0);
    CHECK(m[2].value > m[1].value);
    CHECK(m[1].stderr_ > 0.0);
    CHECK_THROWS_AS(msd_curve(ens, {0.6}), Error);
    ens.resize(99);
    CHECK_THROWS_AS(msd_curve(ens, {0.25}), Error);
}

TEST_CASE("diffusive control") {
    // first-chaos field decorrelating much faster than the lags: MSD ~ t
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 1.0;
    c.t_max = 1.0;
    c.dt = 0.0025;
    c.record_every = 4;
    std::vector<Trajectory> ens;
    for (int r = 0; r < 400; ++r) {
        SamplerOptions o;
        o.variant = FieldVariant::gaussian;
        o.n_modes = 32;
        o.control_rate = 400.0;
        o.mode_seed = derive_seed(2, r);
        o.noise_seed = derive_seed(3, r);
        FieldSampler fs(p, o);
        c.substeps = default_substeps(fs.modes().theta_max(), c.dt);
        ens.push_back(integrate_z_T(fs, c));
    }
    const auto m = msd_curve(ens, {0.1, 0.2, 0.4, 0.7, 1.0});
    const auto f = estimate_hurst(m);
    CHECK(std::abs(f.slope - 1.0) < 0.1);
}

TEST_CASE("csv and sidecar") {
    SpectrumParams p;
    TrajectoryConfig c;
    c.T = 2.0;
    c.t_max = 0.1;
    c.dt = 0.05;
    auto fs = sampler(p, 2.0, 4);
    const auto tr = integrate_z_T(fs, c);
    const auto dir = std::filesystem::temp_directory_path();
    const auto csv = (dir / "tlab_tr.csv").string(), js = (dir / "tlab_tr.json").string();
    write_trajectory_csv(csv, tr);
    write_trajectory_sidecar(js, tr);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,x1,x2");
    int rows = 0;
    for (std::string l; std::getline(in, l);) ++rows;
    CHECK(rows == 3);
    std::ifstream jin(js);
    const auto j = nlohmann::json::parse(jin);
    CHECK(j["mode_seed"].get<uint64_t>() == tr.mode_seed);
    CHECK(j["config"]["T"].get<double>() == 2.0);
    CHECK(j.contains("code_version"));
    std::filesystem::remove(csv);
    std::filesystem::remove(js);
    CHECK_THROWS_AS(write_trajectory_csv("/nonexistent/dir/x.csv", tr), Error);
}
