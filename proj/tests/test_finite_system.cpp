#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cmkv/diagnostics.hpp"
#include "cmkv/finite_system.hpp"
#include "cmkv/stats.hpp"

using namespace cmkv;

TEST_CASE("all dynamics off: trajectories stay at the initial draws") {
    const auto model = build_model(R"json({"model":"zero_dynamics"})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 8;
    cfg.horizon = 1.0;
    cfg.dt = 0.01;
    cfg.seed = 3;
    const TrajectoryBundle b = simulate_finite(*model, cfg);
    for (const auto& row : b.states) CHECK(row == b.states.front());
}

TEST_CASE("pure Brownian case: unit variance of increments over [0,1]") {
    const auto model = build_model(
        R"json({"model":"example1","params":{"sigma":1.0,"rate":1e-12,"f_max":1e-12}})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 2;
    cfg.horizon = 1.0;
    cfg.dt = 1e-2;
    cfg.seed = 17;
    cfg.grid_stride = 100;
    const int reps = 4000;
    double ss = 0.0;
    for (int r = 0; r < reps; ++r) {
        const TrajectoryBundle b = simulate_finite(*model, cfg, static_cast<std::uint32_t>(r));
        const double d = b.states.back()[0] - b.states.front()[0];
        ss += d * d;
    }
    CHECK(ss / reps == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("jump term is a centred martingale: E[X_T] = E[X_0]") {
    const auto model = build_model(R"json({"model":"example1"})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 200;
    cfg.horizon = 1.0;
    cfg.dt = 1e-2;
    cfg.seed = 5;
    cfg.grid_stride = 100;
    const int reps = 200;
    std::vector<double> diff(reps);
    for (int r = 0; r < reps; ++r) {
        const TrajectoryBundle b = simulate_finite(*model, cfg, static_cast<std::uint32_t>(r));
        diff[r] = b.states.back()[0] - b.states.front()[0];
    }
    const MeanStderr ms = mean_stderr(diff);
    CHECK(std::abs(ms.mean) <= 4.0 * ms.stderr_);
}

TEST_CASE("exchangeability: particle 1 and particle 2 share a marginal law") {
    const auto model = build_model(R"json({"model":"example3","params":{"sigma":0.5}})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 20;
    cfg.horizon = 0.5;
    cfg.dt = 1e-2;
    cfg.seed = 23;
    cfg.grid_stride = 50;
    const int reps = 600;
    std::vector<double> first(reps), second(reps);
    for (int r = 0; r < reps; ++r) {
        const TrajectoryBundle b = simulate_finite(*model, cfg, static_cast<std::uint32_t>(r));
        first[r] = b.states.back()[0];
        second[r] = b.states.back()[1];
    }
    CHECK(ks_two_sample(first, second) < ks_threshold(0.001, reps, reps));
}

TEST_CASE("jump-size scaling: single-event increments bounded by N^{-1/2} sup|Psi|") {
    const auto model = build_model(R"json({"model":"example3"})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 50;
    cfg.horizon = 1.0;
    cfg.dt = 1e-2;
    cfg.seed = 31;
    cfg.record_jump_log = true;
    cfg.grid_stride = 100;
    const TrajectoryBundle b = simulate_finite(*model, cfg);
    REQUIRE(b.jump_log);
    REQUIRE(!b.jump_log->empty());
    const double bound = 2.0 / std::sqrt(50.0);  // sup |u(1+v)| = 2 under Rademacher
    for (const JumpEvent& ev : *b.jump_log)
        for (double incr : ev.receiver_increments) CHECK(std::abs(incr) <= bound + 1e-15);
}

TEST_CASE("a-priori second moment shows no growth in N") {
    const auto model = build_model(R"json({"model":"example3"})json");
    std::vector<double> estimates;
    for (std::uint32_t n : {25u, 50u, 100u, 200u, 400u}) {
        FiniteSimConfig cfg;
        cfg.n_particles = n;
        cfg.horizon = 1.0;
        cfg.dt = 1e-2;
        cfg.seed = 41;
        const int reps = 40;
        double acc = 0.0;
        for (int r = 0; r < reps; ++r)
            acc += sup_square_of_particle(
                simulate_finite(*model, cfg, static_cast<std::uint32_t>(r)), 0);
        estimates.push_back(acc / reps);
    }
    const double med = median(std::vector<double>(estimates));
    for (double e : estimates) CHECK(e <= 1.25 * med);
}

TEST_CASE("determinism: identical seed reproduces states; OpenMP matches serial bitwise") {
    const auto model = build_model(R"json({"model":"arctan_rademacher","params":{"sigma":0.3}})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 40;
    cfg.horizon = 0.2;
    cfg.dt = 1e-2;
    cfg.seed = 0xDEADBEEF;
    cfg.record_jump_log = true;
    const TrajectoryBundle a = simulate_finite(*model, cfg, 9);
    const TrajectoryBundle b = simulate_finite(*model, cfg, 9);
    CHECK(a.states == b.states);
    cfg.exec = Exec::openmp;
    const TrajectoryBundle c = simulate_finite(*model, cfg, 9);
    CHECK(a.states == c.states);
    REQUIRE(a.jump_log->size() == c.jump_log->size());
    for (std::size_t e = 0; e < a.jump_log->size(); ++e)
        CHECK((*a.jump_log)[e].receiver_increments == (*c.jump_log)[e].receiver_increments);
}

TEST_CASE("empirical_path: atoms, normalization and the initial law") {
    const auto model = build_model(R"json({"model":"zero_dynamics"})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 2;
    cfg.horizon = 0.1;
    cfg.dt = 0.05;
    cfg.seed = 7;
    const TrajectoryBundle b = simulate_finite(*model, cfg);
    const EmpiricalMeasure1D m = empirical_path(b, 0.0);
    CHECK(m.size() == 2);
    CHECK(m.integrate([](double) { return 1.0; }) == 1.0);
    CHECK_THROWS_AS(empirical_path(b, 0.033), std::invalid_argument);

    const int reps = 2000;
    double acc = 0.0;
    for (int r = 0; r < reps; ++r)
        acc += empirical_path(simulate_finite(*model, cfg, static_cast<std::uint32_t>(r)), 0.0)
                   .mean();
    CHECK(std::abs(acc / reps) < 4.0 / std::sqrt(2.0 * reps));  // nu_0 = N(0,1)
}

TEST_CASE("rate observed above the declared bound aborts") {
    const auto model = build_model(
        R"json({"model":"custom","psi":"u*v","f":"2","f_max":1.0})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 4;
    cfg.horizon = 0.1;
    cfg.dt = 0.05;
    CHECK_THROWS_WITH_AS(simulate_finite(*model, cfg), "rate bound violated", ModelError);
}

TEST_CASE("config validation") {
    const auto model = build_model(R"json({"model":"example1"})json");
    FiniteSimConfig cfg;
    cfg.n_particles = 1;
    CHECK_THROWS_AS(simulate_finite(*model, cfg), ConfigError);
    cfg.n_particles = 4;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(simulate_finite(*model, cfg), ConfigError);
    cfg.dt = 0.3;
    cfg.horizon = 1.0;  // not a multiple of dt
    CHECK_THROWS_AS(simulate_finite(*model, cfg), ConfigError);
}
