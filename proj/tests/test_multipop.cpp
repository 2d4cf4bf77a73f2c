#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "cmkv/finite_system.hpp"
#include "cmkv/limit_system.hpp"
#include "cmkv/multipop.hpp"
#include "cmkv/stats.hpp"

using namespace cmkv;

#ifndef CMKV_SOURCE_DIR
#define CMKV_SOURCE_DIR "."
#endif

namespace {

std::string config_path(const std::string& name) {
    return std::string(CMKV_SOURCE_DIR) + "/configs/" + name;
}

}  // namespace

TEST_CASE("one population reduces bit-for-bit to the finite engine") {
    const auto model = build_model(R"json({"model":"example3","params":{"sigma":0.3}})json");
    const MultiPopSpec spec = single_population_spec(model, 30);

    MultiPopSimConfig mcfg;
    mcfg.horizon = 0.3;
    mcfg.dt = 0.01;
    mcfg.seed = 2024;
    mcfg.record_jump_log = true;
    const auto bundles = simulate_multipop_finite(spec, mcfg, 4);

    FiniteSimConfig fcfg;
    fcfg.n_particles = 30;
    fcfg.horizon = 0.3;
    fcfg.dt = 0.01;
    fcfg.seed = 2024;
    fcfg.record_jump_log = true;
    const TrajectoryBundle single = simulate_finite(*model, fcfg, 4);

    REQUIRE(bundles.size() == 1);
    CHECK(bundles[0].states == single.states);
    REQUIRE(bundles[0].jump_log->size() == single.jump_log->size());
    for (std::size_t e = 0; e < single.jump_log->size(); ++e) {
        CHECK((*bundles[0].jump_log)[e].time == (*single.jump_log)[e].time);
        CHECK((*bundles[0].jump_log)[e].receiver_increments ==
              (*single.jump_log)[e].receiver_increments);
    }
}

TEST_CASE("one population reduces bit-for-bit to the limit engine") {
    for (const char* cfg_text :
         {R"json({"model":"example1","params":{"sigma":0.2}})json",
          R"json({"model":"arctan_rademacher"})json"}) {
        const auto model = build_model(cfg_text);
        const MultiPopSpec spec = single_population_spec(model, 20);

        MultiPopSimConfig mcfg;
        mcfg.horizon = 0.2;
        mcfg.dt = 0.01;
        mcfg.seed = 555;
        const auto bundles = simulate_multipop_limit(spec, mcfg, 7);

        LimitSimConfig lcfg;
        lcfg.n_copies = 20;
        lcfg.horizon = 0.2;
        lcfg.dt = 0.01;
        lcfg.seed = 555;
        const TrajectoryBundle single = simulate_limit(*model, lcfg, 7);

        REQUIRE(bundles.size() == 1);
        CHECK(bundles[0].states == single.states);
    }
}

TEST_CASE("populations with no inputs are independent") {
    MultiPopSpec spec;
    const auto model = build_model(R"json({"model":"example1"})json");
    spec.populations.push_back({model, 16});
    spec.populations.push_back({model, 16});
    spec.inputs = {{}, {}};

    MultiPopSimConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 0.01;
    cfg.seed = 31;
    const int reps = 300;
    std::vector<double> m1(reps), m2(reps);
    for (int r = 0; r < reps; ++r) {
        const auto bundles = simulate_multipop_finite(spec, cfg, static_cast<std::uint32_t>(r));
        const auto mean_of = [](const TrajectoryBundle& b) {
            double s = 0.0;
            for (double x : b.states.back()) s += x;
            return s / static_cast<double>(b.states.back().size());
        };
        m1[r] = mean_of(bundles[0]);
        m2[r] = mean_of(bundles[1]);
    }
    CHECK(std::abs(sample_correlation(m1, m2)) < 4.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("chain graph: events of population 1 land only in population 2's log") {
    MultiPopSpec spec;
    const auto model = build_model(R"json({"model":"example1"})json");
    spec.populations.push_back({model, 8});
    spec.populations.push_back({model, 8});
    spec.inputs = {{}, {0}};  // I(2) = {1}, nothing feeds population 1
    CrossKernel ck;
    ck.fn = [](double, double, const EmpiricalMeasure1D&, const EmpiricalMeasure1D&, double u,
               double) { return u; };
    ck.state_independent = true;
    spec.kernels[{0, 1}] = ck;

    MultiPopSimConfig cfg;
    cfg.horizon = 1.0;
    cfg.dt = 0.01;
    cfg.seed = 99;
    cfg.record_jump_log = true;
    const auto bundles = simulate_multipop_finite(spec, cfg);
    CHECK(bundles[0].jump_log->empty());
    REQUIRE(!bundles[1].jump_log->empty());
    for (const JumpEvent& ev : *bundles[1].jump_log) {
        CHECK(ev.sender_pop == 0);
        double sum_abs = 0.0;
        for (double i : ev.receiver_increments) sum_abs += std::abs(i);
        CHECK(sum_abs > 0.0);
    }
}

TEST_CASE("limit system: disjoint input sets give independent conditional means") {
    const MultiPopSpec spec = build_multipop_file(config_path("multipop_tree.json"));
    REQUIRE(spec.n_pop() == 7);

    MultiPopSimConfig cfg;
    cfg.horizon = 0.5;
    cfg.dt = 2e-3;
    cfg.seed = 404;
    const int reps = 100;
    std::vector<double> mean2(reps), mean3(reps);
    for (int r = 0; r < reps; ++r) {
        const auto bundles = simulate_multipop_limit(spec, cfg, static_cast<std::uint32_t>(r));
        const auto mean_of = [](const TrajectoryBundle& b) {
            double s = 0.0;
            for (double x : b.states.back()) s += x;
            return s / static_cast<double>(b.states.back().size());
        };
        mean2[r] = mean_of(bundles[1]);
        mean3[r] = mean_of(bundles[2]);
    }
    // the conditional means move with the input populations' common noises,
    // which are disjoint for populations 2 and 3
    CHECK(mean_stderr(mean2).stderr_ > 0.0);
    CHECK(std::abs(sample_correlation(mean2, mean3)) <
          4.0 / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("population 1 of the tree reads the common panels of both inputs") {
    const MultiPopSpec spec = build_multipop_file(config_path("multipop_tree.json"));
    MultiPopSimConfig cfg;
    cfg.horizon = 0.25;
    cfg.dt = 5e-3;
    cfg.seed = 17;
    cfg.record_increment_copies = 2;
    const auto bundles = simulate_multipop_limit(spec, cfg);
    // kernel u has kappa = 0: every recorded idio increment vanishes, and both
    // copies of population 1 receive identical common increments (rank 1 per
    // input panel)
    const IncrementLog& log = *bundles[0].increments;
    for (std::uint32_t s = 0; s < log.steps; ++s) {
        CHECK(log.idio_at(s, 0) == 0.0);
        CHECK(log.common_at(s, 0) == doctest::Approx(log.common_at(s, 1)).epsilon(1e-12));
    }
}

TEST_CASE("within-population exchangeability in the finite multipop system") {
    MultiPopSpec spec;
    const auto model = build_model(R"json({"model":"example3","params":{"sigma":0.4}})json");
    spec.populations.push_back({model, 12});
    spec.populations.push_back({model, 12});
    spec.inputs = {{1}, {}};
    CrossKernel ck;
    ck.fn = [model](double x, double y, const EmpiricalMeasure1D& ml,
                    const EmpiricalMeasure1D&, double u, double v) {
        return model->jump(x, y, ml, u, v);
    };
    ck.state_independent = true;
    spec.kernels[{1, 0}] = ck;

    MultiPopSimConfig cfg;
    cfg.horizon = 0.4;
    cfg.dt = 0.01;
    cfg.seed = 3;
    const int reps = 400;
    std::vector<double> a(reps), b(reps);
    for (int r = 0; r < reps; ++r) {
        const auto bundles = simulate_multipop_finite(spec, cfg, static_cast<std::uint32_t>(r));
        a[r] = bundles[0].states.back()[0];
        b[r] = bundles[0].states.back()[1];
    }
    CHECK(ks_two_sample(a, b) < ks_threshold(0.001, reps, reps));
}

TEST_CASE("config parsing and validation errors") {
    CHECK_THROWS_AS(build_multipop("{}"), ConfigError);
    // missing cross kernel for a declared edge
    CHECK_THROWS_AS(build_multipop(R"json({
        "populations": [{"model":"example1"}, {"model":"example1"}],
        "inputs": {"1": [2]}, "cross_kernels": {}})json"),
                    ConfigError);
    // uncentred cross kernel
    CHECK_THROWS_AS(build_multipop(R"json({
        "populations": [{"model":"example1"}, {"model":"example1"}],
        "inputs": {"1": [2]}, "cross_kernels": {"2->1": "1 + u*v"}})json"),
                    ConfigError);
    // valid two-population chain
    const MultiPopSpec spec = build_multipop(R"json({
        "populations": [{"model":"example1"}, {"model":"example2"}],
        "sizes": [4, 6],
        "inputs": {"1": [2]}, "cross_kernels": {"2->1": "u*(1+v)"}})json");
    CHECK(spec.n_pop() == 2);
    CHECK(spec.populations[1].size == 6);
    const EmpiricalMeasure1D m({0.0});
    CHECK(spec.kappa_sq(1, 0, 0.0, 0.0, m, m) == doctest::Approx(1.0));
}
