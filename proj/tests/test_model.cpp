#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "cmkv/model.hpp"
#include "cmkv/rng.hpp"
#include "oracles.hpp"

using namespace cmkv;

namespace {

// Brute-force expectations over Rademacher sign pairs and triples: the
// independent oracle for varsigma^2, xi^2 and kappa^2.
double rademacher_pair_mean(const std::function<double(double, double)>& h) {
    double s = 0.0;
    for (double u : {-1.0, 1.0})
        for (double v : {-1.0, 1.0}) s += h(u, v);
    return s / 4.0;
}

double rademacher_triple_mean(const std::function<double(double, double, double)>& h) {
    double s = 0.0;
    for (double u1 : {-1.0, 1.0})
        for (double u2 : {-1.0, 1.0})
            for (double u3 : {-1.0, 1.0}) s += h(u1, u2, u3);
    return s / 8.0;
}

}  // namespace

TEST_CASE("builtins: arctan_rademacher carries the Rademacher atoms") {
    const auto m = build_model(R"json({"model":"arctan_rademacher","params":{"epsilon":0.5}})json");
    REQUIRE(m->nu1().is_discrete());
    const auto& atoms = m->nu1().atoms();
    REQUIRE(atoms.size() == 2);
    CHECK(atoms[0].value == -1.0);
    CHECK(atoms[0].weight == 0.5);
    CHECK(atoms[1].value == 1.0);
    CHECK(atoms[1].weight == 0.5);
}

TEST_CASE("build_model error paths") {
    CHECK_THROWS_AS(build_model(R"json({"model":"nonsense"})json"), ConfigError);
    CHECK_THROWS_AS(build_model("not json at all"), ConfigError);
    CHECK_THROWS_AS(build_model(R"json({"model":"custom","psi":"u*v","f_max":-1.0})json"),
                    ConfigError);
    // f == -1 trips the strict-positivity check at the first rate evaluation
    const auto bad = build_model(
        R"json({"model":"custom","psi":"u*v","f":"-1","f_max":1.0})json");
    const EmpiricalMeasure1D m({0.0});
    CHECK_THROWS_WITH_AS(static_cast<void>(bad->checked_rate(0.0, m)),
                         "rate must be strictly positive", ModelError);
    // a clearly uncentred kernel is rejected at build time
    CHECK_THROWS_AS(build_model(R"json({"model":"custom","psi":"1","f_max":1.0})json"), ConfigError);
    // malformed expression tree
    CHECK_THROWS_AS(build_model(R"json({"model":"custom","psi":"u*(v","f_max":1.0})json"),
                    ConfigError);
}

TEST_CASE("check_centering: exact atom enumeration") {
    const auto arctan = build_model(R"json({"model":"arctan_rademacher"})json");
    const EmpiricalMeasure1D dirac({0.0});
    const auto report = arctan->check_centering({{0.0, 0.0}}, dirac);
    REQUIRE(report.exact);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.passed);
    // oracle: mean of u*v*A over the 4 sign pairs is exactly 0
    const double a0 = 0.5 + M_PI / 2.0 + std::atan(0.0);
    CHECK(rademacher_pair_mean([&](double u, double v) { return u * v * a0; }) == 0.0);
    CHECK(report.entries[0].value == 0.0);

    // psi(u,v) = u + u*v is centred: enumerate the 4 sign pairs
    CHECK(rademacher_pair_mean([](double u, double v) { return u + u * v; }) == 0.0);
    const auto upv = build_model(R"json({"model":"custom","psi":"u+u*v","f_max":1.0})json");
    CHECK(upv->check_centering({{0.0, 0.0}, {1.0, -2.0}}, dirac).passed);
}

TEST_CASE("check_centering: failure lists offending probes without throwing") {
    // bypass build-time validation by constructing the model directly
    const Model shifted(
        "shifted", [](double, const EmpiricalMeasure1D&) { return 0.0; },
        [](double, const EmpiricalMeasure1D&) { return 0.0; },
        [](double, const EmpiricalMeasure1D&) { return 1.0; },
        [](double, double, const EmpiricalMeasure1D&, double, double) { return 1.0; },
        NuSpec::rademacher(), Nu0::normal(0.0, 1.0), 1.0);
    const EmpiricalMeasure1D dirac({0.0});
    const auto report = shifted.check_centering({{0.0, 0.0}, {1.0, 1.0}}, dirac);
    CHECK_FALSE(report.passed);
    REQUIRE(report.entries.size() == 2);
    for (const auto& e : report.entries) {
        CHECK_FALSE(e.pass);
        CHECK(e.value == 1.0);
    }
}

TEST_CASE("kappa^2: closed form of the arctan model") {
    const auto m = build_model(R"json({"model":"arctan_rademacher","params":{"epsilon":0.5}})json");
    const EmpiricalMeasure1D dirac({0.0});
    const double expected = std::pow(0.5 + M_PI / 2.0 + std::atan(0.0), 2.0);
    CHECK(m->kappa_sq(0.0, 0.0, dirac) == doctest::Approx(expected).epsilon(1e-13));

    oracle::TestRng rng(31);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
        std::vector<double> pts(5);
        for (double& p : pts) p = rng.normal();
        const EmpiricalMeasure1D mm(pts);
        const double closed =
            std::pow(0.5 + M_PI / 2.0 + std::atan(x - y + mm.mean()), 2.0);
        CHECK(m->kappa_sq(x, y, mm) == doctest::Approx(closed).epsilon(1e-12));
    }
}

TEST_CASE("kappa^2 vanishes when the kernel uses the sender mark only") {
    const auto m = build_model(R"json({"model":"example1"})json");
    const EmpiricalMeasure1D dirac({0.7});
    CHECK(m->kappa_sq(0.3, -0.2, dirac) == 0.0);
}

TEST_CASE("sigma-xi pairs for the three example kernels") {
    const EmpiricalMeasure1D dirac({0.0});
    SUBCASE("sender-mark kernel: (1, 1)") {
        const auto m = build_model(R"json({"model":"example1"})json");
        const auto [vs, xs] = m->sigma_xi_pair();
        CHECK(vs == doctest::Approx(rademacher_pair_mean(
                        [](double u, double) { return u * u; })));
        CHECK(vs == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(xs == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("receiver-mark kernel: (1, 0)") {
        const auto m = build_model(R"json({"model":"example2"})json");
        const auto [vs, xs] = m->sigma_xi_pair();
        CHECK(vs == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(xs == doctest::Approx(rademacher_triple_mean([](double, double u2, double u3) {
                        return u2 * u3;
                    })).epsilon(1e-13));
        CHECK(xs == doctest::Approx(0.0).epsilon(1e-13));
    }
    SUBCASE("u(1+v) kernel: (2, 1) and kappa^2 = 1, matching the triple oracle") {
        const auto m = build_model(R"json({"model":"example3"})json");
        const auto [vs, xs] = m->sigma_xi_pair();
        const double vs_oracle = rademacher_pair_mean(
            [](double u, double v) { return u * (1 + v) * u * (1 + v); });
        const double xs_oracle = rademacher_triple_mean([](double u1, double u2, double u3) {
            return u1 * (1 + u2) * u1 * (1 + u3);
        });
        CHECK(vs_oracle == 2.0);
        CHECK(xs_oracle == 1.0);
        CHECK(vs == doctest::Approx(vs_oracle).epsilon(1e-13));
        CHECK(xs == doctest::Approx(xs_oracle).epsilon(1e-13));
        CHECK(m->kappa_sq(0.0, 0.0, dirac) == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("state-dependent kernels are rejected") {
        const auto m = build_model(R"json({"model":"arctan_rademacher"})json");
        CHECK_THROWS_WITH_AS(static_cast<void>(m->sigma_xi_pair()),
                             "not a constant-kernel model", ModelError);
    }
}

TEST_CASE("psi_tilde for the receiver-mark kernel is identically zero") {
    const auto m = build_model(R"json({"model":"example2"})json");
    oracle::TestRng rng(17);
    for (int i = 0; i < 20; ++i) {
        const EmpiricalMeasure1D mm({rng.normal(), rng.normal()});
        CHECK(m->psi_tilde(rng.normal(), rng.normal(), mm, rng.uniform(-1, 1)) == 0.0);
    }
}

TEST_CASE("kappa^2 is nonnegative at random probes across all builtins") {
    oracle::TestRng rng(53);
    for (const char* name :
         {"example1", "example2", "example3", "arctan_rademacher", "zero_dynamics"}) {
        const auto m = build_model(std::string(R"json({"model":")json") + name + R"json("})json");
        for (int i = 0; i < 100; ++i) {
            std::vector<double> pts(static_cast<std::size_t>(rng.uniform_int(1, 6)));
            for (double& p : pts) p = rng.normal(0.0, 2.0);
            const EmpiricalMeasure1D mm(pts);
            CHECK(m->kappa_sq(rng.normal(0, 2), rng.normal(0, 2), mm) >= 0.0);
        }
    }
}

TEST_CASE("atom quadrature cross-validates against Monte-Carlo") {
    const auto m = build_model(R"json({"model":"example3"})json");
    const EmpiricalMeasure1D dirac({0.0});
    const double exact = m->kappa_sq(0.4, -0.1, dirac);
    const NoiseStream mc(0xABCDEF, 0);
    const std::size_t n = 200000;
    double sum = 0.0, sumsq = 0.0;
    std::uint32_t draw = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u1 = m->nu1().sample(mc.uniform(Channel::aux, 0, 0, draw++));
        const double u2 = m->nu1().sample(mc.uniform(Channel::aux, 0, 0, draw++));
        const double u3 = m->nu1().sample(mc.uniform(Channel::aux, 0, 0, draw++));
        const double z = m->jump(0.4, -0.1, dirac, u1, u2) *
                         (m->jump(0.4, -0.1, dirac, u1, u2) - m->jump(0.4, -0.1, dirac, u1, u3));
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::abs(mean - exact) < 4.0 * se);
}

TEST_CASE("sigma_xi_pair: varsigma^2 >= xi^2 on random centred discrete kernels") {
    oracle::TestRng rng(71);
    for (int trial = 0; trial < 100; ++trial) {
        // random centred kernel on Rademacher pairs: psi(u,v) = a*u + b*v + c*u*v
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
        const Model m(
            "random", [](double, const EmpiricalMeasure1D&) { return 0.0; },
            [](double, const EmpiricalMeasure1D&) { return 0.0; },
            [](double, const EmpiricalMeasure1D&) { return 1.0; },
            [a, b, c](double, double, const EmpiricalMeasure1D&, double u, double v) {
                return a * u + b * v + c * u * v;
            },
            NuSpec::rademacher(), Nu0::normal(0.0, 1.0), 1.0);
        // state-independence is structural here; poke the pair through a clone
        // of the builtin route by computing the integrals directly
        const double vs = rademacher_pair_mean([&](double u, double v) {
            const double p = a * u + b * v + c * u * v;
            return p * p;
        });
        const double xs = rademacher_triple_mean([&](double u1, double u2, double u3) {
            return (a * u1 + b * u2 + c * u1 * u2) * (a * u1 + b * u3 + c * u1 * u3);
        });
        CHECK(vs >= xs - 1e-12);
        CHECK(xs >= -1e-12);
        const EmpiricalMeasure1D dirac({0.0});
        CHECK(m.kappa_sq(0.0, 0.0, dirac) == doctest::Approx(vs - xs).epsilon(1e-12));
    }
}

TEST_CASE("custom expression models: grammar and measure functionals") {
    const auto m = build_model(R"json({
        "model": "custom",
        "b": "-tanh(x) + 0.1*mean(m)",
        "sigma": "0.5",
        "f": "0.6 + 0.4*tanh(x + mean(m))",
        "psi": "u*v*(0.5 + pi/2 + arctan(x - y + mean(m)))",
        "nu1": {"atoms": [[-1, 0.5], [1, 0.5]]},
        "f_max": 1.0})json");
    const EmpiricalMeasure1D mm({1.0, 3.0});
    CHECK(m->drift(0.0, mm) == doctest::Approx(0.1 * 2.0));
    CHECK(m->diffusion(9.9, mm) == 0.5);
    CHECK(m->rate(0.0, mm) == doctest::Approx(0.6 + 0.4 * std::tanh(2.0)));
    // expression kernel reproduces the builtin arctan model
    const auto builtin = build_model(R"json({"model":"arctan_rademacher"})json");
    CHECK(m->jump(0.3, -0.4, mm, 1.0, -1.0) ==
          doctest::Approx(builtin->jump(0.3, -0.4, mm, 1.0, -1.0)).epsilon(1e-15));
    CHECK(m->kappa_sq(0.3, -0.4, mm) ==
          doctest::Approx(builtin->kappa_sq(0.3, -0.4, mm)).epsilon(1e-12));
}

TEST_CASE("quantizer preserves the sample mean") {
    const NuSpec gauss = NuSpec::continuous(
        [](double u) { return 0.3 + 0.7 * inverse_normal_cdf(u); }, "gaussian");
    const auto q = gauss.quantize(64);
    REQUIRE(q.atoms.size() == 64);
    double w = 0.0;
    for (const auto& a : q.atoms) w += a.weight;
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.mean_of_atoms() == doctest::Approx(q.sample_mean).epsilon(1e-9));
    CHECK(q.sample_mean == doctest::Approx(0.3).epsilon(0.01));
}

TEST_CASE("nu1 validation") {
    CHECK_THROWS_AS(NuSpec::discrete({{1.0, 0.5}, {2.0, 0.6}}), std::invalid_argument);
    CHECK_THROWS_AS(NuSpec::discrete({{1.0, -0.5}, {2.0, 1.5}}), std::invalid_argument);
    CHECK_THROWS_AS(NuSpec::discrete({}), std::invalid_argument);
}

TEST_CASE("derive_coefficients bundles the model surface") {
    const auto m = build_model(R"json({"model":"example3"})json");
    const auto d = derive_coefficients(m);
    CHECK(d.varsigma_sq == doctest::Approx(2.0));
    CHECK(d.xi_sq == doctest::Approx(1.0));
    const EmpiricalMeasure1D dirac({0.0});
    CHECK(d.kappa_sq(0.0, 0.0, dirac) == doctest::Approx(1.0));
    CHECK(d.psi_tilde(0.0, 0.0, dirac, 0.5) == doctest::Approx(0.5));
}
