#pragma once

#include <functional>
#include <string>

#include "cmkv/limit_system.hpp"
#include "cmkv/stats.hpp"

namespace cmkv {

// Twice-differentiable test function on R^2; derivatives are closed-form for
// the builtins and central finite differences with step h = h_scale*(1+|y|)
// otherwise.
class TestFunction2D {
  public:
    using Fn = std::function<double(double, double)>;

    explicit TestFunction2D(std::string name, Fn g) : name_(std::move(name)), g_(std::move(g)) {}

    TestFunction2D(std::string name, Fn g, Fn d1, Fn d2, Fn d11, Fn d22, Fn d12)
        : name_(std::move(name)),
          g_(std::move(g)),
          d1_(std::move(d1)),
          d2_(std::move(d2)),
          d11_(std::move(d11)),
          d22_(std::move(d22)),
          d12_(std::move(d12)) {}

    static TestFunction2D builtin(const std::string& name);

    const std::string& name() const { return name_; }
    double operator()(double y1, double y2) const { return g_(y1, y2); }

    double d1(double y1, double y2) const;
    double d2(double y1, double y2) const;
    double d11(double y1, double y2) const;
    double d22(double y1, double y2) const;
    double d12(double y1, double y2) const;

    static constexpr double kFdScale = 1e-5;

  private:
    std::string name_;
    Fn g_;
    Fn d1_, d2_, d11_, d22_, d12_;
};

// The two-particle generator: drift terms, diffusion terms, the f*kappa^2/2
// terms and the psi_tilde cross term.
double generator_apply(const TestFunction2D& g, double y1, double y2,
                       const EmpiricalMeasure1D& m, double x, double v, const Model& model);

// Discretized martingale-problem residual M^g_t - M^g_s for the copy pair
// (0,1) of a limit run, averaged over replications. The time-space-mark
// integral uses the same grid, the same M-copy empirical measure as the
// simulator, and atom enumeration for nu_1.
MeanStderr martingale_residual(const Model& model, const TestFunction2D& g, double s_time,
                               double t_time, const LimitSimConfig& config,
                               std::uint32_t reps, std::uint32_t base_replication = 0);

// Residual of a single already-simulated replication (full-grid bundle).
double martingale_residual_path(const Model& model, const TestFunction2D& g, double s_time,
                                double t_time, const TrajectoryBundle& bundle, double dt);

}  // namespace cmkv
