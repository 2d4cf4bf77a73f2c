#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cmkv/measure.hpp"
#include "cmkv/nu.hpp"

namespace cmkv {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Coef1 = std::function<double(double x, const EmpiricalMeasure1D& m)>;
using PsiFn = std::function<double(double x, double y, const EmpiricalMeasure1D& m,
                                   double u, double v)>;

struct CheckReport {
    struct Entry {
        double x, y;
        double value;      // centering integral (exact) or Monte-Carlo mean
        double tolerance;  // 1e-12 for exact quadrature, 4*stderr for MC
        bool pass;
    };
    bool passed = true;
    bool exact = true;  // atom enumeration vs Monte-Carlo
    std::string note;
    std::vector<Entry> entries;
};

// A validated, immutable model: coefficients b, sigma, f, the jump kernel Psi,
// the mark law nu_1, the initial law nu_0 and the rate bound. Shared read-only
// by all simulation workers; every operation here is pure.
class Model {
  public:
    Model(std::string name, Coef1 drift, Coef1 diffusion, Coef1 rate, PsiFn jump,
          NuSpec nu1, Nu0 nu0, double rate_bound);

    const std::string& name() const { return name_; }
    double rate_bound() const { return rate_bound_; }
    const NuSpec& nu1() const { return nu1_; }
    const Nu0& nu0() const { return nu0_; }

    double drift(double x, const EmpiricalMeasure1D& m) const { return drift_(x, m); }
    double diffusion(double x, const EmpiricalMeasure1D& m) const { return diffusion_(x, m); }
    double rate(double x, const EmpiricalMeasure1D& m) const { return rate_(x, m); }
    double jump(double x, double y, const EmpiricalMeasure1D& m, double u, double v) const {
        return jump_(x, y, m, u, v);
    }

    // Evaluates f and enforces 0 < f <= f_max at runtime.
    double checked_rate(double x, const EmpiricalMeasure1D& m) const;

    // Psi does not read x, y or the measure; the covariation closed forms
    // (varsigma^2, xi^2) apply and kappa is a constant.
    bool psi_state_independent() const { return psi_state_independent_; }
    // psi_tilde vanishes identically (exact structural knowledge, e.g. a
    // kernel odd in the receiver mark under a symmetric nu_1).
    bool psi_tilde_known_zero() const { return psi_tilde_known_zero_; }

    // Atoms used for every nu_1 quadrature: the law itself when discrete,
    // its V=64 quantization otherwise.
    const std::vector<Atom>& mark_atoms() const { return mark_atoms_; }
    bool mark_atoms_exact() const { return nu1_.is_discrete(); }

    // psi_tilde(x,y,m,v) = integral of Psi(x,y,m,v,u) over the receiver mark u.
    double psi_tilde(double x, double y, const EmpiricalMeasure1D& m, double v) const;

    // Integral of Psi^2 over a mark pair (u,v).
    double psi_sq_int(double x, double y, const EmpiricalMeasure1D& m) const;

    // kappa^2 = int Psi^2 dnu - int psi_tilde^2 dnu_1, clamped to 0 within
    // 1e-12; more negative values signal a broken kernel or quadrature.
    double kappa_sq(double x, double y, const EmpiricalMeasure1D& m) const;

    // (varsigma^2, xi^2) for state-independent kernels.
    std::pair<double, double> sigma_xi_pair() const;

    // Exact (atoms) or Monte-Carlo check that the jump height is centred.
    CheckReport check_centering(
        const std::vector<std::pair<double, double>>& probe_points_xy,
        const EmpiricalMeasure1D& probe_measure, std::size_t n_mc = 100'000) const;

    static constexpr double kKappaClampTol = 1e-12;
    static constexpr int kQuantizerResolution = 64;

  private:
    friend class ModelBuilder;

    std::string name_;
    Coef1 drift_, diffusion_, rate_;
    PsiFn jump_;
    NuSpec nu1_;
    Nu0 nu0_;
    double rate_bound_;
    bool psi_state_independent_ = false;
    bool psi_tilde_known_zero_ = false;
    std::vector<Atom> mark_atoms_;
};

// Convenience bundle mirroring the derived-coefficient surface.
struct DerivedCoefficients {
    std::function<double(double, double, const EmpiricalMeasure1D&, double)> psi_tilde;
    std::function<double(double, double, const EmpiricalMeasure1D&)> kappa_sq;
    double varsigma_sq = 0.0;  // only meaningful for state-independent kernels
    double xi_sq = 0.0;
};

DerivedCoefficients derive_coefficients(const std::shared_ptr<const Model>& model);

// Builds a model from a JSON config tree:
//   {"model": "example1" | "example2" | "example3" | "arctan_rademacher" |
//    "zero_dynamics", "params": {...}, "nu0": {...}}
// or {"model": "custom", "b": expr, "sigma": expr, "f": expr, "psi": expr,
//     "nu1": {"atoms": [[value, weight], ...]} | {"gaussian": {...}},
//     "f_max": number, "nu0": {...}}.
std::shared_ptr<const Model> build_model(const std::string& json_text);
std::shared_ptr<const Model> build_model_file(const std::string& path);

}  // namespace cmkv
