#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <vector>

#include "cmkv/exec.hpp"
#include "cmkv/model.hpp"
#include "cmkv/trajectory.hpp"

namespace cmkv {

// Cross-population jump kernel Psi^{lk}(x, y, m_l, m_k, u, v): x and u belong
// to the sending particle of population l, y and v to the receiving particle
// of population k.
using PsiFn2 = std::function<double(double x, double y, const EmpiricalMeasure1D& m_sender,
                                    const EmpiricalMeasure1D& m_receiver, double u, double v)>;

struct CrossKernel {
    PsiFn2 fn;
    bool state_independent = false;  // ignores x, y and both measures
    bool tilde_known_zero = false;
};

// n populations: per-population coefficients, mark and initial laws from a
// base Model (whose own jump kernel is unused here), an interaction graph
// I(k) and one cross kernel per edge l -> k.
struct MultiPopSpec {
    struct Population {
        std::shared_ptr<const Model> base;
        std::uint32_t size = 2;  // N_k for the finite system, M_k for the limit
    };
    std::vector<Population> populations;
    std::vector<std::vector<std::uint32_t>> inputs;         // I(k), 0-based, ascending
    std::map<std::pair<std::uint32_t, std::uint32_t>, CrossKernel> kernels;  // (l, k)

    std::uint32_t n_pop() const { return static_cast<std::uint32_t>(populations.size()); }
    const CrossKernel& kernel(std::uint32_t l, std::uint32_t k) const;
    void validate() const;

    // psi_tilde^{lk}: receiver mark integrated out against population k's law.
    double psi_tilde(std::uint32_t l, std::uint32_t k, double x, double y,
                     const EmpiricalMeasure1D& ml, const EmpiricalMeasure1D& mk,
                     double v) const;
    double kappa_sq(std::uint32_t l, std::uint32_t k, double x, double y,
                    const EmpiricalMeasure1D& ml, const EmpiricalMeasure1D& mk) const;
};

// A one-population spec that reduces bit-for-bit to the single-population
// engines under the same seed (population tag 0 everywhere).
MultiPopSpec single_population_spec(std::shared_ptr<const Model> model, std::uint32_t size);

// Config tree: {"populations": [<model config>, ...], "sizes": [..],
//               "inputs": {"1": [2,3], ...}, "cross_kernels": {"2->1": expr}}
// (population names are 1-based in the file, 0-based in memory). Cross-kernel
// expressions use x, y, u, v and mean(m)/int_abs(m) of the sender measure.
MultiPopSpec build_multipop(const std::string& json_text);
MultiPopSpec build_multipop_file(const std::string& path);

struct MultiPopSimConfig {
    double horizon = 1.0;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::uint32_t grid_stride = 1;
    bool record_jump_log = false;
    std::uint32_t record_increment_copies = 0;
    Exec exec = Exec::serial;
};

std::vector<TrajectoryBundle> simulate_multipop_finite(const MultiPopSpec& spec,
                                                       const MultiPopSimConfig& config,
                                                       std::uint32_t replication = 0);

std::vector<TrajectoryBundle> simulate_multipop_limit(const MultiPopSpec& spec,
                                                      const MultiPopSimConfig& config,
                                                      std::uint32_t replication = 0);

}  // namespace cmkv
