// Wall-clock comparison of the serial reference kernels against the OpenMP
// variants on a mid-size finite and limit run. The two paths are bit-identical
// by construction; this target only reports timings.

#include <chrono>
#include <cstdio>

#include "cmkv/finite_system.hpp"
#include "cmkv/limit_system.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using clock_type = std::chrono::steady_clock;

template <typename F>
double time_best_of(int runs, F&& f) {
    double best = 1e300;
    for (int r = 0; r < runs; ++r) {
        const auto t0 = clock_type::now();
        f();
        const double s = std::chrono::duration<double>(clock_type::now() - t0).count();
        if (s < best) best = s;
    }
    return best;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP: %d threads\n", omp_get_max_threads());
#else
    std::printf("OpenMP: not enabled\n");
#endif

    const auto arctan = cmkv::build_model(R"json({"model":"arctan_rademacher"})json");
    const auto ex3 = cmkv::build_model(
        R"json({"model":"example3","params":{"b":"-tanh(x)","sigma":0.4}})json");

    {
        cmkv::FiniteSimConfig cfg;
        cfg.n_particles = 400;
        cfg.horizon = 1.0;
        cfg.dt = 1e-3;
        cfg.seed = 7;
        cfg.grid_stride = 1000;
        cfg.exec = cmkv::Exec::serial;
        const double serial = time_best_of(3, [&] { simulate_finite(*ex3, cfg, 0); });
        cfg.exec = cmkv::Exec::openmp;
        const double parallel = time_best_of(3, [&] { simulate_finite(*ex3, cfg, 0); });
        std::printf("finite  N=400  T=1    serial %.3fs  openmp %.3fs  speedup %.2fx\n",
                    serial, parallel, serial / parallel);
    }
    {
        cmkv::LimitSimConfig cfg;
        cfg.n_copies = 128;
        cfg.horizon = 0.25;
        cfg.dt = 1e-3;
        cfg.seed = 7;
        cfg.grid_stride = 250;
        cfg.exec = cmkv::Exec::serial;
        const double serial = time_best_of(3, [&] { simulate_limit(*arctan, cfg, 0); });
        cfg.exec = cmkv::Exec::openmp;
        const double parallel = time_best_of(3, [&] { simulate_limit(*arctan, cfg, 0); });
        std::printf("limit   M=128  T=0.25 serial %.3fs  openmp %.3fs  speedup %.2fx\n",
                    serial, parallel, serial / parallel);
    }
    return 0;
}
