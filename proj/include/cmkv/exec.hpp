#pragma once

namespace cmkv {

// Kernel execution policy. The OpenMP variants are bit-identical to the
// serial reference: every reduction runs in a fixed order per element and all
// random draws are addressed by counters, never by draw order.
enum class Exec {
    serial,
    openmp,
};

}  // namespace cmkv
