#pragma once

#include <string>
#include <vector>

namespace cmkv {

inline constexpr const char* kVersion = "0.1.0";

// Experiment runner behind the cmkv binary. Exit codes: 0 success, 2 config
// or usage error, 3 numerical abort (non-finite state or rate-bound breach).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args without the program name

}  // namespace cmkv
