#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cmkv {

struct ExprError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed-form coefficient expressions from model config files. Grammar:
// arithmetic (+ - * / ^, parentheses), arctan/atan, exp, tanh, sqrt, abs,
// sin, cos, the constant pi, the variables x, y, u, v, and the measure
// functionals mean(m) and int_abs(m). Parsed once into a postfix program.
class Expr {
  public:
    static Expr parse(std::string_view src);

    double eval(double x, double y, double u, double v, double mean_m,
                double int_abs_m) const;

    bool uses_x() const { return uses_x_; }
    bool uses_y() const { return uses_y_; }
    bool uses_u() const { return uses_u_; }
    bool uses_v() const { return uses_v_; }
    bool uses_measure() const { return uses_measure_; }

    const std::string& source() const { return source_; }

  private:
    enum class Op : std::uint8_t {
        push_const,
        push_x,
        push_y,
        push_u,
        push_v,
        push_mean,
        push_int_abs,
        add,
        sub,
        mul,
        div,
        pow,
        neg,
        arctan,
        exp,
        tanh,
        sqrt,
        abs,
        sin,
        cos,
    };
    struct Instr {
        Op op;
        double value = 0.0;
    };

    std::vector<Instr> prog_;
    std::string source_;
    bool uses_x_ = false, uses_y_ = false, uses_u_ = false, uses_v_ = false,
         uses_measure_ = false;

    friend class ExprParser;
};

}  // namespace cmkv
