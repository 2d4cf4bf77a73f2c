#include "cmkv/expr.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace cmkv {

class ExprParser {
  public:
    explicit ExprParser(std::string_view src, Expr& out) : src_(src), out_(out) {}

    void run() {
        parse_expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ExprError("unexpected trailing input at position " + std::to_string(pos_));
        if (out_.prog_.empty()) throw ExprError("empty expression");
    }

  private:
    std::string_view src_;
    Expr& out_;
    std::size_t pos_ = 0;

    using Op = Expr::Op;

    void emit(Op op, double v = 0.0) { out_.prog_.push_back({op, v}); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    void expect(char c) {
        if (!consume(c))
            throw ExprError(std::string("expected '") + c + "' at position " + std::to_string(pos_));
    }

    void parse_expr() {
        parse_term();
        for (;;) {
            if (consume('+')) {
                parse_term();
                emit(Op::add);
            } else if (consume('-')) {
                parse_term();
                emit(Op::sub);
            } else {
                return;
            }
        }
    }

    void parse_term() {
        parse_unary();
        for (;;) {
            if (consume('*')) {
                parse_unary();
                emit(Op::mul);
            } else if (consume('/')) {
                parse_unary();
                emit(Op::div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (consume('-')) {
            parse_unary();
            emit(Op::neg);
            return;
        }
        (void)consume('+');
        parse_power();
    }

    void parse_power() {
        parse_primary();
        if (consume('^')) {
            parse_unary();  // right-associative
            emit(Op::pow);
        }
    }

    void parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ExprError("unexpected end of expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            parse_expr();
            expect(')');
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            parse_identifier();
            return;
        }
        throw ExprError(std::string("unexpected character '") + c + "'");
    }

    void parse_number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw ExprError("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        emit(Op::push_const, v);
    }

    void parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);
        if (name == "x") {
            emit(Op::push_x);
            out_.uses_x_ = true;
            return;
        }
        if (name == "y") {
            emit(Op::push_y);
            out_.uses_y_ = true;
            return;
        }
        if (name == "u") {
            emit(Op::push_u);
            out_.uses_u_ = true;
            return;
        }
        if (name == "v") {
            emit(Op::push_v);
            out_.uses_v_ = true;
            return;
        }
        if (name == "pi") {
            emit(Op::push_const, M_PI);
            return;
        }
        if (name == "mean" || name == "int_abs") {
            expect('(');
            skip_ws();
            if (pos_ >= src_.size() || src_[pos_] != 'm')
                throw ExprError(std::string(name) + " takes the measure argument m");
            ++pos_;
            expect(')');
            emit(name == "mean" ? Op::push_mean : Op::push_int_abs);
            out_.uses_measure_ = true;
            return;
        }
        Op op;
        if (name == "arctan" || name == "atan")
            op = Op::arctan;
        else if (name == "exp")
            op = Op::exp;
        else if (name == "tanh")
            op = Op::tanh;
        else if (name == "sqrt")
            op = Op::sqrt;
        else if (name == "abs")
            op = Op::abs;
        else if (name == "sin")
            op = Op::sin;
        else if (name == "cos")
            op = Op::cos;
        else
            throw ExprError("unknown identifier '" + std::string(name) + "'");
        expect('(');
        parse_expr();
        expect(')');
        emit(op);
    }
};

Expr Expr::parse(std::string_view src) {
    Expr e;
    e.source_ = std::string(src);
    ExprParser(src, e).run();
    return e;
}

double Expr::eval(double x, double y, double u, double v, double mean_m,
                  double int_abs_m) const {
    double stack[64];
    int sp = 0;
    for (const Instr& in : prog_) {
        switch (in.op) {
            case Op::push_const: stack[sp++] = in.value; break;
            case Op::push_x: stack[sp++] = x; break;
            case Op::push_y: stack[sp++] = y; break;
            case Op::push_u: stack[sp++] = u; break;
            case Op::push_v: stack[sp++] = v; break;
            case Op::push_mean: stack[sp++] = mean_m; break;
            case Op::push_int_abs: stack[sp++] = int_abs_m; break;
            case Op::add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::arctan: stack[sp - 1] = std::atan(stack[sp - 1]); break;
            case Op::exp: stack[sp - 1] = std::exp(stack[sp - 1]); break;
            case Op::tanh: stack[sp - 1] = std::tanh(stack[sp - 1]); break;
            case Op::sqrt: stack[sp - 1] = std::sqrt(stack[sp - 1]); break;
            case Op::abs: stack[sp - 1] = std::abs(stack[sp - 1]); break;
            case Op::sin: stack[sp - 1] = std::sin(stack[sp - 1]); break;
            case Op::cos: stack[sp - 1] = std::cos(stack[sp - 1]); break;
        }
    }
    return stack[0];
}

}  // namespace cmkv
