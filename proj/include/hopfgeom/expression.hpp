#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hopf {

// Scalar expression in at most two named variables, e.g. "1.5*r - 0.5*tanh(r)".
//
// Supported: + - * / ^, unary minus, numeric literals, `pi`, and the functions
// exp log sinh cosh tanh sech sqrt sin cos. Expressions are immutable; the
// derivative of an expression is another expression, simplified on
// construction. Evaluation runs a flattened postfix program, so it is cheap
// enough for ODE right-hand sides.
class Expr {
public:
    struct Node;

    Expr();  // the constant 0
    static Expr constant(double value);
    static Expr variable(int index);

    // Throws ParseError; `line` is only used for error reporting and
    // `column_offset` is added to reported columns.
    static Expr parse(std::string_view source, std::span<const std::string> variables,
                      int line = 1, int column_offset = 0);

    double eval(double v0, double v1 = 0.0) const;
    double operator()(double v0, double v1 = 0.0) const { return eval(v0, v1); }

    Expr derivative(int variable) const;
    bool depends_on(int variable) const;
    bool is_constant() const;
    std::string str() const;

private:
    explicit Expr(std::shared_ptr<const Node> root);
    void compile();

    enum class Op : unsigned char;
    struct Instr {
        Op op;
        double value;
    };

    std::shared_ptr<const Node> root_;
    std::vector<Instr> program_;
    int stack_depth_ = 1;
};

}  // namespace hopf
