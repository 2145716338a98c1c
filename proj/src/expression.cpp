#include "hopfgeom/expression.hpp"

#include "hopfgeom/error.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

namespace hopf {

enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sinh, Cosh, Tanh, Sech, Sqrt, Sin, Cos };

struct Expr::Node {
    Kind kind;
    double value = 0.0;
    int index = 0;
    std::shared_ptr<const Node> a, b;
};

enum class Expr::Op : unsigned char {
    Push, Load0, Load1, Neg, Add, Sub, Mul, Div, Pow, Exp, Log, Sinh, Cosh, Tanh, Sech, Sqrt, Sin, Cos
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

NodeP make_const(double v) { return std::make_shared<Expr::Node>(Expr::Node{Kind::Const, v, 0, {}, {}}); }
NodeP make_var(int i) { return std::make_shared<Expr::Node>(Expr::Node{Kind::Var, 0.0, i, {}, {}}); }

bool is_const(const NodeP& n, double v) { return n->kind == Kind::Const && n->value == v; }
bool is_const(const NodeP& n) { return n->kind == Kind::Const; }

double apply_unary(Kind k, double x) {
    switch (k) {
        case Kind::Neg: return -x;
        case Kind::Exp: return std::exp(x);
        case Kind::Log: return std::log(x);
        case Kind::Sinh: return std::sinh(x);
        case Kind::Cosh: return std::cosh(x);
        case Kind::Tanh: return std::tanh(x);
        case Kind::Sech: return 1.0 / std::cosh(x);
        case Kind::Sqrt: return std::sqrt(x);
        case Kind::Sin: return std::sin(x);
        case Kind::Cos: return std::cos(x);
        default: return x;
    }
}

double apply_binary(Kind k, double x, double y) {
    switch (k) {
        case Kind::Add: return x + y;
        case Kind::Sub: return x - y;
        case Kind::Mul: return x * y;
        case Kind::Div: return x / y;
        case Kind::Pow: return std::pow(x, y);
        default: return 0.0;
    }
}

NodeP unary(Kind k, NodeP a) {
    if (is_const(a)) return make_const(apply_unary(k, a->value));
    if (k == Kind::Neg && a->kind == Kind::Neg) return a->a;
    return std::make_shared<Expr::Node>(Expr::Node{k, 0.0, 0, std::move(a), {}});
}

NodeP binary(Kind k, NodeP a, NodeP b) {
    if (is_const(a) && is_const(b)) return make_const(apply_binary(k, a->value, b->value));
    switch (k) {
        case Kind::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Kind::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return unary(Kind::Neg, b);
            break;
        case Kind::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            if (is_const(a, -1.0)) return unary(Kind::Neg, b);
            if (is_const(b, -1.0)) return unary(Kind::Neg, a);
            break;
        case Kind::Div:
            if (is_const(a, 0.0)) return make_const(0.0);
            if (is_const(b, 1.0)) return a;
            break;
        case Kind::Pow:
            if (is_const(b, 0.0)) return make_const(1.0);
            if (is_const(b, 1.0)) return a;
            break;
        default: break;
    }
    return std::make_shared<Expr::Node>(Expr::Node{k, 0.0, 0, std::move(a), std::move(b)});
}

NodeP add(NodeP a, NodeP b) { return binary(Kind::Add, std::move(a), std::move(b)); }
NodeP sub(NodeP a, NodeP b) { return binary(Kind::Sub, std::move(a), std::move(b)); }
NodeP mul(NodeP a, NodeP b) { return binary(Kind::Mul, std::move(a), std::move(b)); }
NodeP div(NodeP a, NodeP b) { return binary(Kind::Div, std::move(a), std::move(b)); }

NodeP diff(const NodeP& n, int var) {
    const NodeP& a = n->a;
    const NodeP& b = n->b;
    switch (n->kind) {
        case Kind::Const: return make_const(0.0);
        case Kind::Var: return make_const(n->index == var ? 1.0 : 0.0);
        case Kind::Neg: return unary(Kind::Neg, diff(a, var));
        case Kind::Add: return add(diff(a, var), diff(b, var));
        case Kind::Sub: return sub(diff(a, var), diff(b, var));
        case Kind::Mul: return add(mul(diff(a, var), b), mul(a, diff(b, var)));
        case Kind::Div:
            return div(sub(mul(diff(a, var), b), mul(a, diff(b, var))), mul(b, b));
        case Kind::Pow: {
            NodeP da = diff(a, var);
            if (is_const(b)) {
                return mul(mul(b, binary(Kind::Pow, a, make_const(b->value - 1.0))), da);
            }
            NodeP db = diff(b, var);
            // d(a^b) = a^b * (b' log a + b a'/a)
            return mul(n, add(mul(db, unary(Kind::Log, a)), div(mul(b, da), a)));
        }
        case Kind::Exp: return mul(n, diff(a, var));
        case Kind::Log: return div(diff(a, var), a);
        case Kind::Sinh: return mul(unary(Kind::Cosh, a), diff(a, var));
        case Kind::Cosh: return mul(unary(Kind::Sinh, a), diff(a, var));
        case Kind::Tanh: {
            NodeP s = unary(Kind::Sech, a);
            return mul(mul(s, s), diff(a, var));
        }
        case Kind::Sech:
            return unary(Kind::Neg, mul(mul(n, unary(Kind::Tanh, a)), diff(a, var)));
        case Kind::Sqrt: return div(diff(a, var), mul(make_const(2.0), n));
        case Kind::Sin: return mul(unary(Kind::Cos, a), diff(a, var));
        case Kind::Cos: return unary(Kind::Neg, mul(unary(Kind::Sin, a), diff(a, var)));
    }
    return make_const(0.0);
}

bool depends(const NodeP& n, int var) {
    if (!n) return false;
    if (n->kind == Kind::Var) return n->index == var;
    return depends(n->a, var) || depends(n->b, var);
}

const char* func_name(Kind k) {
    switch (k) {
        case Kind::Exp: return "exp";
        case Kind::Log: return "log";
        case Kind::Sinh: return "sinh";
        case Kind::Cosh: return "cosh";
        case Kind::Tanh: return "tanh";
        case Kind::Sech: return "sech";
        case Kind::Sqrt: return "sqrt";
        case Kind::Sin: return "sin";
        case Kind::Cos: return "cos";
        default: return "?";
    }
}

void print(std::ostream& os, const NodeP& n) {
    switch (n->kind) {
        case Kind::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n->value;
            os << tmp.str();
            return;
        }
        case Kind::Var: os << "v" << n->index; return;
        case Kind::Neg: os << "(-"; print(os, n->a); os << ")"; return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div:
        case Kind::Pow: {
            const char op = n->kind == Kind::Add   ? '+'
                            : n->kind == Kind::Sub ? '-'
                            : n->kind == Kind::Mul ? '*'
                            : n->kind == Kind::Div ? '/'
                                                   : '^';
            os << "(";
            print(os, n->a);
            os << op;
            print(os, n->b);
            os << ")";
            return;
        }
        default:
            os << func_name(n->kind) << "(";
            print(os, n->a);
            os << ")";
    }
}

class Parser {
public:
    Parser(std::string_view src, std::span<const std::string> vars, int line, int offset)
        : src_(src), vars_(vars), line_(line), offset_(offset) {}

    NodeP run() {
        NodeP e = expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, offset_ + static_cast<int>(pos_) + 1);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodeP expr() {
        NodeP lhs = term();
        for (;;) {
            if (accept('+')) lhs = add(lhs, term());
            else if (accept('-')) lhs = sub(lhs, term());
            else return lhs;
        }
    }

    NodeP term() {
        NodeP lhs = signed_factor();
        for (;;) {
            if (accept('*')) lhs = mul(lhs, signed_factor());
            else if (accept('/')) lhs = div(lhs, signed_factor());
            else return lhs;
        }
    }

    NodeP signed_factor() {
        if (accept('-')) return unary(Kind::Neg, signed_factor());
        if (accept('+')) return signed_factor();
        return power();
    }

    NodeP power() {
        NodeP base = primary();
        if (accept('^')) return binary(Kind::Pow, base, signed_factor());
        return base;
    }

    NodeP primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of expression");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodeP e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    NodeP number() {
        const std::string tail(src_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(tail.c_str(), &end);
        if (end == tail.c_str()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - tail.c_str());
        return make_const(v);
    }

    NodeP identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));
        for (std::size_t i = 0; i < vars_.size(); ++i)
            if (vars_[i] == name) return make_var(static_cast<int>(i));
        if (name == "pi") return make_const(std::numbers::pi);

        static const std::pair<const char*, Kind> funcs[] = {
            {"exp", Kind::Exp},   {"log", Kind::Log},   {"sinh", Kind::Sinh},
            {"cosh", Kind::Cosh}, {"tanh", Kind::Tanh}, {"sech", Kind::Sech},
            {"sqrt", Kind::Sqrt}, {"sin", Kind::Sin},   {"cos", Kind::Cos}};
        for (const auto& [fname, kind] : funcs) {
            if (name == fname) {
                if (!accept('(')) fail("expected '(' after " + name);
                NodeP arg = expr();
                if (!accept(')')) fail("expected ')'");
                return unary(kind, arg);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    std::string_view src_;
    std::span<const std::string> vars_;
    int line_;
    int offset_;
    std::size_t pos_ = 0;
};

}  // namespace

Expr::Expr() : Expr(make_const(0.0)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) { compile(); }

Expr Expr::constant(double value) { return Expr(make_const(value)); }
Expr Expr::variable(int index) { return Expr(make_var(index)); }

Expr Expr::parse(std::string_view source, std::span<const std::string> variables, int line,
                 int column_offset) {
    return Expr(Parser(source, variables, line, column_offset).run());
}

Expr Expr::derivative(int variable) const { return Expr(diff(root_, variable)); }
bool Expr::depends_on(int variable) const { return depends(root_, variable); }
bool Expr::is_constant() const { return root_->kind == Kind::Const; }

std::string Expr::str() const {
    std::ostringstream os;
    print(os, root_);
    return os.str();
}

void Expr::compile() {
    program_.clear();
    int depth = 0;
    int max_depth = 0;
    auto emit = [&](auto&& self, const NodeP& n) -> void {
        switch (n->kind) {
            case Kind::Const:
                program_.push_back({Op::Push, n->value});
                max_depth = std::max(max_depth, ++depth);
                return;
            case Kind::Var:
                program_.push_back({n->index == 0 ? Op::Load0 : Op::Load1, 0.0});
                max_depth = std::max(max_depth, ++depth);
                return;
            default: break;
        }
        self(self, n->a);
        if (n->b) {
            self(self, n->b);
            --depth;
        }
        Op op{};
        switch (n->kind) {
            case Kind::Neg: op = Op::Neg; break;
            case Kind::Add: op = Op::Add; break;
            case Kind::Sub: op = Op::Sub; break;
            case Kind::Mul: op = Op::Mul; break;
            case Kind::Div: op = Op::Div; break;
            case Kind::Pow: op = Op::Pow; break;
            case Kind::Exp: op = Op::Exp; break;
            case Kind::Log: op = Op::Log; break;
            case Kind::Sinh: op = Op::Sinh; break;
            case Kind::Cosh: op = Op::Cosh; break;
            case Kind::Tanh: op = Op::Tanh; break;
            case Kind::Sech: op = Op::Sech; break;
            case Kind::Sqrt: op = Op::Sqrt; break;
            case Kind::Sin: op = Op::Sin; break;
            case Kind::Cos: op = Op::Cos; break;
            default: break;
        }
        program_.push_back({op, 0.0});
    };
    emit(emit, root_);
    stack_depth_ = std::max(1, max_depth);
}

double Expr::eval(double v0, double v1) const {
    constexpr int kInline = 32;
    double inline_stack[kInline] = {};
    std::vector<double> heap_stack;
    double* st = inline_stack;
    if (stack_depth_ > kInline) {
        heap_stack.resize(static_cast<std::size_t>(stack_depth_));
        st = heap_stack.data();
    }
    int sp = -1;
    for (const Instr& in : program_) {
        switch (in.op) {
            case Op::Push: st[++sp] = in.value; break;
            case Op::Load0: st[++sp] = v0; break;
            case Op::Load1: st[++sp] = v1; break;
            case Op::Neg: st[sp] = -st[sp]; break;
            case Op::Add: st[sp - 1] += st[sp]; --sp; break;
            case Op::Sub: st[sp - 1] -= st[sp]; --sp; break;
            case Op::Mul: st[sp - 1] *= st[sp]; --sp; break;
            case Op::Div: st[sp - 1] /= st[sp]; --sp; break;
            case Op::Pow: st[sp - 1] = std::pow(st[sp - 1], st[sp]); --sp; break;
            case Op::Exp: st[sp] = std::exp(st[sp]); break;
            case Op::Log: st[sp] = std::log(st[sp]); break;
            case Op::Sinh: st[sp] = std::sinh(st[sp]); break;
            case Op::Cosh: st[sp] = std::cosh(st[sp]); break;
            case Op::Tanh: st[sp] = std::tanh(st[sp]); break;
            case Op::Sech: st[sp] = 1.0 / std::cosh(st[sp]); break;
            case Op::Sqrt: st[sp] = std::sqrt(st[sp]); break;
            case Op::Sin: st[sp] = std::sin(st[sp]); break;
            case Op::Cos: st[sp] = std::cos(st[sp]); break;
        }
    }
    return st[0];
}

}  // namespace hopf
