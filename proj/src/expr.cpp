#include "menisim/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <vector>

#include "menisim/common.hpp"

namespace menisim {

struct Expression::Node {
    enum class Op {
        Const, VarX, VarY, VarT,
        Add, Sub, Mul, Div, Pow, Neg,
        Sin, Cos, Tan, Exp, Log, Sqrt, Tanh, Abs, Floor, Min, Max
    };
    Op op = Op::Const;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;

    double eval(double x, double y, double t) const {
        switch (op) {
            case Op::Const: return value;
            case Op::VarX: return x;
            case Op::VarY: return y;
            case Op::VarT: return t;
            case Op::Add: return a->eval(x, y, t) + b->eval(x, y, t);
            case Op::Sub: return a->eval(x, y, t) - b->eval(x, y, t);
            case Op::Mul: return a->eval(x, y, t) * b->eval(x, y, t);
            case Op::Div: return a->eval(x, y, t) / b->eval(x, y, t);
            case Op::Pow: return std::pow(a->eval(x, y, t), b->eval(x, y, t));
            case Op::Neg: return -a->eval(x, y, t);
            case Op::Sin: return std::sin(a->eval(x, y, t));
            case Op::Cos: return std::cos(a->eval(x, y, t));
            case Op::Tan: return std::tan(a->eval(x, y, t));
            case Op::Exp: return std::exp(a->eval(x, y, t));
            case Op::Log: return std::log(a->eval(x, y, t));
            case Op::Sqrt: return std::sqrt(a->eval(x, y, t));
            case Op::Tanh: return std::tanh(a->eval(x, y, t));
            case Op::Abs: return std::abs(a->eval(x, y, t));
            case Op::Floor: return std::floor(a->eval(x, y, t));
            case Op::Min: return std::min(a->eval(x, y, t), b->eval(x, y, t));
            case Op::Max: return std::max(a->eval(x, y, t), b->eval(x, y, t));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->value = v;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("expression parse error at position " + std::to_string(pos_) + ": " +
                         what + " in '" + s_ + "'");
    }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (consume('+')) lhs = make(Op::Add, lhs, term());
            else if (consume('-')) lhs = make(Op::Sub, lhs, term());
            else return lhs;
        }
    }
    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (consume('*')) lhs = make(Op::Mul, lhs, unary());
            else if (consume('/')) lhs = make(Op::Div, lhs, unary());
            else return lhs;
        }
    }
    NodePtr unary() {
        if (consume('-')) return make(Op::Neg, unary());
        if (consume('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (consume('^')) return make(Op::Pow, base, unary());  // right associative
        return base;
    }
    NodePtr primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (consume('(')) {
            NodePtr e = expr();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
    NodePtr number() {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(s_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("malformed number");
        }
        pos_ += used;
        return make(Op::Const, nullptr, nullptr, v);
    }
    NodePtr identifier() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        if (name == "x") return make(Op::VarX);
        if (name == "y") return make(Op::VarY);
        if (name == "t") return make(Op::VarT);
        if (name == "pi") return make(Op::Const, nullptr, nullptr, M_PI);
        if (name == "e") return make(Op::Const, nullptr, nullptr, M_E);

        static const std::vector<std::pair<std::string, std::pair<Op, int>>> funcs = {
            {"sin", {Op::Sin, 1}},   {"cos", {Op::Cos, 1}},     {"tan", {Op::Tan, 1}},
            {"exp", {Op::Exp, 1}},   {"log", {Op::Log, 1}},     {"sqrt", {Op::Sqrt, 1}},
            {"tanh", {Op::Tanh, 1}}, {"abs", {Op::Abs, 1}},     {"floor", {Op::Floor, 1}},
            {"pow", {Op::Pow, 2}},   {"min", {Op::Min, 2}},     {"max", {Op::Max, 2}},
        };
        for (const auto& [fname, desc] : funcs) {
            if (name != fname) continue;
            if (!consume('(')) fail("expected '(' after " + name);
            NodePtr a = expr();
            NodePtr b;
            if (desc.second == 2) {
                if (!consume(',')) fail(name + " takes two arguments");
                b = expr();
            }
            if (!consume(')')) fail("expected ')'");
            return make(desc.first, a, b);
        }
        fail("unknown identifier '" + name + "'");
    }
};

} // namespace

Expression::Expression() : root_(make(Op::Const)), text_("0") {}
Expression::~Expression() = default;
Expression::Expression(Expression&&) noexcept = default;
Expression& Expression::operator=(Expression&&) noexcept = default;
Expression::Expression(const Expression&) = default;
Expression& Expression::operator=(const Expression&) = default;

Expression Expression::parse(const std::string& text) {
    Expression e;
    e.root_ = Parser(text).parse();
    e.text_ = text;
    return e;
}

double Expression::operator()(Vec2 p, double t) const { return root_->eval(p.x, p.y, t); }

} // namespace menisim
