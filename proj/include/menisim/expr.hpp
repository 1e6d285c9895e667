#pragma once

#include <memory>
#include <string>

#include "menisim/geometry.hpp"

namespace menisim {

/// Closed-form scalar expression in the variables x, y, t. Supports
/// + - * / ^ with parentheses, the constants pi and e, and the functions
/// sin cos tan exp log sqrt tanh abs floor pow min max. Used for
/// initial conditions and synthetic stimulus fields in config files.
class Expression {
public:
    Expression();  // constant zero
    ~Expression();
    Expression(Expression&&) noexcept;
    Expression& operator=(Expression&&) noexcept;
    Expression(const Expression&);
    Expression& operator=(const Expression&);

    static Expression parse(const std::string& text);

    double operator()(Vec2 p, double t = 0.0) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace menisim
