#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rsode {

/// Real-valued expression of one variable, compiled to a postfix program.
///
/// Grammar: numbers, the declared variable, the constants `pi` and `e`,
/// binary `+ - * / ^` (`^` right-associative), unary minus, parentheses and
/// the functions `exp log abs sqrt pow(a,b)`.
class Expression {
public:
    /// Throws SpecError with the column of the offending token.
    Expression(std::string source, std::string variable);

    [[nodiscard]] double operator()(double value) const;

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] const std::string& variable() const noexcept { return variable_; }

    friend bool operator==(const Expression& a, const Expression& b) {
        return a.source_ == b.source_ && a.variable_ == b.variable_;
    }

private:
    enum class OpCode : unsigned char { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Abs, Sqrt };
    struct Op {
        OpCode code;
        double value = 0.0;
    };
    class Parser;

    std::string source_;
    std::string variable_;
    std::vector<Op> program_;
    std::size_t max_depth_ = 0;
};

}  // namespace rsode
