#include "rsode/expression.hpp"

#include "rsode/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

namespace rsode {

class Expression::Parser {
public:
    Parser(std::string_view text, std::string_view variable, std::vector<Op>& out)
        : text_(text), variable_(variable), out_(out) {}

    void parse() {
        expr();
        skip_space();
        if (pos_ != text_.size()) fail("unexpected trailing input");
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw SpecError("expression '" + std::string(text_) + "': " + what + " at column " +
                        std::to_string(pos_ + 1));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void emit(OpCode code, double value = 0.0) { out_.push_back({code, value}); }

    void expr() {
        term();
        for (;;) {
            if (accept('+')) {
                term();
                emit(OpCode::Add);
            } else if (accept('-')) {
                term();
                emit(OpCode::Sub);
            } else {
                return;
            }
        }
    }

    void term() {
        unary();
        for (;;) {
            if (accept('*')) {
                unary();
                emit(OpCode::Mul);
            } else if (accept('/')) {
                unary();
                emit(OpCode::Div);
            } else {
                return;
            }
        }
    }

    void unary() {
        if (accept('-')) {
            unary();
            emit(OpCode::Neg);
        } else if (accept('+')) {
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (accept('^')) {
            unary();
            emit(OpCode::Pow);
        }
    }

    void primary() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            expr();
            if (!accept(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::string rest(text_.substr(pos_));
            char* end = nullptr;
            const double v = std::strtod(rest.c_str(), &end);
            if (end == rest.c_str()) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - rest.c_str());
            emit(OpCode::Const, v);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string_view name = text_.substr(start, pos_ - start);
            if (name == variable_) {
                emit(OpCode::Var);
            } else if (name == "pi") {
                emit(OpCode::Const, std::numbers::pi);
            } else if (name == "e") {
                emit(OpCode::Const, std::numbers::e);
            } else {
                function_call(name, start);
            }
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    void function_call(std::string_view name, std::size_t start) {
        OpCode code{};
        std::size_t arity = 1;
        if (name == "exp") {
            code = OpCode::Exp;
        } else if (name == "log") {
            code = OpCode::Log;
        } else if (name == "abs") {
            code = OpCode::Abs;
        } else if (name == "sqrt") {
            code = OpCode::Sqrt;
        } else if (name == "pow") {
            code = OpCode::Pow;
            arity = 2;
        } else {
            pos_ = start;
            fail("unknown identifier '" + std::string(name) + "'");
        }
        if (!accept('(')) fail("expected '(' after " + std::string(name));
        expr();
        for (std::size_t k = 1; k < arity; ++k) {
            if (!accept(',')) fail("expected ',' in " + std::string(name));
            expr();
        }
        if (!accept(')')) fail("expected ')'");
        emit(code);
    }

    std::string_view text_;
    std::string_view variable_;
    std::vector<Op>& out_;
    std::size_t pos_ = 0;
};

Expression::Expression(std::string source, std::string variable)
    : source_(std::move(source)), variable_(std::move(variable)) {
    if (variable_.empty()) throw SpecError("expression variable name must not be empty");
    Parser(source_, variable_, program_).parse();

    std::size_t depth = 0;
    for (const Op& op : program_) {
        switch (op.code) {
            case OpCode::Const:
            case OpCode::Var:
                ++depth;
                break;
            case OpCode::Add:
            case OpCode::Sub:
            case OpCode::Mul:
            case OpCode::Div:
            case OpCode::Pow:
                --depth;
                break;
            default:
                break;
        }
        max_depth_ = std::max(max_depth_, depth);
    }
}

double Expression::operator()(double value) const {
    constexpr std::size_t kInline = 32;
    std::array<double, kInline> inline_stack{};
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (max_depth_ > kInline) {
        heap_stack.resize(max_depth_);
        stack = heap_stack.data();
    }
    std::size_t top = 0;
    for (const Op& op : program_) {
        switch (op.code) {
            case OpCode::Const: stack[top++] = op.value; break;
            case OpCode::Var: stack[top++] = value; break;
            case OpCode::Add: --top; stack[top - 1] += stack[top]; break;
            case OpCode::Sub: --top; stack[top - 1] -= stack[top]; break;
            case OpCode::Mul: --top; stack[top - 1] *= stack[top]; break;
            case OpCode::Div: --top; stack[top - 1] /= stack[top]; break;
            case OpCode::Pow: --top; stack[top - 1] = std::pow(stack[top - 1], stack[top]); break;
            case OpCode::Neg: stack[top - 1] = -stack[top - 1]; break;
            case OpCode::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
            case OpCode::Log: stack[top - 1] = std::log(stack[top - 1]); break;
            case OpCode::Abs: stack[top - 1] = std::abs(stack[top - 1]); break;
            case OpCode::Sqrt: stack[top - 1] = std::sqrt(stack[top - 1]); break;
        }
    }
    return stack[0];
}

}  // namespace rsode
