#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace esgen {

/// Small arithmetic-expression evaluator used for custom costs, generator
/// functions and vibrational plant fields.
///
/// Grammar: numbers, named variables, named constants, `pi`, `e`,
/// binary `+ - * / ^` (also the Unicode forms U+2212, U+00D7, U+00F7),
/// unary minus, parentheses, and the functions
/// `sin cos tan exp ln log sqrt abs`. `^` is right-associative and binds
/// tighter than unary minus, so `-z^2 == -(z^2)`.
class Expression {
public:
    /// Parse `text`. Variables are bound positionally at evaluation time in the
    /// order given; `constants` are folded in at parse time. Parse errors throw
    /// ConfigError with the 1-based column.
    static Expression parse(std::string_view text, const std::vector<std::string>& variables,
                            const std::map<std::string, double>& constants = {});

    double operator()(std::span<const double> values) const;
    double operator()(double z) const { return (*this)(std::span<const double>(&z, 1)); }

    [[nodiscard]] const std::string& source() const { return source_; }
    [[nodiscard]] std::size_t arity() const { return arity_; }

    enum class Op : unsigned char { push, var, add, sub, mul, div, pow, neg, fn };
    enum class Fn : unsigned char { sin, cos, tan, exp, ln, sqrt, abs };
    struct Instr {
        Op op;
        Fn fn{};
        std::size_t index{};
        double value{};
    };

private:
    std::vector<Instr> code_;
    std::string source_;
    std::size_t arity_ = 0;
    std::size_t max_stack_ = 0;
};

}  // namespace esgen
