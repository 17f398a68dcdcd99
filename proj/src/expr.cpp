#include "esgen/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

#include "esgen/error.hpp"

namespace esgen {
namespace {

class Parser {
public:
    Parser(std::string_view text, const std::vector<std::string>& vars,
           const std::map<std::string, double>& consts)
        : text_(text), vars_(vars), consts_(consts) {}

    std::vector<Expression::Instr> run() {
        skip_ws();
        if (pos_ >= text_.size()) fail("empty expression");
        expr();
        skip_ws();
        if (pos_ < text_.size()) fail("unexpected trailing input");
        return std::move(code_);
    }

private:
    using Op = Expression::Op;
    using Fn = Expression::Fn;

    [[noreturn]] void fail(const std::string& msg) const {
        std::ostringstream os;
        os << "expression '" << text_ << "': " << msg << " at column " << (pos_ + 1);
        throw ConfigError(os.str());
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    // Returns the canonical ASCII operator at the cursor (consuming it) or 0.
    char peek_op(bool consume) {
        skip_ws();
        if (pos_ >= text_.size()) return 0;
        const auto rest = text_.substr(pos_);
        struct Alias {
            std::string_view utf8;
            char ascii;
        };
        static constexpr Alias aliases[] = {{"\xE2\x88\x92", '-'}, {"\xC3\x97", '*'}, {"\xC3\xB7", '/'}};
        for (const auto& a : aliases) {
            if (rest.starts_with(a.utf8)) {
                if (consume) pos_ += a.utf8.size();
                return a.ascii;
            }
        }
        const char c = rest.front();
        if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^' || c == '(' || c == ')') {
            if (consume) ++pos_;
            return c;
        }
        return 0;
    }

    void emit(Op op) { code_.push_back({op}); }

    void expr() {
        term();
        for (;;) {
            const char c = peek_op(false);
            if (c != '+' && c != '-') return;
            peek_op(true);
            term();
            emit(c == '+' ? Op::add : Op::sub);
        }
    }

    void term() {
        unary();
        for (;;) {
            const char c = peek_op(false);
            if (c != '*' && c != '/') return;
            peek_op(true);
            unary();
            emit(c == '*' ? Op::mul : Op::div);
        }
    }

    void unary() {
        const char c = peek_op(false);
        if (c == '-') {
            peek_op(true);
            unary();
            emit(Op::neg);
        } else if (c == '+') {
            peek_op(true);
            unary();
        } else {
            power();
        }
    }

    void power() {
        primary();
        if (peek_op(false) == '^') {
            peek_op(true);
            unary();
            emit(Op::pow);
        }
    }

    void primary() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        const char c = text_[pos_];
        if (peek_op(false) == '(') {
            peek_op(true);
            expr();
            if (peek_op(true) != ')') fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            identifier();
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    void number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
            if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
                pos_ = p;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
            }
        }
        const std::string token(text_.substr(start, pos_ - start));
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size()) {
            pos_ = start;
            fail("malformed number '" + token + "'");
        }
        code_.push_back({Op::push, Fn{}, 0, v});
    }

    void identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        const std::string name(text_.substr(start, pos_ - start));
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            static const std::map<std::string, Fn> fns = {
                {"sin", Fn::sin}, {"cos", Fn::cos},   {"tan", Fn::tan},   {"exp", Fn::exp},
                {"ln", Fn::ln},   {"log", Fn::ln},    {"sqrt", Fn::sqrt}, {"abs", Fn::abs}};
            const auto it = fns.find(name);
            if (it == fns.end()) {
                pos_ = start;
                fail("unknown function '" + name + "'");
            }
            ++pos_;
            expr();
            if (peek_op(true) != ')') fail("expected ')' after function argument");
            code_.push_back({Op::fn, it->second});
            return;
        }
        for (std::size_t i = 0; i < vars_.size(); ++i) {
            if (vars_[i] == name) {
                code_.push_back({Op::var, Fn{}, i});
                return;
            }
        }
        if (const auto it = consts_.find(name); it != consts_.end()) {
            code_.push_back({Op::push, Fn{}, 0, it->second});
            return;
        }
        if (name == "pi") {
            code_.push_back({Op::push, Fn{}, 0, std::numbers::pi});
            return;
        }
        if (name == "e") {
            code_.push_back({Op::push, Fn{}, 0, std::numbers::e});
            return;
        }
        pos_ = start;
        fail("unknown identifier '" + name + "'");
    }

    std::string_view text_;
    const std::vector<std::string>& vars_;
    const std::map<std::string, double>& consts_;
    std::size_t pos_ = 0;
    std::vector<Expression::Instr> code_;
};

}  // namespace

Expression Expression::parse(std::string_view text, const std::vector<std::string>& variables,
                             const std::map<std::string, double>& constants) {
    Expression e;
    e.code_ = Parser(text, variables, constants).run();
    e.source_ = std::string(text);
    e.arity_ = variables.size();
    std::size_t depth = 0;
    for (const auto& in : e.code_) {
        switch (in.op) {
            case Op::push:
            case Op::var: ++depth; break;
            case Op::neg:
            case Op::fn: break;
            default: --depth; break;
        }
        e.max_stack_ = std::max(e.max_stack_, depth);
    }
    return e;
}

double Expression::operator()(std::span<const double> values) const {
    if (values.size() < arity_) throw InputError("expression '" + source_ + "': too few variable values");
    // Expressions here are tiny; a fixed local buffer avoids allocation per call.
    constexpr std::size_t kInline = 32;
    double inline_buf[kInline] = {};
    std::vector<double> heap;
    double* st = inline_buf;
    if (max_stack_ > kInline) {
        heap.resize(max_stack_);
        st = heap.data();
    }
    std::size_t sp = 0;
    for (const auto& in : code_) {
        switch (in.op) {
            case Op::push: st[sp++] = in.value; break;
            case Op::var: st[sp++] = values[in.index]; break;
            case Op::add: --sp; st[sp - 1] += st[sp]; break;
            case Op::sub: --sp; st[sp - 1] -= st[sp]; break;
            case Op::mul: --sp; st[sp - 1] *= st[sp]; break;
            case Op::div: --sp; st[sp - 1] /= st[sp]; break;
            case Op::pow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
            case Op::neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::fn: {
                double& a = st[sp - 1];
                switch (in.fn) {
                    case Fn::sin: a = std::sin(a); break;
                    case Fn::cos: a = std::cos(a); break;
                    case Fn::tan: a = std::tan(a); break;
                    case Fn::exp: a = std::exp(a); break;
                    case Fn::ln: a = std::log(a); break;
                    case Fn::sqrt: a = std::sqrt(a); break;
                    case Fn::abs: a = std::abs(a); break;
                }
                break;
            }
        }
    }
    return st[0];
}

}  // namespace esgen
