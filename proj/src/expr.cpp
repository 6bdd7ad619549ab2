#include "evoshift/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>

#include "evoshift/errors.hpp"

namespace evoshift::expr {

namespace {

using Fn = std::function<double(double)>;

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src) {}

    Fn parse() {
        Fn e = expression();
        skip_ws();
        if (pos_ != src_.size()) fail("trailing input");
        return e;
    }

private:
    const std::string& src_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression error at position " + std::to_string(pos_) + ": " + msg +
                         " in \"" + src_ + "\"");
    }

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

    Fn expression() {
        Fn lhs = term();
        while (true) {
            if (consume('+')) {
                Fn rhs = term();
                lhs = [lhs, rhs](double t) { return lhs(t) + rhs(t); };
            } else if (consume('-')) {
                Fn rhs = term();
                lhs = [lhs, rhs](double t) { return lhs(t) - rhs(t); };
            } else {
                return lhs;
            }
        }
    }

    Fn term() {
        Fn lhs = factor();
        while (true) {
            if (consume('*')) {
                Fn rhs = factor();
                lhs = [lhs, rhs](double t) { return lhs(t) * rhs(t); };
            } else if (consume('/')) {
                Fn rhs = factor();
                lhs = [lhs, rhs](double t) { return lhs(t) / rhs(t); };
            } else {
                return lhs;
            }
        }
    }

    // Exponentiation binds tighter than unary minus: -2^2 == -(2^2).
    Fn factor() {
        if (consume('-')) {
            Fn inner = factor();
            return [inner](double t) { return -inner(t); };
        }
        if (consume('+')) return factor();
        return power();
    }

    Fn power() {
        Fn base = primary();
        if (consume('^')) {
            Fn exp = factor();  // right associative; exponent may carry a sign
            return [base, exp](double t) { return std::pow(base(t), exp(t)); };
        }
        return base;
    }

    Fn primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        if (consume('(')) {
            Fn inner = expression();
            if (!consume(')')) fail("expected ')'");
            return inner;
        }
        fail("unexpected character");
    }

    Fn number() {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return [v](double) { return v; };
    }

    Fn identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name = src_.substr(start, pos_ - start);
        if (name == "t") return [](double t) { return t; };
        if (name == "pi") return [](double) { return M_PI; };
        if (name == "e") return [](double) { return M_E; };

        static const std::map<std::string, double (*)(double)> funcs = {
            {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
            {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
            {"abs", std::fabs},  {"sinh", std::sinh}, {"cosh", std::cosh},
            {"tanh", std::tanh}};
        const auto it = funcs.find(name);
        if (it == funcs.end()) fail("unknown identifier '" + name + "'");
        if (!consume('(')) fail("expected '(' after function name");
        Fn arg = expression();
        if (!consume(')')) fail("expected ')'");
        auto fp = it->second;
        return [fp, arg](double t) { return fp(arg(t)); };
    }
};

}  // namespace

std::function<double(double)> compile(const std::string& source) {
    return Parser(source).parse();
}

}  // namespace evoshift::expr
