#ifndef REEBKIT_PARSE_HPP
#define REEBKIT_PARSE_HPP

// Infix text grammar for scalar fields, used by config files and the CLI.
//
//   expr    = term { ("+" | "-") term } ;
//   term    = factor { ("*" | "/") factor } ;
//   factor  = ("-" | "+") factor | power ;
//   power   = primary [ "^" [ "-" ] integer ] ;
//   primary = number | "pi" | coordinate
//           | ("sin" | "cos" | "tan") "(" expr ")"
//           | "bump" "(" expr "," number "," number [ "," integer ] ")"
//           | "(" expr ")" ;
//   number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//
// Coordinates are the chart's coordinate names. Whitespace is ignored.
// A unary minus binds looser than "^", so -x^2 is -(x^2).

#include "reebkit/errors.hpp"
#include "reebkit/scalar_field.hpp"

#include <array>
#include <cctype>
#include <cstdlib>
#include <numbers>
#include <string>
#include <string_view>

namespace reebkit {

namespace detail {

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, const std::array<std::string, 3>& coords)
        : text_(text), coords_(coords) {}

    ScalarField parse() {
        ScalarField e = expr();
        skip();
        if (pos_ != text_.size()) fail("unexpected trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    ScalarField expr() {
        ScalarField lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = lhs + term();
            else if (accept('-'))
                lhs = lhs - term();
            else
                return lhs;
        }
    }

    ScalarField term() {
        ScalarField lhs = factor();
        for (;;) {
            if (accept('*'))
                lhs = lhs * factor();
            else if (accept('/'))
                lhs = lhs / factor();
            else
                return lhs;
        }
    }

    ScalarField factor() {
        if (accept('-')) return -factor();
        if (accept('+')) return factor();
        return power();
    }

    ScalarField power() {
        ScalarField base = primary();
        if (!accept('^')) return base;
        const bool negative = accept('-');
        skip();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (start == pos_) fail("exponent must be an integer");
        const int e = std::atoi(std::string(text_.substr(start, pos_ - start)).c_str());
        return pow(base, negative ? -e : e);
    }

    double number() {
        skip();
        const std::string rest(text_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) fail("expected a number");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        return v;
    }

    ScalarField primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ScalarField e = expr();
            expect(')');
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            const std::string name(text_.substr(start, pos_ - start));
            for (int i = 0; i < 3; ++i)
                if (coords_[static_cast<std::size_t>(i)] == name) return ScalarField::coordinate(i);
            if (name == "pi") return std::numbers::pi;
            if (name == "sin" || name == "cos" || name == "tan") {
                expect('(');
                ScalarField arg = expr();
                expect(')');
                return name == "sin" ? sin(arg) : name == "cos" ? cos(arg) : tan(arg);
            }
            if (name == "bump") {
                expect('(');
                ScalarField arg = expr();
                expect(',');
                const double r0 = number();
                expect(',');
                const double r1 = number();
                int order = 0;
                if (accept(',')) order = static_cast<int>(number());
                expect(')');
                try {
                    return ScalarField::bump(arg, r0, r1, order);
                } catch (const InvalidArgument& e) {
                    fail(e.what());
                }
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    const std::array<std::string, 3>& coords_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parse `text` as a scalar field over coordinates named `coords`.
inline ScalarField parse_expression(std::string_view text, const std::array<std::string, 3>& coords) {
    return detail::ExpressionParser(text, coords).parse();
}

} // namespace reebkit

#endif
