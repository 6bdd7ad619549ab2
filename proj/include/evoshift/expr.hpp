#pragma once

#include <functional>
#include <string>

namespace evoshift::expr {

// Compiles an arithmetic expression in the single variable `t` into a callable.
//
// Grammar (usual precedence, ^ binds tightest and associates right):
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := ('+'|'-') factor | power
//   power  := primary ('^' factor)?
//   primary:= NUMBER | 't' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'
//   FUNC   := sin cos tan exp log sqrt abs sinh cosh tanh
//
// Throws ParseError with the offending position on malformed input.
std::function<double(double)> compile(const std::string& source);

}  // namespace evoshift::expr
