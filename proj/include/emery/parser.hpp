#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "emery/rep_function.hpp"

namespace emery {

struct SourceSpan {
  std::size_t start = 0;  // byte offsets into the original input
  std::size_t end = 0;
  int line = 1;
  int column = 1;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, SourceSpan span, std::vector<std::string> expected = {})
      : std::runtime_error(std::move(message)), span_(span), expected_(std::move(expected)) {}
  const SourceSpan& span() const { return span_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  SourceSpan span_;
  std::vector<std::string> expected_;
};

// Surface syntax for representing functions.
//
//   function := expr (';' expr)*            vector components
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | postfix
//   postfix  := atom ('^' exponent)?        exponent must fold to a constant
//   exponent := ['-'] (NUMBER | 'i' | '(' expr ')') ('^' exponent)?
//   atom     := NUMBER | 'i' | 't' | 'id' | 'id1'..'id9' | 'theta' '.' NAME
//             | '(' expr ')' | FUNC '(' expr ')'
//   FUNC     := exp | log | abs | conj | re | im | sgn
//
// 'id' is an alias for 'id1'; variable indices are checked against dim.
// Division a/b parses to a * b^-1, subtraction to a + (-b). Whitespace is
// insignificant.
RepFunction parse(const std::string& text, int dim);

// Renders a caret-annotated diagnostic for CLI output.
std::string format_parse_error(const std::string& text, const ParseError& err);

}  // namespace emery
