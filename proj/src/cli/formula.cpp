#include "hdprior/cli/formula.hpp"

#include <algorithm>

#include "hdprior/errors.hpp"

namespace hdprior::cli {

namespace {

struct Piece {
  std::string text;
  std::size_t pos = 0;  // 1-based position of the first character
};

Piece trimmed(std::string_view s, std::size_t base) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return {std::string(s.substr(a, b - a)), base + a + 1};
}

[[noreturn]] void fail(const std::string& msg, std::size_t pos) {
  throw ConfigError("formula: " + msg + " at position " + std::to_string(pos));
}

void check_name(const Piece& p) {
  static const std::string_view bad = "~+*:^|()-";
  for (std::size_t i = 0; i < p.text.size(); ++i) {
    if (bad.find(p.text[i]) != std::string_view::npos && p.text != "(Intercept)") {
      fail("unsupported syntax '" + std::string(1, p.text[i]) + "'", p.pos + i);
    }
  }
}

}  // namespace

Formula parse_formula(std::string_view text) {
  const std::size_t tilde = text.find('~');
  if (tilde == std::string_view::npos) fail("missing '~'", text.size() + 1);
  if (text.find('~', tilde + 1) != std::string_view::npos) fail("second '~'", text.find('~', tilde + 1) + 1);

  Formula f;
  const Piece lhs = trimmed(text.substr(0, tilde), 0);
  if (lhs.text.empty()) fail("empty response", tilde + 1);
  check_name(lhs);
  f.response = lhs.text;

  std::size_t start = tilde + 1;
  bool first = true;
  while (true) {
    const std::size_t plus = text.find('+', start);
    const std::size_t end = plus == std::string_view::npos ? text.size() : plus;
    const Piece term = trimmed(text.substr(start, end - start), start);
    if (term.text.empty()) fail("empty term", start + 1);
    if (term.text == "0" || term.text == "1") {
      if (!first) fail("intercept flag must come first", term.pos);
      f.intercept = term.text == "1";
    } else {
      check_name(term);
      if (term.text == f.response) fail("response '" + f.response + "' used as a term", term.pos);
      if (std::find(f.terms.begin(), f.terms.end(), term.text) != f.terms.end()) {
        fail("duplicate term '" + term.text + "'", term.pos);
      }
      f.terms.push_back(term.text);
    }
    first = false;
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  if (!f.intercept && f.terms.empty()) fail("no terms and no intercept", text.size() + 1);
  return f;
}

}  // namespace hdprior::cli
