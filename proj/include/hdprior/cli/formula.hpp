#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hdprior::cli {

/// `response ~ term + term`, with an optional leading `0 +` or `1 +`.
struct Formula {
  std::string response;
  std::vector<std::string> terms;
  bool intercept = true;
};

/// Throws ConfigError naming the character position of the problem.
Formula parse_formula(std::string_view text);

}  // namespace hdprior::cli
