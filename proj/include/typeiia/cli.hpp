#ifndef TYPEIIA_CLI_HPP
#define TYPEIIA_CLI_HPP

/// Command-line front end: verify, flow, grid, oracle and symbol.
///
/// Exit codes: 0 success, 1 a check failed or the run ended unexpectedly,
/// 2 the command line, configuration file or model file is invalid.

#include <iosfwd>
#include <string>
#include <vector>

namespace typeiia {

inline constexpr const char* kEngineVersion = "1.0.0";

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace typeiia

#endif  // TYPEIIA_CLI_HPP
