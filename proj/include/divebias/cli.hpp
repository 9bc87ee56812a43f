#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace divebias {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Data goes to `out`,
/// diagnostics to `err`. Returns 0 on success, 1 on validation or I/O errors,
/// 2 on usage errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace divebias
