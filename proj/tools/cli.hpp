#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coupled_labels::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Subcommands: gen, split, train, ablate, report. Returns the process exit
/// code; diagnostics go to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coupled_labels::cli
