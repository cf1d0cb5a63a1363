#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qsdlab::cli {

// Subcommands: chain, sde, lambda, spectral, fv, sweep, basin, timechange.
// Returns 0 on success, 1 on a usage or input error, 2 on a numerical or
// extinction error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace qsdlab::cli
