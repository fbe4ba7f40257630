#ifndef PSJNET_CLI_DISPATCH_HPP_
#define PSJNET_CLI_DISPATCH_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace psjnet::cli {

// Runs one subcommand: simulate, preprocess, synth, train, evaluate,
// recommend or sweep-k. Returns 0 on success, 1 on a runtime failure and 2
// on a usage error (unknown flag, bad value, missing subcommand).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace psjnet::cli

#endif  // PSJNET_CLI_DISPATCH_HPP_
