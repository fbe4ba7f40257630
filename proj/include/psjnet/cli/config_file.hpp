#ifndef PSJNET_CLI_CONFIG_FILE_HPP_
#define PSJNET_CLI_CONFIG_FILE_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace psjnet::cli {

// `key = value` lines (blank lines and `#` comments ignored) turned into
// command-line tokens: `--key` followed by each whitespace-separated word
// of the value. Throws ConfigError on a line without '=' or an empty key.
std::vector<std::string> config_tokens(std::string_view text);

// Inserts the tokens of every `--config PATH` (or `--config=PATH`) found
// after the subcommand ahead of the remaining arguments, so that explicit
// flags win over file values under last-value-wins parsing. The --config
// arguments themselves are kept.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace psjnet::cli

#endif  // PSJNET_CLI_CONFIG_FILE_HPP_
