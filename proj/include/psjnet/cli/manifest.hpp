#ifndef PSJNET_CLI_MANIFEST_HPP_
#define PSJNET_CLI_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace psjnet::cli {

// FNV-1a 64 as 16 lowercase hex digits.
std::string checksum_hex(std::string_view bytes);
std::string file_checksum(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config = nlohmann::json::object();  // every option, defaults included
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // path -> checksum
  std::map<std::string, std::string> outputs;  // path -> checksum
  std::map<std::string, double> timings;       // seconds

  void add_input(const std::filesystem::path& p) { inputs[p.string()] = file_checksum(p); }
  void add_output(const std::filesystem::path& p) { outputs[p.string()] = file_checksum(p); }
  nlohmann::json to_json() const;
  // Atomic: temporary sibling file, then rename.
  void write(const std::filesystem::path& path) const;
};

}  // namespace psjnet::cli

#endif  // PSJNET_CLI_MANIFEST_HPP_
