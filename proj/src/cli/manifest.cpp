#include "psjnet/cli/manifest.hpp"

#include <cstdio>

#include "psjnet/model/checkpoint.hpp"
#include "psjnet/numkernel/random.hpp"

namespace psjnet::cli {

std::string checksum_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(nk::hash_string(bytes)));
  return buf;
}

std::string file_checksum(const std::filesystem::path& path) {
  return checksum_hex(read_file(path));
}

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"argv", argv},       {"config", config}, {"seed", seed},
          {"inputs", inputs},   {"outputs", outputs}, {"timings", timings}};
}

void RunManifest::write(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(2) + "\n");
}

}  // namespace psjnet::cli
