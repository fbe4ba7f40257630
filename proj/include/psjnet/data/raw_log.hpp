#ifndef PSJNET_DATA_RAW_LOG_HPP_
#define PSJNET_DATA_RAW_LOG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psjnet/model/sequence.hpp"

namespace psjnet {

struct RawEvent {
  std::uint64_t user = 0;
  Domain domain = Domain::kA;
  ItemId item = 0;
  std::int64_t timestamp = 0;             // seconds since the Unix epoch
  std::optional<std::int64_t> duration;  // seconds watched

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

// CSV, one event per line: `user,domain,item,timestamp[,duration]`. Blank
// lines, `#` comments and a leading `user,...` header are skipped. Throws
// FormatError naming the line for malformed fields, negative timestamps or
// negative durations.
std::vector<RawEvent> parse_raw_log(std::string_view text);
std::string serialize_raw_log(std::span<const RawEvent> events);
std::vector<RawEvent> read_raw_log(const std::filesystem::path& path);

}  // namespace psjnet

#endif  // PSJNET_DATA_RAW_LOG_HPP_
