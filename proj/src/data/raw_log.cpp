#include "psjnet/data/raw_log.hpp"

#include <charconv>

#include "psjnet/error.hpp"
#include "psjnet/model/checkpoint.hpp"

namespace psjnet {

namespace {

template <typename T>
T parse_number(std::string_view field, const char* what, std::size_t line) {
  T v{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError("line " + std::to_string(line) + ": bad " + what + " '" +
                      std::string(field) + "'");
  }
  return v;
}

}  // namespace

std::vector<RawEvent> parse_raw_log(std::string_view text) {
  std::vector<RawEvent> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line_no == 1 && line.starts_with("user")) continue;

    std::vector<std::string_view> f;
    std::size_t p = 0;
    while (true) {
      const std::size_t comma = line.find(',', p);
      f.push_back(line.substr(p, comma == std::string_view::npos ? std::string_view::npos : comma - p));
      if (comma == std::string_view::npos) break;
      p = comma + 1;
    }
    if (f.size() != 4 && f.size() != 5) {
      throw FormatError("line " + std::to_string(line_no) + ": expected 4 or 5 fields, got " +
                        std::to_string(f.size()));
    }
    RawEvent e;
    e.user = parse_number<std::uint64_t>(f[0], "user id", line_no);
    if (f[1] == "A") {
      e.domain = Domain::kA;
    } else if (f[1] == "B") {
      e.domain = Domain::kB;
    } else {
      throw FormatError("line " + std::to_string(line_no) + ": domain must be A or B");
    }
    e.item = parse_number<std::uint64_t>(f[2], "item id", line_no);
    e.timestamp = parse_number<std::int64_t>(f[3], "timestamp", line_no);
    if (e.timestamp < 0) throw FormatError("line " + std::to_string(line_no) + ": negative timestamp");
    if (f.size() == 5 && !f[4].empty()) {
      e.duration = parse_number<std::int64_t>(f[4], "duration", line_no);
      if (*e.duration < 0) throw FormatError("line " + std::to_string(line_no) + ": negative duration");
    }
    out.push_back(e);
  }
  return out;
}

std::string serialize_raw_log(std::span<const RawEvent> events) {
  std::string out = "user,domain,item,timestamp,duration\n";
  for (const RawEvent& e : events) {
    out += std::to_string(e.user) + "," + domain_char(e.domain) + "," + std::to_string(e.item) +
           "," + std::to_string(e.timestamp) + ",";
    if (e.duration) out += std::to_string(*e.duration);
    out += "\n";
  }
  return out;
}

std::vector<RawEvent> read_raw_log(const std::filesystem::path& path) {
  return parse_raw_log(read_file(path));
}

}  // namespace psjnet
