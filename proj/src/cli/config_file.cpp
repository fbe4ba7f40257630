#include "psjnet/cli/config_file.hpp"

#include <sstream>

#include "psjnet/error.hpp"
#include "psjnet/model/checkpoint.hpp"

namespace psjnet::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> config_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = trim(text.substr(start, nl - start));
    start = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    out.push_back("--" + key);
    std::istringstream words{std::string(trim(line.substr(eq + 1)))};
    std::string w;
    while (words >> w) out.push_back(w);
  }
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::vector<std::string> from_files;
  for (std::size_t i = 2; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    const auto toks = config_tokens(read_file(path));
    from_files.insert(from_files.end(), toks.begin(), toks.end());
  }
  std::vector<std::string> out(args.begin(), args.begin() + 2);
  out.insert(out.end(), from_files.begin(), from_files.end());
  out.insert(out.end(), args.begin() + 2, args.end());
  return out;
}

}  // namespace psjnet::cli
