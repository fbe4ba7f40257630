#include "psjnet/data/sequence_io.hpp"

#include <limits>

#include "psjnet/error.hpp"
#include "psjnet/model/checkpoint.hpp"

namespace psjnet {

namespace {

Event parse_token(std::string_view tok, std::size_t col) {
  if (tok.empty()) throw ParseError("empty token", col);
  Event e;
  if (tok[0] == 'A') {
    e.domain = Domain::kA;
  } else if (tok[0] == 'B') {
    e.domain = Domain::kB;
  } else {
    throw ParseError("domain tag must be A or B", col);
  }
  if (tok.size() < 2 || tok[1] != ':') throw ParseError("expected ':' after domain tag", col + 1);
  const std::string_view digits = tok.substr(2);
  if (digits.empty()) throw ParseError("missing item id", col + 2);
  if (digits.size() > 1 && digits[0] == '0') throw ParseError("item id has a leading zero", col + 2);
  std::uint64_t v = 0;
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const char c = digits[i];
    if (c < '0' || c > '9') throw ParseError("item id must be decimal digits", col + 2 + i);
    const auto d = static_cast<std::uint64_t>(c - '0');
    if (v > (kMax - d) / 10) throw ParseError("item id exceeds 64 bits", col + 2 + i);
    v = v * 10 + d;
  }
  e.item = v;
  return e;
}

}  // namespace

MixedSequence parse_sequence_line(std::string_view line) {
  if (line.empty()) throw ParseError("empty line", 1);
  std::vector<Event> events;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    const std::string_view tok =
        line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
    events.push_back(parse_token(tok, start + 1));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return MixedSequence(std::move(events));
}

std::string serialize_sequence(const MixedSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) out += '\t';
    const Event& e = seq.events()[i];
    out += domain_char(e.domain);
    out += ':';
    out += std::to_string(e.item);
  }
  return out;
}

std::vector<MixedSequence> parse_sequence_file(std::string_view text) {
  std::vector<MixedSequence> out;
  std::size_t start = 0;
  std::size_t line_no = 1;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": missing trailing newline",
                       text.size() - start + 1);
    }
    try {
      out.push_back(parse_sequence_line(text.substr(start, nl - start)));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.detail(), e.column());
    }
    start = nl + 1;
    ++line_no;
  }
  return out;
}

std::string serialize_sequence_file(std::span<const MixedSequence> seqs) {
  std::string out;
  for (const MixedSequence& s : seqs) {
    out += serialize_sequence(s);
    out += '\n';
  }
  return out;
}

std::vector<MixedSequence> read_sequence_file(const std::filesystem::path& path) {
  try {
    return parse_sequence_file(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.detail(), e.column());
  }
}

void write_sequence_file(const std::filesystem::path& path, std::span<const MixedSequence> seqs) {
  write_file_atomic(path, serialize_sequence_file(seqs));
}

}  // namespace psjnet
