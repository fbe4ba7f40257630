#ifndef PSJNET_DATA_SEQUENCE_IO_HPP_
#define PSJNET_DATA_SEQUENCE_IO_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "psjnet/model/sequence.hpp"

namespace psjnet {

// One line: tab-separated `A:<id>` / `B:<id>` tokens in time order. Ids are
// canonical unsigned decimal (no sign, no leading zeros) below 2^64.
// Throws ParseError carrying the 1-based column of the offending byte.
MixedSequence parse_sequence_line(std::string_view line);
std::string serialize_sequence(const MixedSequence& seq);

// Newline-terminated lines, one sequence each. ParseError messages name the
// line number; the column refers to that line.
std::vector<MixedSequence> parse_sequence_file(std::string_view text);
std::string serialize_sequence_file(std::span<const MixedSequence> seqs);

std::vector<MixedSequence> read_sequence_file(const std::filesystem::path& path);
void write_sequence_file(const std::filesystem::path& path, std::span<const MixedSequence> seqs);

}  // namespace psjnet

#endif  // PSJNET_DATA_SEQUENCE_IO_HPP_
