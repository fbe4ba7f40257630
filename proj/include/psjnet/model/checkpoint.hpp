#ifndef PSJNET_MODEL_CHECKPOINT_HPP_
#define PSJNET_MODEL_CHECKPOINT_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "psjnet/model/params.hpp"
#include "psjnet/model/sequence.hpp"

namespace psjnet {

// A trained model with the vocabularies that map raw ids to its rows.
struct Checkpoint {
  ModelParams params;
  Vocabulary vocab_a{Domain::kA, {}};
  Vocabulary vocab_b{Domain::kB, {}};
  nlohmann::json meta = nlohmann::json::object();  // free-form run info

  const Vocabulary& vocab(Domain d) const { return d == Domain::kA ? vocab_a : vocab_b; }
};

nlohmann::json config_to_json(const ModelConfig& c);
// Throws ConfigError on missing or invalid fields.
ModelConfig config_from_json(const nlohmann::json& j);

// Layout: "PSJNETv1", u64 little-endian header length, JSON header (config,
// vocab ids and hashes, tensor directory, meta), then every tensor's doubles
// as raw little-endian IEEE-754 bytes in directory order.
std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws CheckpointError on corrupt or inconsistent input.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes `bytes` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace psjnet

#endif  // PSJNET_MODEL_CHECKPOINT_HPP_
