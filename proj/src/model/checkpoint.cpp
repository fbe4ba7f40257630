#include "psjnet/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "psjnet/error.hpp"

namespace psjnet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint byte layout assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "PSJNETv1";

nlohmann::json vocab_to_json(const Vocabulary& v) {
  return {{"size", v.size()}, {"hash", v.hash()}, {"ids", v.ids()}};
}

Vocabulary vocab_from_json(Domain d, const nlohmann::json& j) {
  Vocabulary v(d, j.at("ids").get<std::vector<ItemId>>());
  if (v.size() != j.at("size").get<std::size_t>() ||
      v.hash() != j.at("hash").get<std::uint64_t>()) {
    throw CheckpointError(std::string("vocabulary ") + domain_char(d) +
                          " does not match its recorded size/hash");
  }
  return v;
}

}  // namespace

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"ablation", to_string(c.ablation)},
          {"hidden", c.hidden},
          {"roles", c.roles},
          {"vocab_a", c.vocab_a},
          {"vocab_b", c.vocab_b},
          {"share_role_transfer", c.share_role_transfer},
          {"none_gate_shares_weights", c.none_gate_shares_weights}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.ablation = parse_ablation(j.at("ablation").get<std::string>());
    c.hidden = j.at("hidden").get<std::size_t>();
    c.roles = j.at("roles").get<std::size_t>();
    c.vocab_a = j.at("vocab_a").get<std::size_t>();
    c.vocab_b = j.at("vocab_b").get<std::size_t>();
    c.share_role_transfer = j.at("share_role_transfer").get<bool>();
    c.none_gate_shares_weights = j.at("none_gate_shares_weights").get<bool>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const ModelParams& p = ckpt.params;
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& [name, t] : p.tensors) dir.push_back({{"name", name}, {"shape", t.shape()}});
  const nlohmann::json header = {{"config", config_to_json(p.config)},
                                 {"vocab", {{"A", vocab_to_json(ckpt.vocab_a)},
                                            {"B", vocab_to_json(ckpt.vocab_b)}}},
                                 {"tensors", dir},
                                 {"meta", ckpt.meta}};
  const std::string text = header.dump();
  std::string out(kMagic);
  const std::uint64_t len = text.size();
  out.append(reinterpret_cast<const char*>(&len), sizeof len);
  out += text;
  for (const auto& [name, t] : p.tensors) {
    const auto& data = t.storage();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CheckpointError("not a psjnet checkpoint (bad magic)");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + kMagic.size(), sizeof len);
  std::size_t pos = kMagic.size() + sizeof len;
  if (len > bytes.size() - pos) throw CheckpointError("truncated checkpoint header");
  Checkpoint ckpt;
  try {
    const nlohmann::json header = nlohmann::json::parse(bytes.substr(pos, len));
    pos += len;
    ckpt.params.config = config_from_json(header.at("config"));
    ckpt.vocab_a = vocab_from_json(Domain::kA, header.at("vocab").at("A"));
    ckpt.vocab_b = vocab_from_json(Domain::kB, header.at("vocab").at("B"));
    ckpt.meta = header.at("meta");
    for (const auto& entry : header.at("tensors")) {
      nk::Tensor t(entry.at("shape").get<nk::Shape>());
      const std::size_t n = t.storage().size() * sizeof(double);
      if (n > bytes.size() - pos) throw CheckpointError("truncated tensor data");
      std::memcpy(t.storage().data(), bytes.data() + pos, n);
      pos += n;
      ckpt.params.tensors.add(entry.at("name").get<std::string>(), std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  } catch (const ShapeError& e) {
    throw CheckpointError(std::string("corrupt tensor directory: ") + e.what());
  }
  if (pos != bytes.size()) throw CheckpointError("trailing bytes after tensor data");

  const auto layout = parameter_layout(ckpt.params.config);
  if (layout.size() != ckpt.params.tensors.size()) {
    throw CheckpointError("tensor set does not match the recorded configuration");
  }
  for (const ParamSpec& s : layout) {
    if (!ckpt.params.tensors.contains(s.name) || ckpt.params.tensors.at(s.name).shape() != s.shape) {
      throw CheckpointError("tensor '" + s.name + "' missing or misshapen");
    }
  }
  if (ckpt.vocab_a.size() != ckpt.params.config.vocab_a ||
      ckpt.vocab_b.size() != ckpt.params.config.vocab_b) {
    throw CheckpointError("vocabulary sizes disagree with the model configuration");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace psjnet
