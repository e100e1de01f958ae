#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"
#include "singerlab/nn/tensor.hpp"

namespace singerlab::nn {

// File layout: 8-byte magic "SLCKPT01", little-endian u64 header length,
// JSON header, then float32 little-endian data. The header lists every
// tensor as {group, name, shape, offset (bytes into the blob), trainable}.
struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::map<std::string, ParamSet<float>> groups;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws MissingArtifactError when the file does not exist; producer names
// the command that writes it.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& producer);

// Copies values from src into dst by tensor name; layouts must match.
void assign_group(ParamSet<float>& dst, const ParamSet<float>& src, const std::string& what);

}  // namespace singerlab::nn
