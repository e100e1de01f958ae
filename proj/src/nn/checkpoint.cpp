#include "singerlab/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "singerlab/common/error.hpp"
#include "singerlab/common/io.hpp"

namespace singerlab::nn {

static_assert(std::endian::native == std::endian::little, "checkpoints assume a little-endian host");

namespace {
constexpr char kMagic[8] = {'S', 'L', 'C', 'K', 'P', 'T', '0', '1'};
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json tensors = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& [group, params] : ckpt.groups) {
    for (const auto& s : params.specs()) {
      tensors.push_back({{"group", group},
                         {"name", s.name},
                         {"shape", s.shape},
                         {"offset", offset + s.offset * sizeof(float)},
                         {"trainable", s.trainable}});
    }
    offset += params.size() * sizeof(float);
  }
  nlohmann::json header = {{"format_version", 1}, {"dtype", "float32"}, {"meta", ckpt.meta}, {"tensors", tensors},
                           {"blob_bytes", offset}};
  const std::string h = header.dump();
  std::string out(kMagic, 8);
  const std::uint64_t len = h.size();
  out.append(reinterpret_cast<const char*>(&len), 8);
  out += h;
  for (const auto& [group, params] : ckpt.groups) {
    out.append(reinterpret_cast<const char*>(params.data().data()), params.size() * sizeof(float));
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  if (16 + len > bytes.size()) throw std::runtime_error("truncated checkpoint header");
  const auto header = nlohmann::json::parse(bytes.substr(16, len));
  if (header.at("format_version").get<int>() != 1) throw std::runtime_error("unsupported checkpoint version");
  const std::size_t blob_start = 16 + len;
  const auto blob_bytes = header.at("blob_bytes").get<std::size_t>();
  if (bytes.size() != blob_start + blob_bytes) throw std::runtime_error("checkpoint blob size mismatch");

  Checkpoint ckpt;
  ckpt.meta = header.at("meta");
  std::map<std::string, std::size_t> group_start;
  for (const auto& t : header.at("tensors")) {
    const auto group = t.at("group").get<std::string>();
    auto& ps = ckpt.groups[group];
    const auto off = t.at("offset").get<std::size_t>();
    if (!group_start.contains(group)) group_start[group] = off;
    const std::size_t idx =
        ps.add(t.at("name").get<std::string>(), t.at("shape").get<std::vector<int>>(), Init::kZeros,
               t.at("trainable").get<bool>());
    const auto& spec = ps.specs()[idx];
    if (group_start[group] + spec.offset * sizeof(float) != off) throw std::runtime_error("checkpoint offsets are not contiguous");
    if (off + spec.size * sizeof(float) > blob_bytes) throw std::runtime_error("checkpoint tensor out of range");
    std::memcpy(ps.data().data() + spec.offset, bytes.data() + blob_start + off, spec.size * sizeof(float));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError(path.string(), producer);
  return parse_checkpoint(read_file(path));
}

void assign_group(ParamSet<float>& dst, const ParamSet<float>& src, const std::string& what) {
  if (!dst.same_layout(src)) throw std::invalid_argument(what + " parameters do not match the configuration");
  dst.data() = src.data();
}

}  // namespace singerlab::nn
