#include "rlrn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "rlrn/errors.hpp"

namespace rlrn {

static_assert(std::endian::native == std::endian::little, "checkpoint blobs assume a little-endian host");

std::filesystem::path manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".json");
}

std::filesystem::path blob_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StagingError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_checkpoint(const std::filesystem::path& stem, const ad::ParameterSet& params, const CheckpointMeta& meta) {
  nlohmann::json manifest;
  manifest["format"] = "rlrn-checkpoint-v1";
  manifest["stage"] = meta.stage;
  manifest["seed"] = meta.seed;
  manifest["step"] = meta.step;
  manifest["blob"] = blob_path(stem).filename().string();
  std::string blob;
  auto entries = nlohmann::json::array();
  for (const ad::Parameter& p : params) {
    entries.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"offset", blob.size()}, {"frozen", p.frozen}});
    const auto* bytes = reinterpret_cast<const char*>(p.value.ptr());
    blob.append(bytes, p.value.size() * sizeof(float));
  }
  manifest["blob_bytes"] = blob.size();
  manifest["params"] = std::move(entries);
  write_file_atomic(blob_path(stem), blob);
  write_file_atomic(manifest_path(stem), manifest.dump(1) + "\n");
}

bool checkpoint_exists(const std::filesystem::path& stem) {
  return std::filesystem::exists(manifest_path(stem)) && std::filesystem::exists(blob_path(stem));
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  if (!checkpoint_exists(stem)) throw StagingError("missing checkpoint " + stem.string());
  const auto manifest = nlohmann::json::parse(read_file(manifest_path(stem)));
  const std::string blob = read_file(blob_path(stem));
  if (manifest.at("format") != "rlrn-checkpoint-v1") throw CorruptDatasetError("unknown checkpoint format in " + stem.string());
  if (manifest.at("blob_bytes").get<std::size_t>() != blob.size())
    throw CorruptDatasetError("checkpoint blob size mismatch for " + stem.string());
  Checkpoint ck;
  ck.meta.stage = manifest.at("stage").get<std::string>();
  ck.meta.seed = manifest.at("seed").get<std::uint64_t>();
  ck.meta.step = manifest.at("step").get<std::int64_t>();
  for (const auto& e : manifest.at("params")) {
    ad::Tensor t(e.at("shape").get<ad::Shape>());
    const std::size_t off = e.at("offset").get<std::size_t>();
    const std::size_t n = t.size() * sizeof(float);
    if (off + n > blob.size()) throw CorruptDatasetError("checkpoint parameter out of blob range");
    std::memcpy(t.ptr(), blob.data() + off, n);
    ad::Parameter& p = ck.params.add(e.at("name").get<std::string>(), std::move(t));
    p.frozen = e.value("frozen", false);
  }
  return ck;
}

}  // namespace rlrn
