#include <array>
#include <cstdio>
#include <sstream>

#include "rlrn/dataset.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/rng.hpp"

namespace rlrn::data {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv_update(std::uint64_t h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw CorruptDatasetError(std::string("record field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < size; i += 3) {
    const std::uint32_t v = (std::uint32_t{data[i]} << 16) | (std::uint32_t{data[i + 1]} << 8) | data[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < size) {
    std::uint32_t v = std::uint32_t{data[i]} << 16;
    if (i + 1 < size) v |= std::uint32_t{data[i + 1]} << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < size ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t{};
    t.fill(-1);
    for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
    return t;
  }();
  if (text.size() % 4 != 0) throw CorruptDatasetError("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + static_cast<std::size_t>(k)];
      if (ch == '=' && i + 4 == text.size() && k >= 2) {
        v[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw CorruptDatasetError("base64 data after padding");
      v[k] = table[static_cast<unsigned char>(ch)];
      if (v[k] < 0) throw CorruptDatasetError("invalid base64 character");
    }
    const std::uint32_t w = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                            (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(w >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(w));
  }
  return out;
}

json sample_to_json(const SceneSample& s) {
  const int n1 = s.vehicle_count(), h = s.history_length();
  std::vector<float> hist, poses, route;
  hist.reserve(static_cast<std::size_t>(n1 * h * kStateDim));
  for (const auto& tr : s.histories)
    for (const auto& v : tr) hist.insert(hist.end(), {v.x, v.y, v.vx, v.vy, v.theta});
  for (const auto& tr : s.local_poses)
    for (const auto& p : tr) poses.insert(poses.end(), {p.x, p.y, p.heading});
  for (const auto& w : s.route) route.insert(route.end(), {w[0], w[1]});
  json rasters = json::array();
  for (const auto& r : s.rasters) rasters.push_back(base64_encode(r.bytes.data(), r.bytes.size()));
  const int rw = s.rasters.empty() ? 0 : s.rasters[0].width, rh = s.rasters.empty() ? 0 : s.rasters[0].height;
  return json{{"n_normal", s.n_normal},
              {"n_ghost", s.n_ghost},
              {"seed", s.seed},
              {"t", s.t},
              {"vehicles", n1},
              {"history", h},
              {"histories", hist},
              {"poses", poses},
              {"route", route},
              {"action", {s.action.st, s.action.ac, s.action.br}},
              {"labels", s.ghost_labels},
              {"drivable", base64_encode(s.drivable.data(), s.drivable.size())},
              {"raster_width", rw},
              {"raster_height", rh},
              {"rasters", rasters}};
}

SceneSample sample_from_json(const json& j) {
  if (!j.is_object()) throw CorruptDatasetError("record is not an object");
  SceneSample s;
  s.n_normal = field<int>(j, "n_normal");
  s.n_ghost = field<int>(j, "n_ghost");
  s.seed = field<std::uint64_t>(j, "seed");
  s.t = field<int>(j, "t");
  const int n1 = field<int>(j, "vehicles"), h = field<int>(j, "history");
  if (n1 < 1 || h < 1) throw CorruptDatasetError("record has empty vehicle or history dimension");
  const auto hist = field<std::vector<float>>(j, "histories");
  const auto poses = field<std::vector<float>>(j, "poses");
  const auto route = field<std::vector<float>>(j, "route");
  const auto action = field<std::vector<float>>(j, "action");
  if (hist.size() != static_cast<std::size_t>(n1 * h * kStateDim) || poses.size() != static_cast<std::size_t>(n1 * h * 3) ||
      route.size() % 2 != 0 || action.size() != 3)
    throw CorruptDatasetError("record array sizes disagree with its dimensions");
  std::size_t q = 0, p = 0;
  for (int i = 0; i < n1; ++i) {
    TrajectoryHistory tr;
    std::vector<LocalPose> lp;
    for (int k = 0; k < h; ++k, q += kStateDim, p += 3) {
      tr.push_back({hist[q], hist[q + 1], hist[q + 2], hist[q + 3], hist[q + 4]});
      lp.push_back({poses[p], poses[p + 1], poses[p + 2]});
    }
    s.histories.push_back(std::move(tr));
    s.local_poses.push_back(std::move(lp));
  }
  for (std::size_t k = 0; k < route.size(); k += 2) s.route.push_back({route[k], route[k + 1]});
  s.action = {action[0], action[1], action[2]};
  s.ghost_labels = field<std::vector<std::uint8_t>>(j, "labels");
  s.drivable = base64_decode(field<std::string>(j, "drivable"));
  const int rw = field<int>(j, "raster_width"), rh = field<int>(j, "raster_height");
  for (const auto& r : field<std::vector<std::string>>(j, "rasters")) {
    BevRaster b{rw, rh, base64_decode(r)};
    if (b.bytes.size() != static_cast<std::size_t>(rw) * rh * 3) throw CorruptDatasetError("raster byte count mismatch");
    s.rasters.push_back(std::move(b));
  }
  if (s.ghost_labels.size() != static_cast<std::size_t>(n1) || (!s.rasters.empty() && s.rasters.size() != s.ghost_labels.size()))
    throw CorruptDatasetError("label or raster count disagrees with vehicle count");
  return s;
}

fs::path manifest_path_for(const fs::path& data_path) {
  fs::path p = data_path;
  p += ".manifest.json";
  return p;
}

std::string file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StagingError("cannot open " + path.string());
  std::uint64_t h = kFnvOffset;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv_update(h, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return hex64(h);
}

void write_manifest(const fs::path& data_path, const DatasetManifest& m) {
  json combos = json::array();
  for (const auto& c : m.combos)
    combos.push_back({{"n_normal", c.n_normal}, {"n_ghost", c.n_ghost}, {"count", c.count}, {"seed", c.seed}});
  const json j{{"format", m.format},   {"records", m.records},         {"bytes", m.bytes},
               {"checksum", m.checksum}, {"config_hash", m.config_hash}, {"combos", combos}};
  const fs::path path = manifest_path_for(data_path);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StagingError("cannot write " + tmp.string());
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

DatasetManifest read_manifest(const fs::path& data_path) {
  const fs::path path = manifest_path_for(data_path);
  std::ifstream in(path);
  if (!in) throw StagingError("missing dataset manifest " + path.string());
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.format = j.at("format").get<std::string>();
    m.records = j.at("records").get<std::uint64_t>();
    m.bytes = j.at("bytes").get<std::uint64_t>();
    m.checksum = j.at("checksum").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& c : j.at("combos"))
      m.combos.push_back({c.at("n_normal").get<int>(), c.at("n_ghost").get<int>(), c.at("count").get<int>(),
                          c.at("seed").get<std::uint64_t>()});
  } catch (const json::exception& e) {
    throw CorruptDatasetError("bad manifest " + path.string() + ": " + e.what());
  }
  if (m.format != DatasetManifest{}.format) throw CorruptDatasetError("unknown dataset format " + m.format);
  return m;
}

DatasetWriter::DatasetWriter(fs::path path) : path_(std::move(path)), tmp_(path_) {
  tmp_ += ".tmp";
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw StagingError("cannot write " + tmp_.string());
}

DatasetWriter::~DatasetWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    fs::remove(tmp_, ec);
  }
}

void DatasetWriter::write(const SceneSample& s) {
  out_ << sample_to_json(s).dump() << '\n';
  ++records_;
}

DatasetManifest DatasetWriter::finish(DatasetManifest manifest) {
  out_.close();
  if (!out_) throw StagingError("failed writing " + tmp_.string());
  fs::rename(tmp_, path_);
  finished_ = true;
  manifest.records = records_;
  manifest.bytes = fs::file_size(path_);
  manifest.checksum = file_checksum(path_);
  write_manifest(path_, manifest);
  return manifest;
}

DatasetReader::DatasetReader(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) throw StagingError("missing dataset " + path_.string());
  manifest_ = read_manifest(path_);
  if (fs::file_size(path_) != manifest_.bytes)
    throw CorruptDatasetError(path_.string() + ": size " + std::to_string(fs::file_size(path_)) + " != manifest " +
                              std::to_string(manifest_.bytes));
  if (file_checksum(path_) != manifest_.checksum) throw CorruptDatasetError(path_.string() + ": checksum mismatch");
  in_.open(path_, std::ios::binary);
}

bool DatasetReader::next(SceneSample& out) {
  if (!std::getline(in_, line_)) {
    if (read_ != manifest_.records)
      throw CorruptDatasetError(path_.string() + ": " + std::to_string(read_) + " records, manifest says " +
                                std::to_string(manifest_.records));
    return false;
  }
  json j;
  try {
    j = json::parse(line_);
  } catch (const json::exception& e) {
    throw CorruptDatasetError(path_.string() + " record " + std::to_string(read_) + ": " + e.what());
  }
  out = sample_from_json(j);
  ++read_;
  return true;
}

std::vector<SceneSample> read_dataset(const fs::path& path) {
  std::vector<SceneSample> out;
  for_each_sample(path, [&](const SceneSample& s) { out.push_back(s); });
  return out;
}

void for_each_sample(const fs::path& path, const std::function<void(const SceneSample&)>& fn) {
  DatasetReader reader(path);
  SceneSample s;
  while (reader.next(s)) fn(s);
}

}  // namespace rlrn::data
