#include "tricortex/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace tricortex {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'X', 'C', 'K', 'P', 'T', '1'};

nlohmann::json meta_to_json(const CheckpointMeta& meta) {
  nlohmann::json j;
  j["format_version"] = meta.format_version;
  j["seed"] = meta.seed;
  j["epoch"] = meta.epoch;
  j["config"] = meta.config_text;
  j["metrics"] = meta.metrics;
  return j;
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta meta;
  meta.format_version = j.at("format_version").get<int64_t>();
  meta.seed = j.at("seed").get<uint64_t>();
  meta.epoch = j.at("epoch").get<int64_t>();
  meta.config_text = j.at("config").get<std::string>();
  if (j.contains("metrics")) {
    meta.metrics = j.at("metrics").get<std::map<std::string, double>>();
  }
  return meta;
}

nlohmann::json read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError(path + ": not a checkpoint file");
  }
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in) throw CheckpointError(path + ": truncated header");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError(path + ": truncated header body");
  return nlohmann::json::parse(text);
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamRegistry& params) {
  nlohmann::json j = meta_to_json(meta);
  nlohmann::json index = nlohmann::json::array();
  int64_t offset = 0;
  for (const auto& [name, t] : params.items()) {
    nlohmann::json e;
    e["name"] = name;
    e["offset"] = offset;
    e["shape"] = t.shape();
    index.push_back(e);
    offset += t.numel();
  }
  j["params"] = index;
  std::string header = j.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path);
  out.write(kMagic, 8);
  uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [_, t] : params.items()) {
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.numel() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for " + path);
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  return meta_from_json(read_header(in, path));
}

CheckpointMeta load_checkpoint(const std::string& path, ParamRegistry& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  nlohmann::json j = read_header(in, path);
  CheckpointMeta meta = meta_from_json(j);
  std::streampos blob_start = in.tellg();

  const auto& index = j.at("params");
  if (index.size() != params.items().size()) {
    throw CheckpointError(path + ": holds " + std::to_string(index.size()) +
                          " parameters, model has " +
                          std::to_string(params.items().size()));
  }
  for (const auto& e : index) {
    std::string name = e.at("name").get<std::string>();
    Shape shape = e.at("shape").get<Shape>();
    int64_t offset = e.at("offset").get<int64_t>();
    Tensor t = params.find(name);
    if (t.shape() != shape) {
      throw CheckpointError(path + ": parameter " + name + " has shape " +
                            shape_str(shape) + ", model expects " +
                            shape_str(t.shape()));
    }
    in.seekg(blob_start + static_cast<std::streamoff>(offset * sizeof(double)));
    in.read(reinterpret_cast<char*>(t.raw_values().data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw CheckpointError(path + ": truncated blob at " + name);
  }
  return meta;
}

}  // namespace tricortex
