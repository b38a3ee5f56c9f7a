#include "gwn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gwn/pmf.hpp"
#include "json.hpp"

namespace gwn {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw ValidationError("checkpoint: truncated tensor data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) throw std::runtime_error("short write to " + path);
}

}  // namespace

std::string encode_tensors(const ParamStore& store) {
  std::string out;
  for (const Parameter& p : store.params()) {
    put_u64(out, p.value.rank());
    for (std::size_t d : p.value.shape()) put_u64(out, d);
    for (double v : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void decode_tensors(ParamStore& store, const std::string& bytes) {
  std::size_t pos = 0;
  for (Parameter& p : store.params()) {
    const std::uint64_t rank = get_u64(bytes, pos);
    if (rank != p.value.rank()) {
      throw ValidationError("checkpoint: rank mismatch for '" + p.name + "'");
    }
    for (std::size_t d = 0; d < rank; ++d)
      if (get_u64(bytes, pos) != p.value.shape()[d]) {
        throw ValidationError("checkpoint: shape mismatch for '" + p.name + "'");
      }
    for (double& v : p.value.data()) v = std::bit_cast<double>(get_u64(bytes, pos));
  }
  if (pos != bytes.size()) throw ValidationError("checkpoint: trailing bytes after last tensor");
}

void save_checkpoint(const ParamStore& store, const std::string& bin_path,
                     const std::string& manifest_path, const std::string& meta_json) {
  nlohmann::ordered_json m;
  m["format"] = "gwn-params-1";
  m["tensors"] = nlohmann::json::array();
  for (const Parameter& p : store.params())
    m["tensors"].push_back({{"name", p.name}, {"shape", p.value.shape()}});
  m["meta"] = meta_json.empty() ? nlohmann::ordered_json::object()
                                : nlohmann::ordered_json::parse(meta_json);
  write_file(bin_path, encode_tensors(store));
  write_file(manifest_path, m.dump(2) + "\n");
}

std::string load_checkpoint(ParamStore& store, const std::string& bin_path,
                            const std::string& manifest_path) {
  const auto m = nlohmann::json::parse(read_file(manifest_path));
  const auto& tensors = m.at("tensors");
  if (tensors.size() != store.params().size()) {
    throw ValidationError("checkpoint: manifest lists " + std::to_string(tensors.size()) +
                          " tensors, model has " + std::to_string(store.params().size()));
  }
  std::size_t i = 0;
  for (const Parameter& p : store.params()) {
    if (tensors[i].at("name").get<std::string>() != p.name) {
      throw ValidationError("checkpoint: expected tensor '" + p.name + "', manifest has '" +
                            tensors[i].at("name").get<std::string>() + "'");
    }
    ++i;
  }
  decode_tensors(store, read_file(bin_path));
  return m.contains("meta") ? m["meta"].dump() : "{}";
}

}  // namespace gwn
