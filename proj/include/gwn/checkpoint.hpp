// Parameter checkpoints: a flat binary of shape-prefixed little-endian
// doubles (u64 rank, u64 dims..., f64 values per tensor) and a JSON manifest
// naming each tensor in file order.
#pragma once

#include <string>

#include "gwn/nn.hpp"

namespace gwn {

// `meta_json` is embedded under "meta" in the manifest (must be a JSON object
// or empty).
void save_checkpoint(const ParamStore& store, const std::string& bin_path,
                     const std::string& manifest_path, const std::string& meta_json = "");

// Loads values into an existing store whose names and shapes must match.
// Returns the manifest's "meta" object as text ("{}" if absent).
std::string load_checkpoint(ParamStore& store, const std::string& bin_path,
                            const std::string& manifest_path);

std::string encode_tensors(const ParamStore& store);
void decode_tensors(ParamStore& store, const std::string& bytes);

}  // namespace gwn
