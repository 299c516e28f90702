#ifndef FPAD_CHECKPOINT_HPP
#define FPAD_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fpad/models.hpp"

namespace fpad {

// Checkpoint directory format (the cross-module contract):
//   manifest.json            metadata + ordered tensor list (name, shape, dtype)
//   <tensor_name>.bin        raw little-endian float32, row-major over the
//                            declared shape
struct CheckpointMeta {
  std::string kind = "generator";
  std::string loss_mode = "wgan_gp";
  std::string variant = "transfer";
  int base_channels = 128;
  std::uint64_t seed = 0;
  int epoch = 0;
};

struct RawTensor {
  std::vector<int> shape;
  std::vector<float> values;  // row-major over shape
};

struct RawCheckpoint {
  CheckpointMeta meta;
  std::vector<std::string> order;
  std::map<std::string, RawTensor> tensors;
};

void save_checkpoint(Network<float>& net, const std::filesystem::path& dir,
                     const CheckpointMeta& meta);

RawCheckpoint load_raw_checkpoint(const std::filesystem::path& dir);

// Loads tensors into an already-built net; ManifestMismatch names the first
// offending tensor on any shape or coverage disagreement.
void load_into(Network<float>& net, const RawCheckpoint& ckpt);

// Rebuilds the net from the manifest metadata and loads it.
Network<float> load_checkpoint(const std::filesystem::path& dir);

namespace detail {
// Row-major serialization of one parameter matrix (value layout is
// (dims[0], prod(rest)) column-major).
std::vector<float> to_row_major(const nn::Mat<float>& m);
void from_row_major(const std::vector<float>& v, nn::Mat<float>& m);
}  // namespace detail

}  // namespace fpad

#endif  // FPAD_CHECKPOINT_HPP
