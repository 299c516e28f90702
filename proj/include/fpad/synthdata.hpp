#ifndef FPAD_SYNTHDATA_HPP
#define FPAD_SYNTHDATA_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fpad/image.hpp"

namespace fpad {

enum class Label { bona_fide, pa };
enum class Split { train, val };

std::string to_string(Label l);
std::string to_string(Split s);

struct DatasetEntry {
  std::string path;  // relative to the dataset root
  Label label;
  Split split;
};

// Index over the on-disk layout root/{train,val}/{bona_fide,pa}/<name>.png.
struct DatasetIndex {
  std::filesystem::path root;
  std::vector<DatasetEntry> entries;

  int count(Label l, Split s) const;
  std::vector<std::filesystem::path> paths(Label l, Split s) const;
  DatasetIndex subset(Split s) const;

  void save_manifest() const;  // writes root/index.json
};

DatasetIndex load_manifest(const std::filesystem::path& root);

// Parameters of the synthetic ridge-pattern generator.
struct SynthParams {
  double ridge_frequency = 0.1;        // cycles/pixel, must lie in (0, 0.5)
  double orientation_smoothness = 1.0; // >0; larger = slower orientation drift
  int height = 256;
  int width = 256;
  double noise_level = 0.2;  // [0,1]
  std::uint64_t seed = 0;
};

enum class AttackKindId { ridge_shift, blob_occlusion, contrast_flatten, speckle_noise };

struct AttackKind {
  AttackKindId kind = AttackKindId::contrast_flatten;
  double magnitude = 0.5;  // (0,1]
};

AttackKindId attack_from_string(const std::string& s);
std::string to_string(AttackKindId k);

// Deterministic ridge-like pattern on a near-white background border
// (>= 4 px). Throws InvalidParams if ridge_frequency is outside (0, 0.5).
GrayImage generate_bona_fide(const SynthParams& params);

// Image-space presentation-attack stand-in; same shape, deterministic per
// seed, output in [0,1].
GrayImage apply_attack(const GrayImage& img, const AttackKind& attack, std::uint64_t seed);

// Generates and writes a full corpus under out_dir (train split bona fide
// only), returns the index and writes out_dir/index.json.
DatasetIndex build_corpus(int n_bona_train, int n_bona_val, int n_pa_val,
                          const SynthParams& params, const std::vector<AttackKind>& attacks,
                          std::uint64_t seed, const std::filesystem::path& out_dir);

// Rebuilds an index from the directory layout, decoding every file.
// LayoutError if an expected subdirectory is missing, DecodeError (naming
// the path) on an unreadable image.
DatasetIndex scan_dataset(const std::filesystem::path& root);

}  // namespace fpad

#endif  // FPAD_SYNTHDATA_HPP
