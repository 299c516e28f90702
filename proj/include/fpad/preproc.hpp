#ifndef FPAD_PREPROC_HPP
#define FPAD_PREPROC_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "fpad/image.hpp"
#include "fpad/rng.hpp"
#include "fpad/synthdata.hpp"

namespace fpad {

inline constexpr int kPatchSize = 64;
inline constexpr int kPatchPixels = kPatchSize * kPatchSize;
inline constexpr float kBackgroundThreshold = 0.95f;

// One 64x64 patch, row-major flattened, values in [-1,1].
using Patch = Eigen::VectorXf;
// Batch of patches, one per column.
using PatchBatch = Eigen::MatrixXf;

struct AugmentConfig {
  double flip_probability = 0.5;
  double rotation_min_deg = -20.0;
  double rotation_max_deg = 20.0;
  double brightness_min = 0.75;
  double brightness_max = 1.25;
};

// Minimal bounding crop around pixels darker than the background threshold.
// Throws EmptyImage if nothing is below the threshold.
GrayImage extract_roi(const GrayImage& img, float background_threshold = kBackgroundThreshold);

// Mirror flip / rotation / brightness with draws taken from rng in the
// fixed order (flip coin, angle, factor).
GrayImage augment(const GrayImage& img, const AugmentConfig& cfg, RngStream& rng);

// Center-pads with background (1.0) so both dimensions are >= 64.
GrayImage pad_to_patch(const GrayImage& img);

// [0,1] intensity <-> [-1,1] model range.
inline float normalize_intensity(float x) { return 2.0f * x - 1.0f; }
inline float denormalize_intensity(float x) { return 0.5f * (x + 1.0f); }

// Uniformly placed 64x64 crop, normalized to [-1,1]. TooSmall if either
// dimension is below 64.
Patch random_crop(const GrayImage& img, RngStream& rng);

// Non-overlapping top-left-anchored tiling, row-major; residual borders
// discarded. Image must be at least 64x64 (callers pad first).
PatchBatch tile_patches(const GrayImage& img);

// Full evaluation pipeline for one image: ROI -> pad -> tiles.
PatchBatch eval_patches(const GrayImage& img, float background_threshold = kBackgroundThreshold);

// Infinite shuffled stream over the bona fide train split:
// random_crop(augment(extract_roi(load(path)))). Single worker,
// deterministic per seed. Decoded ROIs are cached in memory.
class TrainStream {
 public:
  TrainStream(const DatasetIndex& index, const AugmentConfig& cfg, int batch_size,
              std::uint64_t seed);

  // Next batch, shape (4096, batch_size). If paths is non-null it receives
  // the source path of each column (test instrumentation).
  PatchBatch next(std::vector<std::string>* paths = nullptr);

  int batch_size() const { return batch_size_; }
  int num_images() const { return static_cast<int>(items_.size()); }
  // Generator steps per epoch at this stream's batch size: ceil(n/batch).
  int batches_per_epoch() const { return (num_images() + batch_size_ - 1) / batch_size_; }

 private:
  const GrayImage& roi(std::size_t item);

  struct Item {
    std::string path;
    bool loaded = false;
    GrayImage roi;
  };

  std::vector<Item> items_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  AugmentConfig cfg_;
  int batch_size_;
  RngStream shuffle_rng_;
  RngStream sample_rng_;
};

}  // namespace fpad

#endif  // FPAD_PREPROC_HPP
