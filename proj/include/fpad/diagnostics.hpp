#ifndef FPAD_DIAGNOSTICS_HPP
#define FPAD_DIAGNOSTICS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fpad/models.hpp"
#include "fpad/preproc.hpp"

namespace fpad {

// Generated-vs-real diversity: mean pairwise L2 distance among generated
// patches over the same statistic on real patches. Ratio 0 means every
// generated patch is identical (full collapse); ~1 means real-like spread.
struct DiversityScore {
  double generated_mean_distance = 0.0;
  double baseline_mean_distance = 0.0;
  double ratio = 0.0;
  bool collapsed() const { return ratio < 0.1; }
};

// Frames along the straight latent line z(t) = (1-t)z0 + t z1, t = i/(K-1),
// with consecutive pixel-space distances. `smooth` allows 10% slack over
// twice the equal-spacing distance of an exactly linear generator.
struct InterpolationTrace {
  nn::Vec<float> z0, z1;
  int steps = 0;
  PatchBatch frames;                  // one column per frame
  std::vector<double> distances;      // ||frame_{i+1} - frame_i||, K-1 values
  double endpoint_distance = 0.0;     // ||frame_K - frame_1||
  double max_consecutive = 0.0;
  double smoothness_bound = 0.0;      // 1.1 * 2/(K-1) * endpoint_distance
  bool smooth = false;
};

// n patches from z ~ N(0, I_100), deterministic per seed, one per column.
PatchBatch sample_patches(Network<float>& gen, int n, std::uint64_t seed);

// Square-ish tile grid of [-1,1] patches, denormalized; empty cells white.
void write_patch_grid(const PatchBatch& patches, const std::filesystem::path& path);

// Single-row strip of the interpolation frames.
void write_interpolation_strip(const InterpolationTrace& trace,
                               const std::filesystem::path& path);

InterpolationTrace latent_interpolation(Network<float>& gen, const nn::Vec<float>& z0,
                                        const nn::Vec<float>& z1, int steps);

// Requires n >= 2 generated and >= 2 real patches (pairwise statistics).
DiversityScore mode_collapse_score(Network<float>& gen, int n, std::uint64_t seed,
                                   const PatchBatch& real_patches);

std::string diagnostics_json(const DiversityScore& score, const InterpolationTrace& trace);

// Mean pairwise L2 distance between the columns of a patch batch.
double mean_pairwise_distance(const PatchBatch& patches);

}  // namespace fpad

#endif  // FPAD_DIAGNOSTICS_HPP
