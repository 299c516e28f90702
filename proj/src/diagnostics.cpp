#include "fpad/diagnostics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "fpad/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

namespace {

// Paste one flattened [-1,1] patch into an image at (y0, x0), denormalized.
void blit_patch(GrayImage& canvas, const Eigen::Ref<const Eigen::VectorXf>& patch, int y0,
                int x0) {
  for (int y = 0; y < kPatchSize; ++y)
    for (int x = 0; x < kPatchSize; ++x) {
      const float v = 0.5f * (patch[y * kPatchSize + x] + 1.0f);
      canvas(y0 + y, x0 + x) = std::clamp(v, 0.0f, 1.0f);
    }
}

}  // namespace

PatchBatch sample_patches(Network<float>& gen, int n, std::uint64_t seed) {
  if (n < 1) throw InvalidParams("sample count must be >= 1");
  RngStream rng = RngStream(seed).split("sample");
  nn::Mat<float> z(kLatentDim, n);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(rng.normal());
  return gen.seq.forward(z, false);
}

void write_patch_grid(const PatchBatch& patches, const fs::path& path) {
  const int n = static_cast<int>(patches.cols());
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  GrayImage canvas = GrayImage::Ones(rows * kPatchSize, cols * kPatchSize);
  for (int i = 0; i < n; ++i)
    blit_patch(canvas, patches.col(i), (i / cols) * kPatchSize, (i % cols) * kPatchSize);
  io::write_png_gray(path, canvas);
}

void write_interpolation_strip(const InterpolationTrace& trace, const fs::path& path) {
  const int n = static_cast<int>(trace.frames.cols());
  GrayImage canvas = GrayImage::Ones(kPatchSize, n * kPatchSize);
  for (int i = 0; i < n; ++i) blit_patch(canvas, trace.frames.col(i), 0, i * kPatchSize);
  io::write_png_gray(path, canvas);
}

InterpolationTrace latent_interpolation(Network<float>& gen, const nn::Vec<float>& z0,
                                        const nn::Vec<float>& z1, int steps) {
  if (steps < 2) throw InvalidParams("interpolation needs at least 2 steps");
  if (z0.size() != z1.size()) throw ShapeMismatch("latent endpoints differ in dimension");

  nn::Mat<float> z(z0.size(), steps);
  for (int i = 0; i < steps; ++i) {
    const float t = static_cast<float>(i) / static_cast<float>(steps - 1);
    z.col(i) = (1.0f - t) * z0 + t * z1;
  }

  InterpolationTrace trace;
  trace.z0 = z0;
  trace.z1 = z1;
  trace.steps = steps;
  trace.frames = gen.seq.forward(z, false);
  for (int i = 0; i + 1 < steps; ++i) {
    const double d = (trace.frames.col(i + 1) - trace.frames.col(i)).norm();
    trace.distances.push_back(d);
    trace.max_consecutive = std::max(trace.max_consecutive, d);
  }
  trace.endpoint_distance = (trace.frames.col(steps - 1) - trace.frames.col(0)).norm();
  trace.smoothness_bound = 1.1 * 2.0 / (steps - 1) * trace.endpoint_distance;
  trace.smooth = trace.max_consecutive <= trace.smoothness_bound;
  return trace;
}

double mean_pairwise_distance(const PatchBatch& patches) {
  const Eigen::Index n = patches.cols();
  if (n < 2) throw InvalidParams("pairwise distance needs at least 2 patches");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      sum += static_cast<double>((patches.col(i) - patches.col(j)).norm());
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

DiversityScore mode_collapse_score(Network<float>& gen, int n, std::uint64_t seed,
                                   const PatchBatch& real_patches) {
  if (n < 2) throw InvalidParams("diversity score needs at least 2 generated patches");
  if (real_patches.cols() < 2)
    throw InvalidParams("diversity baseline needs at least 2 real patches");

  DiversityScore score;
  score.generated_mean_distance = mean_pairwise_distance(sample_patches(gen, n, seed));
  score.baseline_mean_distance = mean_pairwise_distance(real_patches);
  if (score.baseline_mean_distance == 0.0)
    throw InsufficientData("baseline patches are all identical; diversity ratio undefined");
  score.ratio = score.generated_mean_distance / score.baseline_mean_distance;
  return score;
}

std::string diagnostics_json(const DiversityScore& score, const InterpolationTrace& trace) {
  json j{{"diversity",
          {{"generated_mean_distance", score.generated_mean_distance},
           {"baseline_mean_distance", score.baseline_mean_distance},
           {"ratio", score.ratio},
           {"collapsed", score.collapsed()}}},
         {"interpolation",
          {{"steps", trace.steps},
           {"distances", trace.distances},
           {"endpoint_distance", trace.endpoint_distance},
           {"max_consecutive", trace.max_consecutive},
           {"smoothness_bound", trace.smoothness_bound},
           {"smooth", trace.smooth}}}};
  return j.dump(2);
}

}  // namespace fpad
