#ifndef FPAD_AETRAIN_HPP
#define FPAD_AETRAIN_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include "fpad/models.hpp"
#include "fpad/preproc.hpp"

namespace fpad {

struct AeTrainConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 32;
  int epochs = 3000;
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = only final
  bool track_validation = false;
};

struct AeEpochRecord {
  int epoch;
  double train_loss;
  std::optional<double> val_bona_error;
  std::optional<double> val_pa_error;
};

struct AeTrainReport {
  std::vector<AeEpochRecord> records;
  std::vector<std::string> checkpoint_paths;

  void write_json(const std::filesystem::path& path) const;
  void write_csv(const std::filesystem::path& path) const;  // training_curve.csv
};

// Per-sample mean squared reconstruction error over pixels; one value per
// column.
template <class S>
nn::Vec<S> reconstruction_error(const nn::Mat<S>& x, const nn::Mat<S>& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols())
    throw ShapeMismatch("reconstruction_error: batch shapes differ");
  return (x - x_hat).array().square().colwise().mean().transpose();
}

// Mean patch-level reconstruction error of a label subset of the val split,
// through the deterministic ROI + tiling pipeline.
double mean_patch_error(Network<float>& ae, const DatasetIndex& index, Label label);

// Fine-tunes the autoencoder on bona fide patches. Deterministic per seed;
// throws NonFiniteLoss (with the iteration) if training diverges.
AeTrainReport finetune_ae(Network<float>& ae, const AeTrainConfig& config, TrainStream& stream,
                          const DatasetIndex* val_index = nullptr,
                          const std::filesystem::path* out_dir = nullptr);

// Central-finite-difference verification of the reconstruction-MSE gradient
// on a small double-precision net. Returns the max relative error.
struct GradientCheckReport {
  double max_relative_error = 0.0;
  int parameters_checked = 0;
  bool pass(double tolerance = 1e-3) const { return max_relative_error <= tolerance; }
};

GradientCheckReport loss_gradient_check(nn::Sequential<double>& ae_small,
                                        const nn::Mat<double>& probe_batch);

}  // namespace fpad

#endif  // FPAD_AETRAIN_HPP
