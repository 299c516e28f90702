#ifndef FPAD_GANTRAIN_HPP
#define FPAD_GANTRAIN_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include "fpad/evaluate.hpp"
#include "fpad/models.hpp"
#include "fpad/preproc.hpp"

namespace fpad {

struct GanTrainConfig {
  GanLossMode loss_mode = GanLossMode::wgan_gp;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  int batch_size = 64;
  int critic_steps = 3;  // critic updates per generator update
  int epochs = 110;
  double gp_lambda = 10.0;
  double clip_value = 0.01;  // wgan_clip only
  std::uint64_t seed = 0;
  int checkpoint_every = 0;  // 0 = only final
  bool track_detection = false;
};

struct GanEpochRecord {
  int epoch;
  double critic_loss;     // mean per critic update (penalty included in wgan_gp)
  double generator_loss;  // mean per generator update
  std::optional<Rates> detection;
};

struct GanTrainReport {
  std::vector<GanEpochRecord> records;
  long critic_updates = 0;
  long generator_updates = 0;
  std::vector<std::string> checkpoint_paths;

  void write_json(const std::filesystem::path& path) const;
  void write_detection_csv(const std::filesystem::path& path) const;  // detection_per_epoch.csv
};

// PAD rates obtained by using the critic itself as a one-class detector:
// the threshold is mean - std of the bona fide training scores and an image
// is accepted as bona fide iff its mean patch score exceeds it.
Rates epoch_discriminator_eval(Network<float>& critic, const DatasetIndex& index);

// Adversarial pretraining on bona fide patches: critic_steps critic updates
// per generator update, ceil(n/batch) generator updates per epoch.
// Deterministic per seed; NonFiniteLoss (with epoch and iteration) aborts.
GanTrainReport train_gan(Network<float>& generator, Network<float>& critic,
                         const GanTrainConfig& config, TrainStream& stream,
                         const DatasetIndex* index = nullptr,
                         const std::filesystem::path* out_dir = nullptr);

}  // namespace fpad

#endif  // FPAD_GANTRAIN_HPP
