#include "fpad/aetrain.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpad/adam.hpp"
#include "fpad/checkpoint.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

void AeTrainReport::write_json(const fs::path& path) const {
  json j;
  j["epochs"] = json::array();
  for (const auto& r : records) {
    json e{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
    if (r.val_bona_error) e["val_bona_error"] = *r.val_bona_error;
    if (r.val_pa_error) e["val_pa_error"] = *r.val_pa_error;
    j["epochs"].push_back(e);
  }
  j["checkpoints"] = checkpoint_paths;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

void AeTrainReport::write_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv: " + path.string());
  out << "epoch,train_loss,val_bona,val_pa\n";
  for (const auto& r : records) {
    out << r.epoch << "," << r.train_loss << ",";
    if (r.val_bona_error) out << *r.val_bona_error;
    out << ",";
    if (r.val_pa_error) out << *r.val_pa_error;
    out << "\n";
  }
}

namespace {

// Patches in the model's native range ([-1,1] transfer, [0,1] scratch).
nn::Mat<float> to_model_range(const Network<float>& ae, const PatchBatch& patches) {
  if (!ae.unit_range()) return patches;
  return (0.5f * (patches.array() + 1.0f)).matrix();
}

}  // namespace

double mean_patch_error(Network<float>& ae, const DatasetIndex& index, Label label) {
  double sum = 0.0;
  long n = 0;
  for (const auto& path : index.paths(label, Split::val)) {
    nn::Mat<float> patches = to_model_range(ae, eval_patches(io::read_png_gray(path)));
    nn::Mat<float> rec = ae.seq.forward(patches, false);
    nn::Vec<float> err = reconstruction_error(patches, rec);
    sum += static_cast<double>(err.sum());
    n += err.size();
  }
  if (n == 0) throw EmptyValSet("no " + to_string(label) + " images in the val split");
  return sum / static_cast<double>(n);
}

AeTrainReport finetune_ae(Network<float>& ae, const AeTrainConfig& config, TrainStream& stream,
                          const DatasetIndex* val_index, const fs::path* out_dir) {
  if (config.epochs < 1) throw InvalidParams("epochs must be >= 1");
  Adam<float> opt(ae.seq.params(), static_cast<float>(config.learning_rate),
                  static_cast<float>(config.beta1), static_cast<float>(config.beta2));

  AeTrainReport report;
  const int iters = stream.batches_per_epoch();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int it = 0; it < iters; ++it) {
      nn::Mat<float> x = to_model_range(ae, stream.next());
      ae.seq.zero_grads();
      nn::Mat<float> rec = ae.seq.forward(x, true);
      nn::Vec<float> err = reconstruction_error(x, rec);
      const double loss = static_cast<double>(err.mean());
      if (!std::isfinite(loss))
        throw NonFiniteLoss("non-finite reconstruction loss at epoch " + std::to_string(epoch) +
                            " iteration " + std::to_string(it));
      // d mean-over-batch MSE / d rec
      nn::Mat<float> grad = (2.0f / static_cast<float>(rec.size())) * (rec - x);
      ae.seq.backward(grad);
      opt.step();
      epoch_loss += loss;
    }

    AeEpochRecord rec{epoch, epoch_loss / iters, std::nullopt, std::nullopt};
    if (config.track_validation && val_index) {
      rec.val_bona_error = mean_patch_error(ae, *val_index, Label::bona_fide);
      rec.val_pa_error = mean_patch_error(ae, *val_index, Label::pa);
    }
    report.records.push_back(rec);

    const bool last = epoch == config.epochs;
    if (out_dir && (last || (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0))) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
      fs::path dir = *out_dir / "checkpoints" / name / "autoencoder";
      CheckpointMeta meta{to_string(ae.kind), to_string(ae.loss_mode), to_string(ae.variant),
                          ae.base_channels, config.seed, epoch};
      save_checkpoint(ae, dir, meta);
      report.checkpoint_paths.push_back(dir.string());
    }
  }
  return report;
}

GradientCheckReport loss_gradient_check(nn::Sequential<double>& ae_small,
                                        const nn::Mat<double>& probe_batch) {
  auto loss = [&] {
    nn::Mat<double> rec = ae_small.forward(probe_batch, true);
    return (rec - probe_batch).squaredNorm() / static_cast<double>(rec.size());
  };

  ae_small.zero_grads();
  nn::Mat<double> rec = ae_small.forward(probe_batch, true);
  nn::Mat<double> grad = (2.0 / static_cast<double>(rec.size())) * (rec - probe_batch);
  ae_small.backward(grad);

  GradientCheckReport report;
  for (auto& p : ae_small.params()) {
    if (!p.trainable) continue;
    for (Eigen::Index i = 0; i < p.value->size(); ++i) {
      double* w = p.value->data() + i;
      const double orig = *w;
      const double h = 1e-5 * std::max(1.0, std::abs(orig));
      *w = orig + h;
      const double lp = loss();
      *w = orig - h;
      const double lm = loss();
      *w = orig;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = p.grad->data()[i];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      report.max_relative_error = std::max(report.max_relative_error, rel);
      ++report.parameters_checked;
    }
  }
  return report;
}

}  // namespace fpad
