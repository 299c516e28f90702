#include "fpad/gantrain.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fpad/adam.hpp"
#include "fpad/checkpoint.hpp"
#include "fpad/losses.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace fpad {

void GanTrainReport::write_json(const fs::path& path) const {
  json j;
  j["epochs"] = json::array();
  for (const auto& r : records) {
    json e{{"epoch", r.epoch},
           {"critic_loss", r.critic_loss},
           {"generator_loss", r.generator_loss}};
    if (r.detection)
      e["detection"] = {{"apcer", r.detection->apcer},
                        {"bpcer", r.detection->bpcer},
                        {"acer", r.detection->acer}};
    j["epochs"].push_back(e);
  }
  j["critic_updates"] = critic_updates;
  j["generator_updates"] = generator_updates;
  j["checkpoints"] = checkpoint_paths;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

void GanTrainReport::write_detection_csv(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write csv: " + path.string());
  out << "epoch,apcer,bpcer,acer\n";
  for (const auto& r : records)
    if (r.detection)
      out << r.epoch << "," << r.detection->apcer << "," << r.detection->bpcer << ","
          << r.detection->acer << "\n";
}

namespace {

double critic_image_score(Network<float>& critic, const fs::path& path) {
  PatchBatch patches = eval_patches(io::read_png_gray(path));
  nn::Mat<float> scores = critic.seq.forward(patches, false);
  return static_cast<double>(scores.mean());
}

nn::Mat<float> sample_latent(int batch, RngStream& rng) {
  nn::Mat<float> z(kLatentDim, batch);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<float>(rng.normal());
  return z;
}

void check_scores(const nn::Vec<float>& s, GanLossMode mode, const char* what) {
  if (mode == GanLossMode::dcgan) {
    for (Eigen::Index i = 0; i < s.size(); ++i)
      if (!(s[i] > 0.0f && s[i] < 1.0f))
        throw DomainError(std::string("dcgan ") + what + " score outside (0,1): " +
                          std::to_string(s[i]));
  } else if (!s.allFinite()) {
    throw NonFiniteLoss(std::string("non-finite critic score on ") + what + " batch");
  }
}

// d critic_loss / d scores of one half of the batch (the formulas factor:
// the real-score gradient never depends on the fake scores and vice versa,
// which is what lets the two forward/backward passes interleave).
nn::Mat<float> critic_grad(const nn::Vec<float>& s, GanLossMode mode, bool real) {
  const float n = static_cast<float>(s.size());
  nn::Vec<float> g;
  if (mode == GanLossMode::dcgan)
    g = real ? (-1.0f / (2.0f * n * s.array())).matrix().eval()
             : (1.0f / (2.0f * n * (1.0f - s.array()))).matrix().eval();
  else
    g = nn::Vec<float>::Constant(s.size(), (real ? -1.0f : 1.0f) / n);
  return g.transpose();
}

}  // namespace

Rates epoch_discriminator_eval(Network<float>& critic, const DatasetIndex& index) {
  std::vector<double> train_scores;
  for (const auto& p : index.paths(Label::bona_fide, Split::train))
    train_scores.push_back(critic_image_score(critic, p));
  if (train_scores.size() < 2)
    throw InsufficientData("discriminator calibration needs at least 2 bona fide train images");

  double mean = 0.0;
  for (double s : train_scores) mean += s;
  mean /= static_cast<double>(train_scores.size());
  double var = 0.0;
  for (double s : train_scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(train_scores.size());
  const double threshold = mean - std::sqrt(var);  // critic scores real higher

  std::vector<ScoreRecord> records;
  for (const auto& e : index.entries) {
    if (e.split != Split::val) continue;
    ScoreRecord r;
    r.image_score = critic_image_score(critic, index.root / e.path);
    r.true_label = e.label;
    r.decision = r.image_score > threshold ? Label::bona_fide : Label::pa;
    records.push_back(r);
  }
  if (records.empty()) throw EmptyValSet("val split is empty");
  return compute_rates(records);
}

GanTrainReport train_gan(Network<float>& generator, Network<float>& critic,
                         const GanTrainConfig& config, TrainStream& stream,
                         const DatasetIndex* index, const fs::path* out_dir) {
  if (config.epochs < 1) throw InvalidParams("epochs must be >= 1");
  if (config.critic_steps < 1) throw InvalidParams("critic_steps must be >= 1");
  if (critic.loss_mode != config.loss_mode)
    throw ModeError("critic was built for " + to_string(critic.loss_mode) + ", training requests " +
                    to_string(config.loss_mode));

  const GanLossMode mode = config.loss_mode;
  const float lr = static_cast<float>(config.learning_rate);
  const float b1 = static_cast<float>(config.beta1), b2 = static_cast<float>(config.beta2);
  Adam<float> opt_critic(critic.seq.params(), lr, b1, b2);
  Adam<float> opt_gen(generator.seq.params(), lr, b1, b2);

  RngStream root(config.seed);
  RngStream latent_rng = root.split("latent");
  RngStream gp_rng = root.split("gp");

  GanTrainReport report;
  const int iters = stream.batches_per_epoch();
  const int batch = stream.batch_size();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double c_sum = 0.0, g_sum = 0.0;
    long c_n = 0;
    for (int it = 0; it < iters; ++it) {
      auto diverged = [&](const char* which) {
        return NonFiniteLoss(std::string("non-finite ") + which + " loss at epoch " +
                             std::to_string(epoch) + " iteration " + std::to_string(it));
      };

      for (int step = 0; step < config.critic_steps; ++step) {
        PatchBatch real = stream.next();
        nn::Mat<float> z = sample_latent(batch, latent_rng);
        nn::Mat<float> fake = generator.seq.forward(z, true);

        critic.seq.zero_grads();
        nn::Vec<float> r = critic.seq.forward(real, true).transpose();
        check_scores(r, mode, "real");
        critic.seq.backward(critic_grad(r, mode, true));
        nn::Vec<float> f = critic.seq.forward(fake, true).transpose();
        check_scores(f, mode, "fake");
        critic.seq.backward(critic_grad(f, mode, false));

        double c_loss;
        if (mode == GanLossMode::dcgan) {
          c_loss = dcgan_losses(r, f).d_loss;
        } else {
          c_loss = wgan_losses(r, f).critic_loss;
          if (mode == GanLossMode::wgan_gp)
            c_loss += static_cast<double>(
                gradient_penalty(critic, real, fake, gp_rng, static_cast<float>(config.gp_lambda)));
        }
        if (!std::isfinite(c_loss)) throw diverged("critic");

        opt_critic.step();
        ++report.critic_updates;
        c_sum += c_loss;
        ++c_n;

        if (mode == GanLossMode::wgan_clip) {
          const float c = static_cast<float>(config.clip_value);
          for (auto& p : critic.seq.params())
            if (p.trainable) *p.value = p.value->cwiseMax(-c).cwiseMin(c);
        }
      }

      nn::Mat<float> z = sample_latent(batch, latent_rng);
      generator.seq.zero_grads();
      nn::Mat<float> fake = generator.seq.forward(z, true);
      nn::Vec<float> f = critic.seq.forward(fake, true).transpose();
      check_scores(f, mode, "fake");
      const double g_loss = mode == GanLossMode::dcgan
                                ? static_cast<double>((-f.array().log()).mean())
                                : static_cast<double>(-f.mean());
      if (!std::isfinite(g_loss)) throw diverged("generator");
      const float n = static_cast<float>(f.size());
      nn::Vec<float> g = mode == GanLossMode::dcgan
                             ? (-1.0f / (n * f.array())).matrix().eval()
                             : nn::Vec<float>::Constant(f.size(), -1.0f / n).eval();
      // Critic gradients picked up here are discarded by the zero_grads at
      // the start of the next critic step.
      nn::Mat<float> dfake = critic.seq.backward(g.transpose());
      generator.seq.backward(dfake);
      opt_gen.step();
      ++report.generator_updates;
      g_sum += g_loss;
    }

    GanEpochRecord rec{epoch, c_sum / static_cast<double>(c_n),
                       g_sum / static_cast<double>(iters), std::nullopt};
    if (config.track_detection && index) rec.detection = epoch_discriminator_eval(critic, *index);
    report.records.push_back(rec);

    const bool last = epoch == config.epochs;
    if (out_dir && (last || (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0))) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d", epoch);
      fs::path base = *out_dir / "checkpoints" / name;
      CheckpointMeta gm{to_string(generator.kind), to_string(mode), "transfer",
                        generator.base_channels, config.seed, epoch};
      CheckpointMeta cm{to_string(critic.kind), to_string(mode), "transfer",
                        critic.base_channels, config.seed, epoch};
      save_checkpoint(generator, base / "generator", gm);
      save_checkpoint(critic, base / "critic", cm);
      report.checkpoint_paths.push_back((base / "generator").string());
      report.checkpoint_paths.push_back((base / "critic").string());
    }
  }
  return report;
}

}  // namespace fpad
