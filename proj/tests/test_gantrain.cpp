#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>

#include "fpad/checkpoint.hpp"
#include "fpad/gantrain.hpp"
#include "util.hpp"

using namespace fpad;

namespace {

struct RunResult {
  GanTrainReport report;
  std::vector<float> gen_weights;
  std::vector<float> critic_weights;
};

RunResult run_gan(const DatasetIndex& idx, GanLossMode mode, int epochs, std::uint64_t seed,
                  int batch = 4, const std::filesystem::path* out = nullptr,
                  bool track = false) {
  auto gen = build_generator<float>(8);
  auto critic = build_critic<float>(mode, 8);
  init_weights(gen, seed + 1);
  init_weights(critic, seed + 2);

  GanTrainConfig cfg;
  cfg.loss_mode = mode;
  cfg.batch_size = batch;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.track_detection = track;

  AugmentConfig aug;
  TrainStream stream(idx, aug, batch, seed);
  RunResult r;
  r.report = train_gan(gen, critic, cfg, stream, track ? &idx : nullptr, out);
  for (auto& p : gen.seq.params())
    r.gen_weights.insert(r.gen_weights.end(), p.value->data(), p.value->data() + p.value->size());
  for (auto& p : critic.seq.params())
    r.critic_weights.insert(r.critic_weights.end(), p.value->data(),
                            p.value->data() + p.value->size());
  return r;
}

}  // namespace

TEST_CASE("train_gan: 3:1 update schedule and finite losses") {
  test::TempDir dir("gan");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 8, 2, 96, 4);

  RunResult r = run_gan(idx, GanLossMode::wgan_gp, 2, 10);
  // 8 images, batch 4 -> 2 generator updates per epoch, 3 critic steps each
  CHECK(r.report.generator_updates == 4);
  CHECK(r.report.critic_updates == 12);
  CHECK(r.report.critic_updates == 3 * r.report.generator_updates);
  REQUIRE(r.report.records.size() == 2);
  for (const auto& rec : r.report.records) {
    CHECK(std::isfinite(rec.critic_loss));
    CHECK(std::isfinite(rec.generator_loss));
    CHECK(!rec.detection.has_value());
  }
}

TEST_CASE("train_gan: bitwise deterministic per seed") {
  test::TempDir dir("gandet");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 6);

  RunResult a = run_gan(idx, GanLossMode::wgan_gp, 2, 3);
  RunResult b = run_gan(idx, GanLossMode::wgan_gp, 2, 3);
  REQUIRE(a.report.records.size() == b.report.records.size());
  for (std::size_t i = 0; i < a.report.records.size(); ++i) {
    CHECK(a.report.records[i].critic_loss == b.report.records[i].critic_loss);
    CHECK(a.report.records[i].generator_loss == b.report.records[i].generator_loss);
  }
  CHECK(a.gen_weights == b.gen_weights);
  CHECK(a.critic_weights == b.critic_weights);

  RunResult c = run_gan(idx, GanLossMode::wgan_gp, 2, 4);
  CHECK(c.gen_weights != a.gen_weights);
}

TEST_CASE("train_gan: weight clipping keeps the trainable critic inside the box") {
  test::TempDir dir("ganclip");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 8);
  auto gen = build_generator<float>(8);
  auto critic = build_critic<float>(GanLossMode::wgan_clip, 8);
  init_weights(gen, 6);
  init_weights(critic, 7);
  GanTrainConfig cfg;
  cfg.loss_mode = GanLossMode::wgan_clip;
  cfg.batch_size = 4;
  cfg.epochs = 1;
  cfg.seed = 5;
  AugmentConfig aug;
  TrainStream stream(idx, aug, 4, 5);
  train_gan(gen, critic, cfg, stream);
  // the clip applies to trainable tensors; running stats are untouched
  for (auto& p : critic.seq.params()) {
    if (!p.trainable) continue;
    CHECK(p.value->cwiseAbs().maxCoeff() <= 0.01f + 1e-7f);
  }
}

TEST_CASE("train_gan: dcgan mode trains with in-range scores") {
  test::TempDir dir("gandc");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 9);
  RunResult r = run_gan(idx, GanLossMode::dcgan, 1, 6);
  CHECK(r.report.generator_updates == 1);
  CHECK(std::isfinite(r.report.records[0].critic_loss));
  CHECK(r.report.records[0].critic_loss > 0.0);  // cross-entropy is nonnegative
}

TEST_CASE("train_gan: mode mismatch between critic and config is rejected") {
  test::TempDir dir("ganmode");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 1, 96, 2);
  auto gen = build_generator<float>(8);
  auto critic = build_critic<float>(GanLossMode::dcgan, 8);
  init_weights(gen, 1);
  init_weights(critic, 2);
  GanTrainConfig cfg;
  cfg.loss_mode = GanLossMode::wgan_gp;
  AugmentConfig aug;
  TrainStream stream(idx, aug, 4, 1);
  CHECK_THROWS_AS(train_gan(gen, critic, cfg, stream), ModeError);
}

TEST_CASE("epoch_discriminator_eval: valid rates from the critic detector") {
  test::TempDir dir("ganeval");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 12);
  auto critic = build_critic<float>(GanLossMode::wgan_gp, 8);
  init_weights(critic, 3);
  Rates r = epoch_discriminator_eval(critic, idx);
  CHECK(r.apcer >= 0.0);
  CHECK(r.apcer <= 1.0);
  CHECK(r.bpcer >= 0.0);
  CHECK(r.bpcer <= 1.0);
  CHECK(r.acer == doctest::Approx((r.apcer + r.bpcer) / 2).epsilon(1e-12));

  // deterministic: the critic and data fully determine the rates
  Rates r2 = epoch_discriminator_eval(critic, idx);
  CHECK(r.apcer == r2.apcer);
  CHECK(r.bpcer == r2.bpcer);
}

TEST_CASE("train_gan: per-epoch detection tracking and report artifacts") {
  test::TempDir dir("gantrack");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 2, 96, 14);
  std::filesystem::path out = dir.path / "run";
  RunResult r = run_gan(idx, GanLossMode::wgan_gp, 3, 2, 4, &out, true);

  REQUIRE(r.report.records.size() == 3);
  for (const auto& rec : r.report.records) {
    REQUIRE(rec.detection.has_value());
    CHECK(rec.detection->acer >= 0.0);
    CHECK(rec.detection->acer <= 1.0);
  }

  r.report.write_json(dir.path / "report.json");
  r.report.write_detection_csv(dir.path / "detection_per_epoch.csv");
  std::ifstream f(dir.path / "report.json");
  nlohmann::json j = nlohmann::json::parse(f);
  REQUIRE(j["epochs"].size() == 3);
  CHECK(j["critic_updates"].get<long>() == r.report.critic_updates);
  CHECK(j["epochs"][1]["detection"]["acer"].get<double>() == r.report.records[1].detection->acer);

  std::ifstream csv(dir.path / "detection_per_epoch.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 4);  // header + one row per epoch
}

TEST_CASE("train_gan: final checkpoints are written and loadable") {
  test::TempDir dir("ganckpt");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 1, 96, 16);
  std::filesystem::path out = dir.path / "run";
  RunResult r = run_gan(idx, GanLossMode::wgan_gp, 2, 7, 4, &out);

  REQUIRE(r.report.checkpoint_paths.size() == 2);
  Network<float> gen = load_checkpoint(r.report.checkpoint_paths[0]);
  Network<float> critic = load_checkpoint(r.report.checkpoint_paths[1]);
  CHECK(gen.kind == NetKind::generator);
  CHECK(critic.kind == NetKind::critic);
  CHECK(load_raw_checkpoint(r.report.checkpoint_paths[0]).meta.epoch == 2);

  std::vector<float> saved;
  for (auto& p : gen.seq.params())
    saved.insert(saved.end(), p.value->data(), p.value->data() + p.value->size());
  CHECK(saved == r.gen_weights);
}
