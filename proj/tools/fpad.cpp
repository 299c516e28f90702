// fpad: one-class fingerprint presentation-attack detection toolkit.
//
// Subcommands cover the full workflow: synthetic corpus generation, GAN
// pretraining, weight transplantation, autoencoder fine-tuning, threshold
// calibration, evaluation, and diagnostics. Configuration is JSON with flat
// dotted keys; command-line flags override file values override defaults.
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "fpad/aetrain.hpp"
#include "fpad/checkpoint.hpp"
#include "fpad/diagnostics.hpp"
#include "fpad/evaluate.hpp"
#include "fpad/gantrain.hpp"
#include "fpad/models.hpp"
#include "fpad/preproc.hpp"
#include "fpad/synthdata.hpp"
#include "fpad/transfer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace fpad;

namespace {

// ---- dotted-key config ---------------------------------------------------

void assign(const json& v, double& out, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  out = v.get<double>();
}
void assign(const json& v, int& out, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  out = v.get<int>();
}
void assign(const json& v, bool& out, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  out = v.get<bool>();
}
void assign(const json& v, std::string& out, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  out = v.get<std::string>();
}
void assign(const json& v, std::uint64_t& out, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
  out = v.get<std::uint64_t>();
}

class ConfigBook {
 public:
  template <class T>
  void bind(const std::string& owner, const std::string& key, T& var) {
    entries_.push_back({key, owner, [&var, key](const json& v) { assign(v, var, key); },
                        [&var] { return json(var); }});
  }

  void apply(const json& cfg) const {
    if (!cfg.is_object()) throw ConfigError("config file must hold a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      bool known = false;
      for (const auto& e : entries_)
        if (e.key == it.key()) {
          e.set(it.value());
          known = true;
        }
      if (!known) throw ConfigError("unknown config key: " + it.key());
    }
  }

  json snapshot(const std::string& owner) const {
    json j = json::object();
    for (const auto& e : entries_)
      if (e.owner == owner) j[e.key] = e.get();
    return j;
  }

 private:
  struct Entry {
    std::string key, owner;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };
  std::vector<Entry> entries_;
};

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

// The config file must be applied before CLI11 writes flag values, so the
// --config flag is resolved by a pre-scan of argv.
std::string find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

// ---- shared helpers ------------------------------------------------------

std::uint64_t subseed(std::uint64_t seed, std::string_view label) {
  return RngStream(seed).split(label).next_u64();
}

DatasetIndex load_data(const std::string& root) {
  if (root.empty()) throw ConfigError("data_root is required");
  const fs::path p(root);
  if (!fs::exists(p)) throw LayoutError("data root does not exist: " + root);
  if (fs::exists(p / "index.json")) return load_manifest(p);
  return scan_dataset(p);
}

fs::path need_out(const std::string& out) {
  if (out.empty()) throw ConfigError("out_dir is required");
  fs::create_directories(out);
  return out;
}

Network<float> load_net(const std::string& dir, NetKind expect, const char* what) {
  if (dir.empty()) throw ConfigError(std::string(what) + " checkpoint is required");
  Network<float> net = load_checkpoint(dir);
  if (net.kind != expect)
    throw ModeError("checkpoint at " + dir + " holds a " + to_string(net.kind) + ", expected " +
                    to_string(expect));
  return net;
}

void merge_json_file(const fs::path& path, const json& section) {
  json j = json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error&) {
      j = json::object();
    }
  }
  j.update(section);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

std::vector<AttackKind> parse_attacks(const std::string& list, double magnitude) {
  std::vector<AttackKind> attacks;
  std::string token;
  std::stringstream ss(list);
  while (std::getline(ss, token, ',')) {
    const auto b = token.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = token.find_last_not_of(" \t");
    attacks.push_back({attack_from_string(token.substr(b, e - b + 1)), magnitude});
  }
  return attacks;
}

// ---- option structs ------------------------------------------------------

struct SynthOpts {
  std::string out;
  int n_train = 512, n_val_bona = 64, n_val_pa = 64;
  double frequency = 0.1, smoothness = 1.0, noise = 0.2, magnitude = 0.5;
  int height = 256, width = 256;
  std::string attacks = "ridge_shift,blob_occlusion,contrast_flatten,speckle_noise";
  std::uint64_t seed = 0;
  bool print = false;
};

struct GanOpts {
  std::string data, out, loss_mode = "wgan_gp";
  double lr = 2e-4, beta1 = 0.5, beta2 = 0.9, gp_lambda = 10.0, clip = 0.01;
  int batch = 64, critic_steps = 3, epochs = 110, checkpoint_every = 0, base_channels = 128;
  AugmentConfig aug;
  std::uint64_t seed = 0;
  bool print = false;
};

struct AeOpts {
  std::string data, out, from_gan;
  bool from_scratch = false;
  double lr = 1e-5, beta1 = 0.5, beta2 = 0.999;
  int batch = 32, epochs = 3000, checkpoint_every = 0, base_channels = 128;
  bool track_validation = false;
  AugmentConfig aug;
  std::uint64_t seed = 0;
  bool print = false;
};

struct SampleOpts {
  std::string generator, out, data;
  int n = 4, diversity_n = 16;
  std::uint64_t seed = 0;
  bool print = false;
};

struct InterpOpts {
  std::string generator, out;
  int steps = 8;
  std::uint64_t seed = 0;
  bool print = false;
};

struct TransferOpts {
  std::string critic, generator, out;
  std::uint64_t seed = 0;
  bool print = false;
};

struct EvalOpts {
  std::string autoencoder, data, out, threshold_file;
  bool print = false;
};

struct VerifyOpts {
  std::string critic, generator, autoencoder, out;
  std::uint64_t seed = 0;
  bool print = false;
};

// ---- runners ---------------------------------------------------------------

void run_synth(const SynthOpts& o) {
  const fs::path out = need_out(o.out);
  SynthParams params;
  params.ridge_frequency = o.frequency;
  params.orientation_smoothness = o.smoothness;
  params.height = o.height;
  params.width = o.width;
  params.noise_level = o.noise;
  params.seed = o.seed;
  DatasetIndex index = build_corpus(o.n_train, o.n_val_bona, o.n_val_pa, params,
                                    parse_attacks(o.attacks, o.magnitude), o.seed, out);
  std::cout << "wrote " << index.entries.size() << " images under " << out.string() << "\n";
}

GanTrainConfig gan_config(const GanOpts& o) {
  GanTrainConfig cfg;
  cfg.loss_mode = loss_mode_from_string(o.loss_mode);
  cfg.learning_rate = o.lr;
  cfg.beta1 = o.beta1;
  cfg.beta2 = o.beta2;
  cfg.batch_size = o.batch;
  cfg.critic_steps = o.critic_steps;
  cfg.epochs = o.epochs;
  cfg.gp_lambda = o.gp_lambda;
  cfg.clip_value = o.clip;
  cfg.seed = o.seed;
  cfg.checkpoint_every = o.checkpoint_every;
  return cfg;
}

void run_train_gan(const GanOpts& o, bool track) {
  GanTrainConfig cfg = gan_config(o);
  cfg.track_detection = track;
  DatasetIndex index = load_data(o.data);
  const fs::path out = need_out(o.out);
  TrainStream stream(index, o.aug, cfg.batch_size, subseed(o.seed, "data"));

  Network<float> generator = build_generator<float>(o.base_channels);
  Network<float> critic = build_critic<float>(cfg.loss_mode, o.base_channels);
  init_weights(generator, subseed(o.seed, "init_generator"));
  init_weights(critic, subseed(o.seed, "init_critic"));

  GanTrainReport report = train_gan(generator, critic, cfg, stream,
                                    track ? &index : nullptr, &out);
  report.write_json(out / "report.json");
  if (track) report.write_detection_csv(out / "detection_per_epoch.csv");

  const auto& last = report.records.back();
  std::cout << "epoch " << last.epoch << ": critic_loss " << last.critic_loss
            << ", generator_loss " << last.generator_loss << "\n";
}

void run_train_ae(const AeOpts& o) {
  if (o.from_scratch == !o.from_gan.empty())
    throw ConfigError("choose exactly one of --from-scratch and --from-gan");
  DatasetIndex index = load_data(o.data);
  const fs::path out = need_out(o.out);

  Network<float> ae;
  if (o.from_scratch) {
    ae = build_autoencoder<float>(AeVariant::scratch, GanLossMode::wgan_gp, o.base_channels);
    init_weights(ae, subseed(o.seed, "init"));
  } else {
    const fs::path gan(o.from_gan);
    if (fs::exists(gan / "manifest.json")) {
      // already a transplanted autoencoder checkpoint
      ae = load_net(o.from_gan, NetKind::autoencoder, "autoencoder");
    } else {
      if (!fs::exists(gan / "critic") || !fs::exists(gan / "generator"))
        throw LayoutError("--from-gan dir lacks critic/ and generator/: " + o.from_gan);
      RawCheckpoint critic = load_raw_checkpoint(gan / "critic");
      RawCheckpoint generator = load_raw_checkpoint(gan / "generator");
      ae = build_autoencoder<float>(AeVariant::transfer,
                                    loss_mode_from_string(critic.meta.loss_mode),
                                    critic.meta.base_channels);
      transplant(critic, generator, ae, subseed(o.seed, "bridge"));
    }
  }

  AeTrainConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.beta1 = o.beta1;
  cfg.beta2 = o.beta2;
  cfg.batch_size = o.batch;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.checkpoint_every = o.checkpoint_every;
  cfg.track_validation = o.track_validation;

  TrainStream stream(index, o.aug, cfg.batch_size, subseed(o.seed, "data"));
  AeTrainReport report = finetune_ae(ae, cfg, stream,
                                     cfg.track_validation ? &index : nullptr, &out);
  report.write_json(out / "report.json");
  report.write_csv(out / "training_curve.csv");
  std::cout << "epoch " << report.records.back().epoch << ": train_loss "
            << report.records.back().train_loss << "\n";
}

void run_sample(const SampleOpts& o) {
  Network<float> gen = load_net(o.generator, NetKind::generator, "generator");
  const fs::path out = need_out(o.out);
  PatchBatch patches = sample_patches(gen, o.n, o.seed);
  write_patch_grid(patches, out / "samples_grid.png");
  std::cout << "wrote " << (out / "samples_grid.png").string() << "\n";

  if (!o.data.empty()) {
    DatasetIndex index = load_data(o.data);
    std::vector<Patch> real;
    for (const auto& p : index.paths(Label::bona_fide, Split::train)) {
      PatchBatch tiles = eval_patches(io::read_png_gray(p));
      for (Eigen::Index c = 0; c < tiles.cols() && (int)real.size() < o.diversity_n; ++c)
        real.push_back(tiles.col(c));
      if ((int)real.size() >= o.diversity_n) break;
    }
    PatchBatch real_batch(kPatchPixels, real.size());
    for (std::size_t i = 0; i < real.size(); ++i) real_batch.col(i) = real[i];
    DiversityScore score = mode_collapse_score(gen, o.diversity_n, o.seed, real_batch);
    merge_json_file(out / "diagnostics.json",
                    {{"diversity",
                      {{"generated_mean_distance", score.generated_mean_distance},
                       {"baseline_mean_distance", score.baseline_mean_distance},
                       {"ratio", score.ratio},
                       {"collapsed", score.collapsed()}}}});
    std::cout << "diversity ratio " << score.ratio << "\n";
  }
}

void run_interpolate(const InterpOpts& o) {
  Network<float> gen = load_net(o.generator, NetKind::generator, "generator");
  const fs::path out = need_out(o.out);
  RngStream rng = RngStream(o.seed).split("interp");
  nn::Vec<float> z0(kLatentDim), z1(kLatentDim);
  for (int i = 0; i < kLatentDim; ++i) z0[i] = static_cast<float>(rng.normal());
  for (int i = 0; i < kLatentDim; ++i) z1[i] = static_cast<float>(rng.normal());
  InterpolationTrace trace = latent_interpolation(gen, z0, z1, o.steps);
  write_interpolation_strip(trace, out / "interpolation_strip.png");
  merge_json_file(out / "diagnostics.json",
                  {{"interpolation",
                    {{"steps", trace.steps},
                     {"distances", trace.distances},
                     {"endpoint_distance", trace.endpoint_distance},
                     {"max_consecutive", trace.max_consecutive},
                     {"smoothness_bound", trace.smoothness_bound},
                     {"smooth", trace.smooth}}}});
  std::cout << "smooth: " << (trace.smooth ? "yes" : "no") << " (max step "
            << trace.max_consecutive << ", bound " << trace.smoothness_bound << ")\n";
}

void run_transfer(const TransferOpts& o) {
  if (o.critic.empty() || o.generator.empty())
    throw ConfigError("--critic and --generator checkpoints are required");
  const fs::path out = need_out(o.out);
  RawCheckpoint critic_ckpt = load_raw_checkpoint(o.critic);
  RawCheckpoint gen_ckpt = load_raw_checkpoint(o.generator);
  if (critic_ckpt.meta.kind != "critic")
    throw ModeError("checkpoint at " + o.critic + " is not a critic");
  if (gen_ckpt.meta.kind != "generator")
    throw ModeError("checkpoint at " + o.generator + " is not a generator");
  if (critic_ckpt.meta.base_channels != gen_ckpt.meta.base_channels)
    throw ManifestMismatch("critic and generator disagree on base_channels");

  Network<float> ae =
      build_autoencoder<float>(AeVariant::transfer,
                               loss_mode_from_string(critic_ckpt.meta.loss_mode),
                               critic_ckpt.meta.base_channels);
  transplant(critic_ckpt, gen_ckpt, ae, subseed(o.seed, "bridge"));

  Network<float> critic = load_checkpoint(o.critic);
  Network<float> generator = load_checkpoint(o.generator);
  VerificationReport rep = verify_transplant(critic, generator, ae, subseed(o.seed, "probe"));

  CheckpointMeta meta{"autoencoder", critic_ckpt.meta.loss_mode, "transfer",
                      ae.base_channels, o.seed, 0};
  save_checkpoint(ae, out / "autoencoder", meta);
  std::ofstream vf(out / "verification.json");
  vf << rep.to_json() << "\n";
  std::cout << "encoder dev " << rep.encoder_max_dev << ", decoder dev " << rep.decoder_max_dev
            << "\n";
  if (!rep.pass) throw NumericError("transplant verification failed");
}

ThresholdModel calibrate_to_file(Network<float>& ae, const DatasetIndex& index,
                                 const fs::path& out) {
  std::vector<double> scores = training_scores(ae, index);
  ThresholdModel model = calibrate_threshold(scores);
  merge_json_file(out / "threshold.json", {{"mean", model.mean},
                                           {"std_dev", model.std_dev},
                                           {"threshold", model.threshold},
                                           {"n_scores", scores.size()}});
  return model;
}

void run_calibrate(const EvalOpts& o) {
  Network<float> ae = load_net(o.autoencoder, NetKind::autoencoder, "autoencoder");
  DatasetIndex index = load_data(o.data);
  const fs::path out = need_out(o.out);
  ThresholdModel model = calibrate_to_file(ae, index, out);
  std::cout << "threshold " << model.threshold << " (mean " << model.mean << ", std "
            << model.std_dev << ")\n";
}

void run_evaluate(const EvalOpts& o) {
  Network<float> ae = load_net(o.autoencoder, NetKind::autoencoder, "autoencoder");
  DatasetIndex index = load_data(o.data);
  const fs::path out = need_out(o.out);

  ThresholdModel model;
  if (!o.threshold_file.empty()) {
    std::ifstream in(o.threshold_file);
    if (!in) throw IoError("cannot read threshold file: " + o.threshold_file);
    json j = json::parse(in);
    model.mean = j.at("mean").get<double>();
    model.std_dev = j.at("std_dev").get<double>();
    model.threshold = j.at("threshold").get<double>();
  } else {
    model = calibrate_to_file(ae, index, out);
  }

  EvalReport report = evaluate_model(ae, model, index, &out);
  std::cout << "apcer " << report.rates.apcer << ", bpcer " << report.rates.bpcer << ", acer "
            << report.rates.acer << "\n";
}

void run_det(const EvalOpts& o) {
  Network<float> ae = load_net(o.autoencoder, NetKind::autoencoder, "autoencoder");
  DatasetIndex index = load_data(o.data);
  const fs::path out = need_out(o.out);

  EvalReport report;
  for (const auto& e : index.entries) {
    if (e.split != Split::val) continue;
    const fs::path p = index.root / e.path;
    ScoreRecord rec = score_image(ae, io::read_png_gray(p), p.string());
    rec.true_label = e.label;
    report.records.push_back(std::move(rec));
  }
  if (report.records.empty()) throw EmptyValSet("val split is empty");
  report.det_points = det_curve(report.records);
  report.write_det_csv(out / "det.csv");
  std::cout << "wrote " << report.det_points.size() << " DET points\n";
}

void run_verify(const VerifyOpts& o) {
  json result;

  {  // finite-difference check of the reconstruction-MSE gradient
    nn::Sequential<double> small;
    small.emplace<nn::Conv2d<double>>("conv", nn::ConvGeom::make(1, 8, 8, 2, 3, 2, 1));
    small.emplace<nn::LeakyReLU<double>>("lrelu", 0.2);
    small.emplace<nn::ConvTranspose2d<double>>("tconv", 2, 4, 4, 1, 3, 2, 1, 1);
    small.emplace<nn::Tanh<double>>("tanh");
    RngStream rng(subseed(o.seed, "verify"));
    for (auto& p : small.params())
      for (Eigen::Index i = 0; i < p.value->size(); ++i)
        p.value->data()[i] = 0.2 * rng.normal();
    nn::Mat<double> probe(64, 3);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.uniform(-1.0, 1.0);
    GradientCheckReport gr = loss_gradient_check(small, probe);
    result["gradient_check"] = {{"max_relative_error", gr.max_relative_error},
                                {"parameters_checked", gr.parameters_checked},
                                {"pass", gr.pass()}};
  }

  VerificationReport tr;
  if (!o.critic.empty() || !o.generator.empty() || !o.autoencoder.empty()) {
    Network<float> critic = load_net(o.critic, NetKind::critic, "critic");
    Network<float> generator = load_net(o.generator, NetKind::generator, "generator");
    Network<float> ae = load_net(o.autoencoder, NetKind::autoencoder, "autoencoder");
    tr = verify_transplant(critic, generator, ae, subseed(o.seed, "probe"));
  } else {
    // self-contained round trip at a small width
    const int base = 8;
    Network<float> critic = build_critic<float>(GanLossMode::wgan_gp, base);
    Network<float> generator = build_generator<float>(base);
    init_weights(critic, subseed(o.seed, "critic"));
    init_weights(generator, subseed(o.seed, "generator"));
    const fs::path tmp =
        (o.out.empty() ? fs::temp_directory_path() : fs::path(o.out)) / "verify_ckpt";
    CheckpointMeta cm{"critic", "wgan_gp", "transfer", base, o.seed, 0};
    CheckpointMeta gm{"generator", "wgan_gp", "transfer", base, o.seed, 0};
    save_checkpoint(critic, tmp / "critic", cm);
    save_checkpoint(generator, tmp / "generator", gm);
    Network<float> ae = build_autoencoder<float>(AeVariant::transfer, GanLossMode::wgan_gp, base);
    transplant(load_raw_checkpoint(tmp / "critic"), load_raw_checkpoint(tmp / "generator"), ae,
               subseed(o.seed, "bridge"));
    tr = verify_transplant(critic, generator, ae, subseed(o.seed, "probe"));
  }
  result["transplant"] = json::parse(tr.to_json());

  std::cout << result.dump(2) << "\n";
  if (!o.out.empty()) {
    const fs::path out = need_out(o.out);
    std::ofstream f(out / "verification.json");
    f << result.dump(2) << "\n";
  }
  if (!result["gradient_check"]["pass"].get<bool>())
    throw NumericError("gradient check failed");
  if (!tr.pass) throw NumericError("transplant verification failed");
}

void bind_augment(ConfigBook& book, const std::string& owner, AugmentConfig& aug) {
  book.bind(owner, "augment.flip_probability", aug.flip_probability);
  book.bind(owner, "augment.rotation_min_deg", aug.rotation_min_deg);
  book.bind(owner, "augment.rotation_max_deg", aug.rotation_max_deg);
  book.bind(owner, "augment.brightness_min", aug.brightness_min);
  book.bind(owner, "augment.brightness_max", aug.brightness_max);
}

void add_common_flags(CLI::App* cmd, std::string& config_dummy, bool& print) {
  cmd->add_option("--config", config_dummy, "JSON config file with flat dotted keys");
  cmd->add_flag("--print-config", print, "print the effective configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-class fingerprint presentation-attack detection toolkit"};
  app.require_subcommand(1);
  ConfigBook book;
  std::string config_dummy;

  SynthOpts synth;
  GanOpts gan, track;
  AeOpts aeo;
  SampleOpts smp;
  InterpOpts itp;
  TransferOpts tro;
  EvalOpts cal, evl, deto;
  VerifyOpts ver;

  {  // synth-data
    auto* c = app.add_subcommand("synth-data", "generate a synthetic fingerprint corpus");
    c->add_option("--out", synth.out, "output dataset root");
    c->add_option("--train", synth.n_train, "bona fide training images");
    c->add_option("--val-bona", synth.n_val_bona, "bona fide validation images");
    c->add_option("--val-pa", synth.n_val_pa, "presentation-attack validation images");
    c->add_option("--frequency", synth.frequency, "ridge frequency in cycles/pixel");
    c->add_option("--orientation-smoothness", synth.smoothness, "orientation drift smoothness");
    c->add_option("--height", synth.height, "image height");
    c->add_option("--width", synth.width, "image width");
    c->add_option("--noise", synth.noise, "noise level in [0,1]");
    c->add_option("--attacks", synth.attacks, "comma-separated attack kinds");
    c->add_option("--magnitude", synth.magnitude, "attack magnitude in (0,1]");
    c->add_option("--seed", synth.seed, "root seed");
    add_common_flags(c, config_dummy, synth.print);
    book.bind("synth-data", "out_dir", synth.out);
    book.bind("synth-data", "seed", synth.seed);
    book.bind("synth-data", "synth.n_train", synth.n_train);
    book.bind("synth-data", "synth.n_val_bona", synth.n_val_bona);
    book.bind("synth-data", "synth.n_val_pa", synth.n_val_pa);
    book.bind("synth-data", "synth.ridge_frequency", synth.frequency);
    book.bind("synth-data", "synth.orientation_smoothness", synth.smoothness);
    book.bind("synth-data", "synth.height", synth.height);
    book.bind("synth-data", "synth.width", synth.width);
    book.bind("synth-data", "synth.noise_level", synth.noise);
    book.bind("synth-data", "synth.attacks", synth.attacks);
    book.bind("synth-data", "synth.magnitude", synth.magnitude);
    c->callback([&] {
      if (synth.print) { std::cout << book.snapshot("synth-data").dump(2) << "\n"; return; }
      run_synth(synth);
    });
  }

  auto add_gan = [&](const char* name, const char* desc, GanOpts& o, bool detection) {
    auto* c = app.add_subcommand(name, desc);
    c->add_option("--data", o.data, "dataset root");
    c->add_option("--out", o.out, "output directory");
    c->add_option("--loss", o.loss_mode, "loss mode: dcgan | wgan_gp | wgan_clip");
    c->add_option("--lr", o.lr, "learning rate");
    c->add_option("--beta1", o.beta1, "adam beta1");
    c->add_option("--beta2", o.beta2, "adam beta2");
    c->add_option("--batch", o.batch, "mini-batch size");
    c->add_option("--critic-steps", o.critic_steps, "critic updates per generator update");
    c->add_option("--epochs", o.epochs, "training epochs");
    c->add_option("--gp-lambda", o.gp_lambda, "gradient-penalty weight (wgan_gp)");
    c->add_option("--clip", o.clip, "weight clip (wgan_clip)");
    c->add_option("--checkpoint-every", o.checkpoint_every, "checkpoint period in epochs");
    c->add_option("--base-channels", o.base_channels, "first conv width (canonical: 128)");
    c->add_option("--seed", o.seed, "root seed");
    add_common_flags(c, config_dummy, o.print);
    const std::string owner = name;
    book.bind(owner, "data_root", o.data);
    book.bind(owner, "out_dir", o.out);
    book.bind(owner, "seed", o.seed);
    book.bind(owner, "gan.loss_mode", o.loss_mode);
    book.bind(owner, "gan.learning_rate", o.lr);
    book.bind(owner, "gan.beta1", o.beta1);
    book.bind(owner, "gan.beta2", o.beta2);
    book.bind(owner, "gan.batch_size", o.batch);
    book.bind(owner, "gan.critic_steps", o.critic_steps);
    book.bind(owner, "gan.epochs", o.epochs);
    book.bind(owner, "gan.gp_lambda", o.gp_lambda);
    book.bind(owner, "gan.clip_value", o.clip);
    book.bind(owner, "gan.checkpoint_every", o.checkpoint_every);
    book.bind(owner, "gan.base_channels", o.base_channels);
    bind_augment(book, owner, o.aug);
    c->callback([&, owner, detection] {
      if (o.print) { std::cout << book.snapshot(owner).dump(2) << "\n"; return; }
      run_train_gan(o, detection);
    });
  };
  add_gan("train-gan", "adversarially pretrain the generator and critic", gan, false);
  add_gan("track-gan-detection",
          "train the GAN while recording per-epoch critic detection rates", track, true);

  {  // train-ae
    auto* c = app.add_subcommand("train-ae", "fine-tune the reconstruction autoencoder");
    c->add_option("--data", aeo.data, "dataset root");
    c->add_option("--out", aeo.out, "output directory");
    c->add_option("--from-gan", aeo.from_gan,
                  "GAN checkpoint dir (containing critic/ and generator/)");
    c->add_flag("--from-scratch", aeo.from_scratch, "train the baseline variant from scratch");
    c->add_option("--lr", aeo.lr, "learning rate");
    c->add_option("--beta1", aeo.beta1, "adam beta1");
    c->add_option("--beta2", aeo.beta2, "adam beta2");
    c->add_option("--batch", aeo.batch, "mini-batch size");
    c->add_option("--epochs", aeo.epochs, "training epochs");
    c->add_option("--checkpoint-every", aeo.checkpoint_every, "checkpoint period in epochs");
    c->add_option("--base-channels", aeo.base_channels, "first conv width (scratch variant)");
    c->add_flag("--track-validation", aeo.track_validation,
                "record per-epoch val reconstruction errors");
    c->add_option("--seed", aeo.seed, "root seed");
    add_common_flags(c, config_dummy, aeo.print);
    book.bind("train-ae", "data_root", aeo.data);
    book.bind("train-ae", "out_dir", aeo.out);
    book.bind("train-ae", "seed", aeo.seed);
    book.bind("train-ae", "ae.from_gan", aeo.from_gan);
    book.bind("train-ae", "ae.from_scratch", aeo.from_scratch);
    book.bind("train-ae", "ae.learning_rate", aeo.lr);
    book.bind("train-ae", "ae.beta1", aeo.beta1);
    book.bind("train-ae", "ae.beta2", aeo.beta2);
    book.bind("train-ae", "ae.batch_size", aeo.batch);
    book.bind("train-ae", "ae.epochs", aeo.epochs);
    book.bind("train-ae", "ae.checkpoint_every", aeo.checkpoint_every);
    book.bind("train-ae", "ae.base_channels", aeo.base_channels);
    book.bind("train-ae", "ae.track_validation", aeo.track_validation);
    bind_augment(book, "train-ae", aeo.aug);
    c->callback([&] {
      if (aeo.print) { std::cout << book.snapshot("train-ae").dump(2) << "\n"; return; }
      run_train_ae(aeo);
    });
  }

  {  // sample
    auto* c = app.add_subcommand("sample", "generate patches from a trained generator");
    c->add_option("--generator", smp.generator, "generator checkpoint dir");
    c->add_option("--out", smp.out, "output directory");
    c->add_option("--n", smp.n, "number of patches");
    c->add_option("--data", smp.data, "dataset root for the diversity baseline (optional)");
    c->add_option("--diversity-n", smp.diversity_n, "patches per side of the diversity score");
    c->add_option("--seed", smp.seed, "sampling seed");
    add_common_flags(c, config_dummy, smp.print);
    book.bind("sample", "generator_ckpt", smp.generator);
    book.bind("sample", "out_dir", smp.out);
    book.bind("sample", "data_root", smp.data);
    book.bind("sample", "sample.n", smp.n);
    book.bind("sample", "sample.diversity_n", smp.diversity_n);
    book.bind("sample", "seed", smp.seed);
    c->callback([&] {
      if (smp.print) { std::cout << book.snapshot("sample").dump(2) << "\n"; return; }
      run_sample(smp);
    });
  }

  {  // interpolate
    auto* c = app.add_subcommand("interpolate", "latent-space interpolation strip");
    c->add_option("--generator", itp.generator, "generator checkpoint dir");
    c->add_option("--out", itp.out, "output directory");
    c->add_option("--steps", itp.steps, "number of frames (>= 2)");
    c->add_option("--seed", itp.seed, "endpoint seed");
    add_common_flags(c, config_dummy, itp.print);
    book.bind("interpolate", "generator_ckpt", itp.generator);
    book.bind("interpolate", "out_dir", itp.out);
    book.bind("interpolate", "interpolate.steps", itp.steps);
    book.bind("interpolate", "seed", itp.seed);
    c->callback([&] {
      if (itp.print) { std::cout << book.snapshot("interpolate").dump(2) << "\n"; return; }
      run_interpolate(itp);
    });
  }

  {  // transfer
    auto* c = app.add_subcommand("transfer",
                                 "transplant GAN weights into a fresh autoencoder");
    c->add_option("--critic", tro.critic, "critic checkpoint dir");
    c->add_option("--generator", tro.generator, "generator checkpoint dir");
    c->add_option("--out", tro.out, "output directory");
    c->add_option("--seed", tro.seed, "bridge init seed");
    add_common_flags(c, config_dummy, tro.print);
    book.bind("transfer", "critic_ckpt", tro.critic);
    book.bind("transfer", "generator_ckpt", tro.generator);
    book.bind("transfer", "out_dir", tro.out);
    book.bind("transfer", "seed", tro.seed);
    c->callback([&] {
      if (tro.print) { std::cout << book.snapshot("transfer").dump(2) << "\n"; return; }
      run_transfer(tro);
    });
  }

  auto add_eval = [&](const char* name, const char* desc, EvalOpts& o, auto runner,
                      bool with_threshold) {
    auto* c = app.add_subcommand(name, desc);
    c->add_option("--autoencoder", o.autoencoder, "autoencoder checkpoint dir");
    c->add_option("--data", o.data, "dataset root");
    c->add_option("--out", o.out, "output directory");
    if (with_threshold)
      c->add_option("--threshold", o.threshold_file, "threshold.json from `calibrate`");
    add_common_flags(c, config_dummy, o.print);
    const std::string owner = name;
    book.bind(owner, "autoencoder_ckpt", o.autoencoder);
    book.bind(owner, "data_root", o.data);
    book.bind(owner, "out_dir", o.out);
    if (with_threshold) book.bind(owner, "threshold_file", o.threshold_file);
    c->callback([&, owner, runner] {
      if (o.print) { std::cout << book.snapshot(owner).dump(2) << "\n"; return; }
      runner(o);
    });
  };
  add_eval("calibrate", "fit the mean + std threshold on bona fide training scores", cal,
           run_calibrate, false);
  add_eval("evaluate", "score the validation split and report APCER/BPCER/ACER", evl,
           run_evaluate, true);
  add_eval("det", "write the DET curve of the validation scores", deto, run_det, false);

  {  // verify
    auto* c = app.add_subcommand("verify", "run gradient checks and transplant verification");
    c->add_option("--critic", ver.critic, "critic checkpoint dir (optional)");
    c->add_option("--generator", ver.generator, "generator checkpoint dir (optional)");
    c->add_option("--autoencoder", ver.autoencoder, "autoencoder checkpoint dir (optional)");
    c->add_option("--out", ver.out, "output directory (optional)");
    c->add_option("--seed", ver.seed, "probe seed");
    add_common_flags(c, config_dummy, ver.print);
    book.bind("verify", "critic_ckpt", ver.critic);
    book.bind("verify", "generator_ckpt", ver.generator);
    book.bind("verify", "autoencoder_ckpt", ver.autoencoder);
    book.bind("verify", "out_dir", ver.out);
    book.bind("verify", "seed", ver.seed);
    c->callback([&] {
      if (ver.print) { std::cout << book.snapshot("verify").dump(2) << "\n"; return; }
      run_verify(ver);
    });
  }

  try {
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) book.apply(load_config_file(config_path));
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ModeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ManifestMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
