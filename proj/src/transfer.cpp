#include "fpad/transfer.hpp"

#include <nlohmann/json.hpp>

#include "fpad/common.hpp"
#include "fpad/rng.hpp"

namespace fpad {

namespace {

struct TensorInfo {
  std::string name;
  std::vector<int> shape;
};

std::vector<TensorInfo> net_tensors(Network<float>& net) {
  std::vector<TensorInfo> out;
  for (const auto& p : net.seq.params()) out.push_back({p.name, p.shape.dims});
  return out;
}

std::vector<TensorInfo> ckpt_tensors(const RawCheckpoint& ckpt) {
  std::vector<TensorInfo> out;
  for (const auto& name : ckpt.order) out.push_back({name, ckpt.tensors.at(name).shape});
  return out;
}

TransplantMap build_map(const std::vector<TensorInfo>& critic,
                        const std::vector<TensorInfo>& generator,
                        const std::vector<TensorInfo>& ae) {
  auto find = [](const std::vector<TensorInfo>& v, const std::string& name) -> const TensorInfo* {
    for (const auto& t : v)
      if (t.name == name) return &t;
    return nullptr;
  };

  TransplantMap map;
  for (const auto& t : ae) {
    if (t.name.starts_with("bridge.")) {
      map.fresh.push_back(t.name);
    } else if (t.name.starts_with("enc.")) {
      const std::string src = t.name.substr(4);
      const TensorInfo* s = find(critic, src);
      if (!s) throw ShapeMismatch("no critic source tensor for '" + t.name + "'");
      if (s->shape != t.shape)
        throw ShapeMismatch("shape mismatch transplanting '" + src + "' -> '" + t.name + "'");
      map.encoder.push_back({src, t.name});
    } else if (t.name.starts_with("dec.")) {
      const std::string src = t.name.substr(4);
      const TensorInfo* s = find(generator, src);
      if (!s) throw ShapeMismatch("no generator source tensor for '" + t.name + "'");
      if (s->shape != t.shape)
        throw ShapeMismatch("shape mismatch transplanting '" + src + "' -> '" + t.name + "'");
      map.decoder.push_back({src, t.name});
    } else {
      throw ShapeMismatch("unexpected autoencoder tensor '" + t.name + "'");
    }
  }

  // Every transferable GAN tensor must land somewhere (extra layers on the
  // source side are an architecture mismatch, not silently ignorable).
  auto mapped = [&](const std::vector<TransplantMap::Pair>& pairs, const std::string& name) {
    for (const auto& p : pairs)
      if (p.source == name) return true;
    return false;
  };
  for (const auto& t : critic)
    if (!t.name.starts_with("head") && !mapped(map.encoder, t.name))
      throw ShapeMismatch("critic tensor '" + t.name + "' has no encoder target");
  for (const auto& t : generator)
    if (!t.name.starts_with("project") && !mapped(map.decoder, t.name))
      throw ShapeMismatch("generator tensor '" + t.name + "' has no decoder target");
  return map;
}

}  // namespace

TransplantMap build_transplant_map(Network<float>& critic, Network<float>& generator,
                                   Network<float>& ae) {
  return build_map(net_tensors(critic), net_tensors(generator), net_tensors(ae));
}

TransplantMap build_transplant_map(const RawCheckpoint& critic, const RawCheckpoint& generator,
                                   Network<float>& ae) {
  return build_map(ckpt_tensors(critic), ckpt_tensors(generator), net_tensors(ae));
}

void transplant(const RawCheckpoint& critic_ckpt, const RawCheckpoint& generator_ckpt,
                Network<float>& ae, std::uint64_t seed) {
  TransplantMap map = build_transplant_map(critic_ckpt, generator_ckpt, ae);
  init_weights(ae, seed);  // bridge (and a clean slate for everything else)

  auto params = ae.seq.params();
  auto assign = [&](const RawCheckpoint& src, const TransplantMap::Pair& pair) {
    const RawTensor& raw = src.tensors.at(pair.source);
    for (auto& p : params)
      if (p.name == pair.target) {
        detail::from_row_major(raw.values, *p.value);
        return;
      }
    throw ShapeMismatch("transplant target '" + pair.target + "' not found in autoencoder");
  };
  for (const auto& pair : map.encoder) assign(critic_ckpt, pair);
  for (const auto& pair : map.decoder) assign(generator_ckpt, pair);
}

VerificationReport verify_transplant(Network<float>& critic, Network<float>& generator,
                                     Network<float>& ae, std::uint64_t probe_seed) {
  RngStream rng(probe_seed);
  const int b = 4;

  nn::Mat<float> patches(64 * 64, b);
  for (Eigen::Index i = 0; i < patches.size(); ++i)
    patches.data()[i] = static_cast<float>(rng.uniform(-1.0, 1.0));

  VerificationReport report;
  {
    nn::Mat<float> enc = ae.seq.forward_range(patches, 0, ae.encoder_end, false);
    nn::Mat<float> trunk = critic.seq.forward_range(patches, 0, critic.trunk_end, false);
    report.encoder_max_dev = static_cast<double>((enc - trunk).cwiseAbs().maxCoeff());
  }
  {
    const int c8 = 8 * ae.base_channels;
    nn::Mat<float> feature(4 * 4 * c8, b);
    for (Eigen::Index i = 0; i < feature.size(); ++i)
      feature.data()[i] = static_cast<float>(rng.normal());
    nn::Mat<float> dec = ae.seq.forward_range(feature, ae.decoder_begin, ae.seq.size(), false);
    nn::Mat<float> tail =
        generator.seq.forward_range(feature, generator.tail_begin, generator.seq.size(), false);
    report.decoder_max_dev = static_cast<double>((dec - tail).cwiseAbs().maxCoeff());
  }
  report.pass = report.encoder_max_dev == 0.0 && report.decoder_max_dev == 0.0;
  return report;
}

std::string VerificationReport::to_json() const {
  nlohmann::json j{{"encoder_max_dev", encoder_max_dev},
                   {"decoder_max_dev", decoder_max_dev},
                   {"pass", pass}};
  return j.dump(2);
}

}  // namespace fpad
