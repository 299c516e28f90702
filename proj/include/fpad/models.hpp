#ifndef FPAD_MODELS_HPP
#define FPAD_MODELS_HPP

#include <cstdint>
#include <string>

#include "fpad/nn.hpp"
#include "fpad/rng.hpp"

namespace fpad {

inline constexpr int kLatentDim = 100;

enum class NetKind { generator, critic, autoencoder };
enum class GanLossMode { dcgan, wgan_gp, wgan_clip };
enum class AeVariant { transfer, scratch };

std::string to_string(NetKind k);
std::string to_string(GanLossMode m);
std::string to_string(AeVariant v);
NetKind net_kind_from_string(const std::string& s);
GanLossMode loss_mode_from_string(const std::string& s);
AeVariant ae_variant_from_string(const std::string& s);

// A built network plus the structural indices the transfer/verification
// code needs. base_channels=128 gives the canonical widths
// 128/256/512/1024 with the 4x4x(8*base) interior feature map.
template <class S>
struct Network {
  nn::Sequential<S> seq;
  NetKind kind = NetKind::generator;
  GanLossMode loss_mode = GanLossMode::wgan_gp;
  AeVariant variant = AeVariant::transfer;
  int base_channels = 128;

  // critic: layers [0, trunk_end) form the reusable conv stack.
  std::size_t trunk_end = 0;
  // generator: layers [tail_begin, size) form the reusable decoder tail.
  std::size_t tail_begin = 0;
  // autoencoder: encoder is [0, encoder_end), decoder is [decoder_begin, size).
  std::size_t encoder_end = 0;
  std::size_t decoder_begin = 0;

  // Native input/output range: [-1,1] for generator/critic/transfer AE,
  // [0,1] for the scratch AE (sigmoid output).
  bool unit_range() const {
    return kind == NetKind::autoencoder && variant == AeVariant::scratch;
  }
};

// dense 100 -> 4*4*(8b), then stride-2 5x5 transposed convs
// 4x4x8b -> 8x8x4b -> 16x16x2b -> 32x32x1b -> 64x64x1; batch-norm + ReLU
// everywhere except the tanh output.
template <class S>
Network<S> build_generator(int base_channels = 128);

// 5x5 stride-2 convs 64x64x1 -> 32x32x1b -> 16x16x2b -> 8x8x4b -> 4x4x8b,
// leaky-ReLU(0.2); scalar head (sigmoid in dcgan mode, linear otherwise).
// Batch norm after the interior convs except in wgan_gp mode.
template <class S>
Network<S> build_critic(GanLossMode loss_mode = GanLossMode::wgan_gp, int base_channels = 128);

// Critic trunk as encoder + 5x5 same-padding bridge conv at 8b channels +
// generator tail as decoder. The scratch variant batch-normalizes every
// conv and ends in a sigmoid (inputs rescaled to [0,1]).
template <class S>
Network<S> build_autoencoder(AeVariant variant = AeVariant::transfer,
                             GanLossMode encoder_mode = GanLossMode::wgan_gp,
                             int base_channels = 128);

// DCGAN-style init: weights ~ N(0, 0.02), biases 0, batch-norm scale 1 /
// shift 0. Deterministic per seed.
template <class S>
void init_weights(Network<S>& net, std::uint64_t seed) {
  RngStream rng(seed);
  for (auto& p : net.seq.params()) {
    if (p.name.ends_with(".weight")) {
      for (Eigen::Index i = 0; i < p.value->size(); ++i)
        p.value->data()[i] = static_cast<S>(0.02 * rng.normal());
    } else if (p.name.ends_with(".gamma") || p.name.ends_with(".running_var")) {
      p.value->setOnes();
    } else {
      p.value->setZero();
    }
  }
}

// --- builder implementations -------------------------------------------

template <class S>
Network<S> build_generator(int base) {
  using namespace nn;
  Network<S> net;
  net.kind = NetKind::generator;
  net.base_channels = base;
  const int c8 = 8 * base, c4 = 4 * base, c2 = 2 * base;
  auto& q = net.seq;
  q.template emplace<Dense<S>>("project", kLatentDim, 4 * 4 * c8);
  q.template emplace<BatchNorm<S>>("project_bn", c8);
  q.template emplace<LeakyReLU<S>>("project_relu", S(0));
  net.tail_begin = q.size();
  q.template emplace<ConvTranspose2d<S>>("tconv1", c8, 4, 4, c4, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("bn1", c4);
  q.template emplace<LeakyReLU<S>>("relu1", S(0));
  q.template emplace<ConvTranspose2d<S>>("tconv2", c4, 8, 8, c2, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("bn2", c2);
  q.template emplace<LeakyReLU<S>>("relu2", S(0));
  q.template emplace<ConvTranspose2d<S>>("tconv3", c2, 16, 16, base, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("bn3", base);
  q.template emplace<LeakyReLU<S>>("relu3", S(0));
  q.template emplace<ConvTranspose2d<S>>("tconv4", base, 32, 32, 1, 5, 2, 2, 1);
  q.template emplace<Tanh<S>>("out_tanh");
  return net;
}

namespace detail {

// Shared between the critic and the AE encoder so transplanted stacks are
// structurally identical. `prefix` is empty for the critic, "enc." for the
// AE; `bn_all` additionally normalizes the first conv (scratch AE rule).
template <class S>
void append_conv_trunk(nn::Sequential<S>& q, const std::string& prefix, int base, bool with_bn,
                       bool bn_all) {
  using namespace nn;
  const int c8 = 8 * base, c4 = 4 * base, c2 = 2 * base;
  q.template emplace<Conv2d<S>>(prefix + "conv1", ConvGeom::make(1, 64, 64, base, 5, 2, 2));
  if (with_bn && bn_all) q.template emplace<BatchNorm<S>>(prefix + "bn1", base);
  q.template emplace<LeakyReLU<S>>(prefix + "lrelu1", S(0.2));
  q.template emplace<Conv2d<S>>(prefix + "conv2", ConvGeom::make(base, 32, 32, c2, 5, 2, 2));
  if (with_bn) q.template emplace<BatchNorm<S>>(prefix + "bn2", c2);
  q.template emplace<LeakyReLU<S>>(prefix + "lrelu2", S(0.2));
  q.template emplace<Conv2d<S>>(prefix + "conv3", ConvGeom::make(c2, 16, 16, c4, 5, 2, 2));
  if (with_bn) q.template emplace<BatchNorm<S>>(prefix + "bn3", c4);
  q.template emplace<LeakyReLU<S>>(prefix + "lrelu3", S(0.2));
  q.template emplace<Conv2d<S>>(prefix + "conv4", ConvGeom::make(c4, 8, 8, c8, 5, 2, 2));
  if (with_bn) q.template emplace<BatchNorm<S>>(prefix + "bn4", c8);
  q.template emplace<LeakyReLU<S>>(prefix + "lrelu4", S(0.2));
}

}  // namespace detail

template <class S>
Network<S> build_critic(GanLossMode mode, int base) {
  using namespace nn;
  Network<S> net;
  net.kind = NetKind::critic;
  net.loss_mode = mode;
  net.base_channels = base;
  auto& q = net.seq;
  // Gradient-penalty critics must not use cross-sample batch statistics.
  detail::append_conv_trunk(q, "", base, mode != GanLossMode::wgan_gp, false);
  net.trunk_end = q.size();
  q.template emplace<Dense<S>>("head", 4 * 4 * 8 * base, 1);
  if (mode == GanLossMode::dcgan) q.template emplace<Sigmoid<S>>("head_sigmoid");
  return net;
}

template <class S>
Network<S> build_autoencoder(AeVariant variant, GanLossMode encoder_mode, int base) {
  using namespace nn;
  Network<S> net;
  net.kind = NetKind::autoencoder;
  net.variant = variant;
  net.loss_mode = encoder_mode;
  net.base_channels = base;
  const int c8 = 8 * base, c4 = 4 * base, c2 = 2 * base;
  auto& q = net.seq;
  const bool scratch = variant == AeVariant::scratch;
  detail::append_conv_trunk(q, "enc.", base,
                            scratch || encoder_mode != GanLossMode::wgan_gp, scratch);
  net.encoder_end = q.size();
  q.template emplace<Conv2d<S>>("bridge.conv", ConvGeom::make(c8, 4, 4, c8, 5, 1, 2));
  q.template emplace<BatchNorm<S>>("bridge.bn", c8);
  q.template emplace<LeakyReLU<S>>("bridge.lrelu", S(0.2));
  net.decoder_begin = q.size();
  q.template emplace<ConvTranspose2d<S>>("dec.tconv1", c8, 4, 4, c4, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("dec.bn1", c4);
  q.template emplace<LeakyReLU<S>>("dec.relu1", S(0));
  q.template emplace<ConvTranspose2d<S>>("dec.tconv2", c4, 8, 8, c2, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("dec.bn2", c2);
  q.template emplace<LeakyReLU<S>>("dec.relu2", S(0));
  q.template emplace<ConvTranspose2d<S>>("dec.tconv3", c2, 16, 16, base, 5, 2, 2, 1);
  q.template emplace<BatchNorm<S>>("dec.bn3", base);
  q.template emplace<LeakyReLU<S>>("dec.relu3", S(0));
  q.template emplace<ConvTranspose2d<S>>("dec.tconv4", base, 32, 32, 1, 5, 2, 2, 1);
  if (scratch)
    q.template emplace<Sigmoid<S>>("dec.out_sigmoid");
  else
    q.template emplace<Tanh<S>>("dec.out_tanh");
  return net;
}

inline std::string to_string(NetKind k) {
  switch (k) {
    case NetKind::generator: return "generator";
    case NetKind::critic: return "critic";
    case NetKind::autoencoder: return "autoencoder";
  }
  return "generator";
}
inline std::string to_string(GanLossMode m) {
  switch (m) {
    case GanLossMode::dcgan: return "dcgan";
    case GanLossMode::wgan_gp: return "wgan_gp";
    case GanLossMode::wgan_clip: return "wgan_clip";
  }
  return "wgan_gp";
}
inline std::string to_string(AeVariant v) {
  return v == AeVariant::scratch ? "scratch" : "transfer";
}
inline NetKind net_kind_from_string(const std::string& s) {
  if (s == "generator") return NetKind::generator;
  if (s == "critic") return NetKind::critic;
  if (s == "autoencoder") return NetKind::autoencoder;
  throw ConfigError("unknown net kind: " + s);
}
inline GanLossMode loss_mode_from_string(const std::string& s) {
  if (s == "dcgan") return GanLossMode::dcgan;
  if (s == "wgan_gp") return GanLossMode::wgan_gp;
  if (s == "wgan_clip") return GanLossMode::wgan_clip;
  throw ConfigError("unknown loss mode: " + s);
}
inline AeVariant ae_variant_from_string(const std::string& s) {
  if (s == "transfer") return AeVariant::transfer;
  if (s == "scratch") return AeVariant::scratch;
  throw ConfigError("unknown autoencoder variant: " + s);
}

}  // namespace fpad

#endif  // FPAD_MODELS_HPP
