#ifndef FPAD_TRANSFER_HPP
#define FPAD_TRANSFER_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fpad/checkpoint.hpp"
#include "fpad/models.hpp"

namespace fpad {

// Mapping from GAN tensors onto autoencoder tensors. Encoder tensors come
// from the critic conv stack, decoder tensors from the generator
// transposed-conv tail; the bridge layer is the only freshly initialized
// part. The critic head and the generator input projection are discarded.
struct TransplantMap {
  struct Pair {
    std::string source;  // critic or generator tensor name
    std::string target;  // autoencoder tensor name
  };
  std::vector<Pair> encoder;
  std::vector<Pair> decoder;
  std::vector<std::string> fresh;  // AE tensors initialized rather than copied
};

struct VerificationReport {
  double encoder_max_dev = 0.0;
  double decoder_max_dev = 0.0;
  bool pass = false;
  std::string to_json() const;
};

TransplantMap build_transplant_map(Network<float>& critic, Network<float>& generator,
                                   Network<float>& ae);

// Same, validated directly against checkpoint contents.
TransplantMap build_transplant_map(const RawCheckpoint& critic, const RawCheckpoint& generator,
                                   Network<float>& ae);

// Copies mapped tensors (batch-norm running statistics included) and
// initializes the bridge from `seed`.
void transplant(const RawCheckpoint& critic_ckpt, const RawCheckpoint& generator_ckpt,
                Network<float>& ae, std::uint64_t seed);

// Functional-equivalence probes on a seeded random batch: transplanted
// encoder vs truncated critic and decoder vs generator tail, inference
// mode, tolerance 0.
VerificationReport verify_transplant(Network<float>& critic, Network<float>& generator,
                                     Network<float>& ae, std::uint64_t probe_seed);

}  // namespace fpad

#endif  // FPAD_TRANSFER_HPP
