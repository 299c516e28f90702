#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "fpad/diagnostics.hpp"
#include "fpad/image.hpp"
#include "util.hpp"

using namespace fpad;

namespace {

// Latent-to-pixel map that is exactly linear (no activations), for which
// equal latent steps must produce equal pixel steps.
Network<float> linear_generator(std::uint64_t seed) {
  Network<float> net;
  net.kind = NetKind::generator;
  net.seq.emplace<nn::Dense<float>>("project", kLatentDim, kPatchPixels);
  net.tail_begin = 0;
  init_weights(net, seed);
  return net;
}

Network<float> constant_generator() {
  auto gen = build_generator<float>(8);
  for (auto& p : gen.seq.params())
    if (p.trainable) p.value->setZero();
  return gen;
}

nn::Vec<float> latent(std::uint64_t seed) {
  RngStream rng(seed);
  nn::Vec<float> z(kLatentDim);
  for (int i = 0; i < kLatentDim; ++i) z[i] = static_cast<float>(rng.normal());
  return z;
}

}  // namespace

TEST_CASE("mean_pairwise_distance: hand-computed oracle and order invariance") {
  PatchBatch p(2, 3);
  p << 0.0f, 3.0f, 0.0f,  //
      0.0f, 0.0f, 4.0f;
  // pairs: (0,1)=3, (0,2)=4, (1,2)=5 -> mean 4
  CHECK(mean_pairwise_distance(p) == doctest::Approx(4.0).epsilon(1e-7));

  PatchBatch q(2, 3);
  q.col(0) = p.col(2);
  q.col(1) = p.col(0);
  q.col(2) = p.col(1);
  CHECK(mean_pairwise_distance(q) == doctest::Approx(mean_pairwise_distance(p)).epsilon(1e-12));

  PatchBatch one(2, 1);
  CHECK_THROWS_AS(mean_pairwise_distance(one), InvalidParams);
}

TEST_CASE("sample_patches: shape, range, determinism") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 2);
  PatchBatch a = sample_patches(gen, 5, 42);
  CHECK(a.rows() == kPatchPixels);
  CHECK(a.cols() == 5);
  CHECK(a.minCoeff() >= -1.0f);
  CHECK(a.maxCoeff() <= 1.0f);
  PatchBatch b = sample_patches(gen, 5, 42);
  CHECK(a == b);
  PatchBatch c = sample_patches(gen, 5, 43);
  CHECK(a != c);
}

TEST_CASE("mode_collapse_score: a constant generator scores ratio 0") {
  test::TempDir dir("diag");
  DatasetIndex idx = test::tiny_corpus(dir.path / "d", 4, 1, 96, 3);
  AugmentConfig aug;
  TrainStream stream(idx, aug, 4, 1);
  PatchBatch real = stream.next();

  auto flat = constant_generator();
  DiversityScore s = mode_collapse_score(flat, 6, 7, real);
  CHECK(s.generated_mean_distance == 0.0);
  CHECK(s.baseline_mean_distance > 0.0);
  CHECK(s.ratio == 0.0);
  CHECK(s.collapsed());
}

TEST_CASE("mode_collapse_score: comparing a generator against itself gives 1") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 9);
  PatchBatch self = sample_patches(gen, 6, 11);
  DiversityScore s = mode_collapse_score(gen, 6, 11, self);
  CHECK(s.ratio == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(!s.collapsed());
  CHECK(s.generated_mean_distance ==
        doctest::Approx(mean_pairwise_distance(self)).epsilon(1e-9));
}

TEST_CASE("mode_collapse_score: input validation") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 1);
  PatchBatch real = sample_patches(gen, 3, 1);
  CHECK_THROWS_AS(mode_collapse_score(gen, 1, 1, real), InvalidParams);
  PatchBatch one = real.leftCols(1);
  CHECK_THROWS_AS(mode_collapse_score(gen, 4, 1, one), InvalidParams);
  PatchBatch constant = PatchBatch::Zero(kPatchPixels, 3);
  CHECK_THROWS_AS(mode_collapse_score(gen, 4, 1, constant), InsufficientData);
}

TEST_CASE("latent_interpolation: identical endpoints give a zero trace") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 4);
  nn::Vec<float> z = latent(1);
  InterpolationTrace t = latent_interpolation(gen, z, z, 5);
  REQUIRE(t.frames.cols() == 5);
  // identical up to float rounding of (1-t)*z + t*z
  CHECK(t.endpoint_distance <= 1e-6);
  for (double d : t.distances) CHECK(d <= 1e-6);
}

TEST_CASE("latent_interpolation: two steps reproduce the endpoints") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 4);
  nn::Vec<float> z0 = latent(2), z1 = latent(3);
  InterpolationTrace t = latent_interpolation(gen, z0, z1, 2);
  REQUIRE(t.frames.cols() == 2);
  nn::Mat<float> ends(kLatentDim, 2);
  ends << z0, z1;
  nn::Mat<float> expect = gen.seq.forward(ends, false);
  CHECK(t.frames.col(0) == expect.col(0));
  CHECK(t.frames.col(1) == expect.col(1));
  REQUIRE(t.distances.size() == 1);
  CHECK(t.distances[0] == doctest::Approx((expect.col(1) - expect.col(0)).norm()).epsilon(1e-6));

  CHECK_THROWS_AS(latent_interpolation(gen, z0, z1, 1), InvalidParams);
}

TEST_CASE("latent_interpolation: a linear map yields equally spaced frames") {
  auto gen = linear_generator(6);
  nn::Vec<float> z0 = latent(4), z1 = latent(5);
  const int K = 9;
  InterpolationTrace t = latent_interpolation(gen, z0, z1, K);
  REQUIRE(static_cast<int>(t.distances.size()) == K - 1);
  const double step = t.endpoint_distance / (K - 1);
  for (double d : t.distances) CHECK(d == doctest::Approx(step).epsilon(1e-5));
  CHECK(t.max_consecutive <= t.smoothness_bound);
  CHECK(t.smoothness_bound ==
        doctest::Approx(1.1 * 2.0 / (K - 1) * t.endpoint_distance).epsilon(1e-12));
  CHECK(t.smooth);
}

TEST_CASE("grid and strip images have the expected geometry") {
  test::TempDir dir("diagimg");
  auto gen = build_generator<float>(8);
  init_weights(gen, 12);

  PatchBatch five = sample_patches(gen, 5, 3);
  write_patch_grid(five, dir.path / "grid.png");
  GrayImage grid = io::read_png_gray(dir.path / "grid.png");
  // 5 patches -> ceil(sqrt(5)) = 3 columns, 2 rows
  CHECK(grid.cols() == 3 * kPatchSize);
  CHECK(grid.rows() == 2 * kPatchSize);

  InterpolationTrace t = latent_interpolation(gen, latent(6), latent(7), 4);
  write_interpolation_strip(t, dir.path / "strip.png");
  GrayImage strip = io::read_png_gray(dir.path / "strip.png");
  CHECK(strip.rows() == kPatchSize);
  CHECK(strip.cols() == 4 * kPatchSize);

  // grid cells are the denormalized patches, quantized to 8 bits
  for (int i = 0; i < 3; ++i) {
    const float expect = 0.5f * (five(i * kPatchSize, 0) + 1.0f);
    const float got = grid(i, 0);
    CHECK(std::abs(got - expect) <= 0.5f / 255.0f + 1e-6f);
  }
}

TEST_CASE("diagnostics_json carries both sections") {
  auto gen = build_generator<float>(8);
  init_weights(gen, 13);
  PatchBatch real = sample_patches(gen, 4, 21);
  DiversityScore s = mode_collapse_score(gen, 4, 22, real);
  InterpolationTrace t = latent_interpolation(gen, latent(8), latent(9), 3);

  nlohmann::json j = nlohmann::json::parse(diagnostics_json(s, t));
  CHECK(j["diversity"]["ratio"].get<double>() == s.ratio);
  CHECK(j["diversity"]["collapsed"].get<bool>() == s.collapsed());
  CHECK(j["interpolation"]["steps"].get<int>() == 3);
  CHECK(j["interpolation"]["smooth"].get<bool>() == t.smooth);
  CHECK(j["interpolation"]["max_consecutive"].get<double>() == t.max_consecutive);
}
