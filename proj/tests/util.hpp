#ifndef FPAD_TESTS_UTIL_HPP
#define FPAD_TESTS_UTIL_HPP

#include <cstdlib>
#include <filesystem>
#include <string>

#include "fpad/rng.hpp"
#include "fpad/synthdata.hpp"

namespace fpad::test {

// Self-deleting scratch directory.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0; i < 1000; ++i) {
      auto cand = base / (tag + "_" + std::to_string(::rand()) + std::to_string(i));
      std::error_code ec;
      if (std::filesystem::create_directory(cand, ec)) {
        path = cand;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Small fast corpus for pipeline tests.
inline DatasetIndex tiny_corpus(const std::filesystem::path& dir, int n_train = 6, int n_val = 2,
                                int size = 96, std::uint64_t seed = 11) {
  SynthParams p;
  p.height = size;
  p.width = size;
  p.seed = seed;
  std::vector<AttackKind> attacks = {{AttackKindId::contrast_flatten, 0.6},
                                     {AttackKindId::speckle_noise, 0.6}};
  return build_corpus(n_train, n_val, n_val, p, attacks, seed, dir);
}

}  // namespace fpad::test

#endif
