#pragma once

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "mcdal/random.hpp"
#include "mcdal/tensor.hpp"

namespace testsupport {

using mcdal::Index;
using mcdal::PredictionStack;
using mcdal::Rng;

inline int uniform_int(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Softmax of Gaussian logits with standard deviation `spread`.
inline PredictionStack random_stack(Rng& rng, Index T, Index C, Index H, Index W,
                                    double spread = 2.0, std::string id = "img") {
  PredictionStack stack(std::move(id), T, C, H, W);
  boost::random::normal_distribution<double> normal(0.0, spread);
  std::vector<double> logits(static_cast<std::size_t>(C));
  for (Index t = 0; t < T; ++t) {
    for (Index n = 0; n < H * W; ++n) {
      double total = 0.0;
      for (auto& l : logits) {
        l = std::exp(normal(rng));
        total += l;
      }
      for (Index c = 0; c < C; ++c) stack.at(t, c, n) = static_cast<float>(logits[c] / total);
    }
  }
  return stack;
}

/// Random stack mixing soft passes with one-hot and uniform passes, so
/// zeros, ties and saturated values appear.
inline PredictionStack mixed_stack(Rng& rng, Index T, Index C, Index H, Index W,
                                   std::string id = "img") {
  PredictionStack stack = random_stack(rng, T, C, H, W, 3.0, std::move(id));
  for (Index t = 0; t < T; ++t) {
    for (Index n = 0; n < H * W; ++n) {
      const int kind = uniform_int(rng, 0, 3);
      if (kind == 0) {
        const int hot = uniform_int(rng, 0, static_cast<int>(C) - 1);
        for (Index c = 0; c < C; ++c) stack.at(t, c, n) = c == hot ? 1.0f : 0.0f;
      } else if (kind == 1) {
        for (Index c = 0; c < C; ++c) stack.at(t, c, n) = 1.0f / static_cast<float>(C);
      }
    }
  }
  return stack;
}

inline PredictionStack random_shape_stack(Rng& rng, int max_t, int max_c, int max_side,
                                          bool mixed) {
  const Index T = uniform_int(rng, 1, max_t);
  const Index C = uniform_int(rng, 2, max_c);
  const Index H = uniform_int(rng, 1, max_side);
  const Index W = uniform_int(rng, 1, max_side);
  return mixed ? mixed_stack(rng, T, C, H, W) : random_stack(rng, T, C, H, W);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mcdal-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
