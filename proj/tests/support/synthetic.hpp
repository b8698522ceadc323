#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wt/random.hpp"

namespace wt::testing {

// Token stream from a hidden class-level Markov chain. Each class owns a block
// of words drawn with Zipfian frequencies, so words of one class are
// distributionally interchangeable and the rare ones are seen only a few times.
struct ClassMarkovParams {
  std::size_t num_classes = 20;
  std::size_t words_per_class = 50;
  std::size_t successors = 3;
  double zipf_exponent = 1.0;
  // Fraction of words whose successors follow a random class instead of
  // their own, so that what predicts a word and what it predicts disagree.
  double successor_noise = 0.0;
  std::uint64_t seed = 7;
};

class ClassMarkovSource {
 public:
  explicit ClassMarkovSource(const ClassMarkovParams& params) : params_(params), rng_(params.seed) {
    const double succ_weights[] = {0.6, 0.25, 0.1, 0.05};
    next_.resize(params.num_classes);
    for (auto& row : next_) {
      row.assign(params.num_classes, 0.0);
      for (std::size_t s = 0; s < params.successors; ++s) {
        const double w = s < 4 ? succ_weights[s] : 0.05;
        row[rng_.below(params.num_classes)] += w;
      }
      normalize(row);
    }
    word_weights_.resize(params.words_per_class);
    for (std::size_t r = 0; r < params.words_per_class; ++r)
      word_weights_[r] = 1.0 / std::pow(static_cast<double>(r + 1), params.zipf_exponent);
    normalize(word_weights_);
    successor_class_.resize(params.num_classes);
    for (std::size_t c = 0; c < params.num_classes; ++c) {
      successor_class_[c].assign(params.words_per_class, c);
      if (params.successor_noise <= 0.0) continue;
      for (auto& sc : successor_class_[c])
        if (rng_.bernoulli(params.successor_noise)) sc = rng_.below(params.num_classes);
    }
  }

  static std::string word(std::size_t cls, std::size_t rank) {
    return "c" + std::to_string(cls) + "w" + std::to_string(rank);
  }

  std::vector<std::string> generate(std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t cls = draw(next_[state_]);
      const std::size_t rank = draw(word_weights_);
      out.push_back(word(cls, rank));
      state_ = successor_class_[cls][rank];
    }
    return out;
  }

 private:
  static void normalize(std::vector<double>& w) {
    double s = 0.0;
    for (double v : w) s += v;
    for (double& v : w) v /= s;
  }

  std::size_t draw(const std::vector<double>& w) {
    double u = rng_.uniform();
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      if (u < w[i]) return i;
      u -= w[i];
    }
    return w.size() - 1;
  }

  ClassMarkovParams params_;
  Rng rng_;
  std::vector<std::vector<double>> next_;
  std::vector<double> word_weights_;
  std::vector<std::vector<std::size_t>> successor_class_;
  std::size_t state_ = 0;
};

}  // namespace wt::testing
