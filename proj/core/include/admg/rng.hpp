#pragma once

#include <cstddef>
#include <cstdint>

namespace admg {

/// Small fast generator (Chris Doty-Humphrey's sfc64). Seeding is cheap, which
/// matters because every Monte Carlo draw gets its own derived stream.
class Sfc64 {
 public:
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  explicit Sfc64(std::uint64_t seed) : a_(seed), b_(seed), c_(seed) {
    for (int i = 0; i < 12; ++i) (*this)();
  }

  result_type operator()() {
    const std::uint64_t tmp = a_ + b_ + counter_++;
    a_ = b_ ^ (b_ >> 11);
    b_ = c_ + (c_ << 3);
    c_ = ((c_ << 24) | (c_ >> 40)) + tmp;
    return tmp;
  }

 private:
  std::uint64_t a_;
  std::uint64_t b_;
  std::uint64_t c_;
  std::uint64_t counter_ = 1;
};

/// Seed-derived random stream. Child streams are obtained with split(), which
/// hashes (seed, path) so that streams for different draws, chains or folds
/// never overlap in practice and do not depend on consumption order.
///
/// Distributions come from Boost.Random rather than <random> so that a
/// fixed seed yields the same numbers with any standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream split(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  double normal();
  double uniform();
  /// Gamma(shape, rate = 1).
  double gamma(double shape);
  /// Inverse gamma with density proportional to x^(-shape-1) exp(-rate/x).
  double inv_gamma(double shape, double rate);
  std::size_t uniform_index(std::size_t n);

  Sfc64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  Sfc64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace admg
