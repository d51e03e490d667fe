#pragma once

#include <cstdint>
#include <random>

#include "enhancekit/tensor.hpp"

namespace enhancekit {

// Seeded source of uniform and standard-normal draws.
//
// Draws depend only on (seed, stream_id): the engine is mt19937_64 and the
// normal transform uses arithmetic and sqrt alone, so sequences are
// bit-identical on any IEEE-754 platform. Single owner; use substreams for
// parallel work.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent source sharing this seed.
  RandomSource substream(std::uint64_t stream_id) const { return RandomSource(seed_, stream_id); }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  Tensor normal_tensor(Shape shape);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Natural log using only IEEE basic operations; exposed for tests.
double portable_log(double x);

}  // namespace enhancekit
