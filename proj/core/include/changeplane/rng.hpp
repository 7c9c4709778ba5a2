#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

#include "changeplane/types.hpp"

namespace changeplane {

/// Counter-based random stream. Output k of stream (seed, id) is a
/// bijective 64-bit mix of key(seed, id) + k * golden_gamma, so a stream's
/// draws depend only on its own (seed, id) and on how many draws precede
/// them in that stream. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform();
  double normal();
  // Exponential with unit mean.
  double exponential();
  // Index in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

RngStream derive_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Order-sensitive hash of a tuple of identifiers into a single stream id.
std::uint64_t combine_ids(std::initializer_list<std::uint64_t> ids);

/// Fisher-Yates permutation of 0..n-1.
std::vector<Index> random_permutation(Index n, RngStream& stream);

/// Uniform direction on the unit sphere in R^dim.
Vector random_unit_vector(Index dim, RngStream& stream);

}  // namespace changeplane
