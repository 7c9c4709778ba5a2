#include "changeplane/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace changeplane {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finaliser; a bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// A second, unrelated bijection so that seed and id are not interchangeable.
constexpr std::uint64_t mix64_alt(std::uint64_t z) {
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
  return z ^ (z >> 33);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(mix64(mix64(seed + kGolden) ^ mix64_alt(stream_id + 0x632be59bd9b4e019ULL))) {}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RngStream::exponential() { return -std::log(uniform()); }

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t x = (*this)();
  while (x >= limit) x = (*this)();
  return x % bound;
}

RngStream derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

std::uint64_t combine_ids(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  for (const auto id : ids) {
    h = mix64(h ^ mix64_alt(id + kGolden));
  }
  return h;
}

std::vector<Index> random_permutation(Index n, RngStream& stream) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(stream.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

Vector random_unit_vector(Index dim, RngStream& stream) {
  Vector v(dim);
  double norm = 0.0;
  do {
    for (Index k = 0; k < dim; ++k) v(k) = stream.normal();
    norm = v.norm();
  } while (norm == 0.0);
  return v / norm;
}

}  // namespace changeplane
