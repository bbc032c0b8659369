#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace fpfgain {

/// Mixes a master seed with a list of integer tags into a new 64-bit key.
///
/// Streams are addressed by (seed, tag...) rather than by draw order, so adding
/// particles or repetitions never shifts the draws of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

/// Counter-based generator: the k-th output is splitmix64(key + k * gamma).
///
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class Stream
{
public:
  using result_type = std::uint64_t;

  Stream() = default;
  explicit Stream(std::uint64_t key) : m_key(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Standard normal draw.
  double normal() { return m_normal(*this); }
  /// Uniform draw in [0, 1).
  double uniform();

  std::uint64_t counter() const { return m_counter; }

private:
  std::uint64_t m_key = 0;
  std::uint64_t m_counter = 0;
  std::normal_distribution<double> m_normal{0.0, 1.0};
};

// Tags used when deriving sub-streams; values are part of the reproducibility
// contract and must not change.
namespace stream_tag {
inline constexpr std::uint64_t truth = 1;
inline constexpr std::uint64_t prior = 2;
inline constexpr std::uint64_t particle = 3;
inline constexpr std::uint64_t resample = 4;
inline constexpr std::uint64_t repetition = 5;
inline constexpr std::uint64_t ensemble = 6;
inline constexpr std::uint64_t observation = 7;
} // namespace stream_tag

} // namespace fpfgain
