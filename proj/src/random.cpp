#include "fpfgain/random.hpp"

namespace fpfgain {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags)
{
  std::uint64_t key = mix64(master + kGamma);
  for (std::uint64_t tag : tags) key = mix64(key ^ mix64(tag + kGamma));
  return key;
}

Stream::result_type Stream::operator()()
{
  ++m_counter;
  return mix64(m_key + m_counter * kGamma);
}

double Stream::uniform()
{
  // 53 random mantissa bits.
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

} // namespace fpfgain
