#include "apt/random.hpp"

namespace apt {

std::uint64_t Stream::mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t counter) {
  std::uint64_t h = mix(seed + 0x9e3779b97f4a7c15ULL);
  h = mix(h ^ (stream_id + 0x632be59bd9b4e019ULL));
  h = mix(h ^ (counter + 0x85157af5ULL));
  state_ = h;
}

double Stream::uniform() {
  // 53 random mantissa bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

void Stream::fill_normal(std::span<double> out) {
  for (auto& v : out) v = normal_(*this);
}

}  // namespace apt
