#ifndef LPBALL_RNG_HPP
#define LPBALL_RNG_HPP

#include <cstdint>
#include <limits>

namespace lpball {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256++ (Blackman and Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

  friend bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4]{};
};

/// Independent stream for (seed, stream, substream), e.g. (seed, n, chunk index).
inline Xoshiro256pp stream_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t sub) {
  std::uint64_t a = stream + 0x632be59bd9b4e019ULL;
  std::uint64_t b = sub + 0x8cb92ba72f3d8dd7ULL;
  std::uint64_t key = seed;
  key ^= splitmix64(a);
  std::uint64_t k2 = key;
  key = splitmix64(k2) ^ splitmix64(b);
  return Xoshiro256pp(key);
}

/// Uniform on the open interval (0, 1). 52 bits, so that k + 1/2 stays exact and
/// the top value cannot round up to 1.
inline double uniform_open01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

template <class G>
inline double uniform_open01(G& g) {
  return uniform_open01(g());
}

}  // namespace lpball

#endif  // LPBALL_RNG_HPP
