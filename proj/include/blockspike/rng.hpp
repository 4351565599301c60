#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace blockspike {

// Deterministic substream RNG. Every consumer (signal vector, observation
// block, side channel, algorithm init, harness trial) derives its own engine
// from (seed, tag words), so draws are independent of generation order and of
// which other streams exist. Same binary + same seed => identical instances.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_tag(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  for (std::uint64_t w : words) {
    s ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h = splitmix64(s);
  }
  return h;
}

namespace tag {
inline constexpr std::uint64_t truth = 0x01;
inline constexpr std::uint64_t block = 0x02;
inline constexpr std::uint64_t side = 0x03;
inline constexpr std::uint64_t init = 0x04;
inline constexpr std::uint64_t trial = 0x05;
inline constexpr std::uint64_t solver = 0x06;
}

class Substream {
 public:
  Substream(std::uint64_t seed, std::initializer_list<std::uint64_t> words)
      : eng_(mix_tag(seed, words)) {}

  explicit Substream(std::uint64_t raw_seed) : eng_(raw_seed) {}

  // uniform on (0,1), 53-bit resolution, never 0 or 1
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

  // Marsaglia polar method; fixed algorithm so the stream is identical across
  // standard libraries' distribution implementations
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // column-major fill so the draw order is part of the stream contract
  template <typename Derived>
  void fill_gaussian(Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = gaussian();
  }

  // inverse-CDF draw from a finite distribution given cumulative probabilities
  int categorical(const Eigen::VectorXd& cum_probs) {
    const double u = uniform();
    for (int i = 0; i < cum_probs.size(); ++i)
      if (u <= cum_probs(i)) return i;
    return static_cast<int>(cum_probs.size()) - 1;
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}
