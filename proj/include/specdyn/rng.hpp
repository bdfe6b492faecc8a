#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

namespace specdyn {

/// splitmix64 step; used to derive stream keys from user seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic sub-stream seed from a global seed and up to two indices
/// (grid cell coordinates, replica ids, role tags). Collision-free for all
/// practical index ranges and stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed ^ 0x243f6a8885a308d3ull);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x13198a2e03707344ull));
  return h;
}

/**
 * Philox4x32-10 counter-based generator (Salmon et al. 2011).
 *
 * Every consumer owns an independent stream identified by a 64-bit key;
 * outputs depend only on (key, counter), so parallel workers with distinct
 * keys are reproducible regardless of scheduling. Verified against the
 * Random123 known-answer vectors in the test suite.
 */
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t key = 0, std::uint64_t counter = 0)
      : counter_(counter), pos_(4) {
    key_[0] = static_cast<std::uint32_t>(key);
    key_[1] = static_cast<std::uint32_t>(key >> 32);
  }

  /// Stream keyed by derive_seed(seed, stream_id); the canonical way to
  /// hand out independent generators.
  static Philox stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Philox(derive_seed(seed, stream_id));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  result_type operator()() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = (*this)();
    const std::uint64_t hi = (*this)();
    return lo | (hi << 32);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double next_double_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  /// One Philox block: the raw 4x32 output for the 128-bit counter
  /// (ctr_lo, ctr_hi) under this key. Streams advance ctr_lo only.
  std::array<std::uint32_t, 4> block(std::uint64_t ctr, std::uint64_t ctr_hi = 0) const {
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(ctr),
                                   static_cast<std::uint32_t>(ctr >> 32),
                                   static_cast<std::uint32_t>(ctr_hi),
                                   static_cast<std::uint32_t>(ctr_hi >> 32)};
    std::uint32_t k0 = key_[0], k1 = key_[1];
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * c[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * c[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return c;
  }

 private:
  void refill() {
    buf_ = block(counter_++);
    pos_ = 0;
  }

  std::array<std::uint32_t, 4> buf_{};
  std::uint64_t counter_;
  std::uint32_t key_[2];
  int pos_;
};

/// xoshiro256++ (Blackman & Vigna). The bulk bit generator behind the SGD
/// data path, where sample volume makes Philox's multiply chain the
/// bottleneck; seeded through splitmix64 so streams stay explicit and
/// reproducible. Oracle and initialisation paths keep Philox.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = (x = splitmix64(x + 0x9e3779b97f4a7c15ull));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double next_double_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

/**
 * Ziggurat sampler for N(0, 1) (Marsaglia & Tsang 2000), 128 layers.
 *
 * Index bits and value bits come from independent positions of one 64-bit
 * draw, avoiding the classic low-bit reuse correlation. The fast path costs
 * one draw, one table compare and one multiply.
 */
class GaussianTable {
 public:
  static const GaussianTable& instance();

  template <typename Rng>
  double sample(Rng& rng) const {
    for (;;) {
      const std::uint64_t u = rng.next_u64();
      const std::int32_t hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(u));
      const int iz = static_cast<int>((u >> 32) & 127u);
      if (static_cast<std::uint32_t>(hz < 0 ? -(std::int64_t)hz : hz) < kn_[iz])
        return hz * wn_[iz];
      const double x = slow_path(rng, hz, iz);
      if (x == x) return x;  // NaN signals a redraw
    }
  }

  template <typename Rng>
  void fill(Rng& rng, double* out, std::size_t n) const {
    for (std::size_t i = 0; i < n; ++i) out[i] = sample(rng);
  }
  template <typename Rng>
  void fill(Rng& rng, float* out, std::size_t n) const {
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(sample(rng));
  }

 private:
  GaussianTable();

  template <typename Rng>
  double slow_path(Rng& rng, std::int32_t hz, int iz) const {
    if (iz == 0) {  // base strip: sample the tail beyond kTailR
      double x, y;
      do {
        x = -std::log(rng.next_double_open()) * kInvTailR;
        y = -std::log(rng.next_double_open());
      } while (y + y < x * x);
      return hz > 0 ? kTailR + x : -(kTailR + x);
    }
    const double x = hz * wn_[iz];
    if (fn_[iz] + rng.next_double() * (fn_[iz - 1] - fn_[iz]) < fast_exp_half_sq(x)) return x;
    return std::numeric_limits<double>::quiet_NaN();  // redraw
  }

  static double fast_exp_half_sq(double x);

  static constexpr double kTailR = 3.442619855899;
  static constexpr double kInvTailR = 1.0 / kTailR;

  std::uint32_t kn_[128];
  double wn_[128];
  double fn_[128];
};

inline double standard_normal(Philox& rng) { return GaussianTable::instance().sample(rng); }

/// High-throughput N(0,1) filler for the online-SGD input vectors: batched
/// Box-Muller over xoshiro bits, vectorised through Eigen array kernels.
/// Eight independent xoshiro lanes run in lockstep so the state update and
/// the uniform conversion both vectorise. Exact transform at float
/// precision; one u64 yields one sample pair.
class NormalFiller {
 public:
  explicit NormalFiller(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (int lane = 0; lane < kLanes; ++lane)
      for (int word = 0; word < 4; ++word)
        state_[word][lane] = (x = splitmix64(x + 0x9e3779b97f4a7c15ull));
  }

  void fill(float* out, std::size_t n);

 private:
  static constexpr int kLanes = 8;
  static constexpr std::size_t kChunkPairs = 2048;  // multiple of kLanes
  void generate_chunk(float* z_cos, float* z_sin);

  std::uint64_t state_[4][kLanes];
  float buf_[2 * kChunkPairs];
  std::size_t avail_ = 0;
};

}  // namespace specdyn
