#include "specdyn/rng.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <numbers>

namespace specdyn {

namespace {
constexpr double kArea = 9.91256303526217e-3;
constexpr double kM1 = 2147483648.0;  // 2^31
}  // namespace

const GaussianTable& GaussianTable::instance() {
  static const GaussianTable table;
  return table;
}

double GaussianTable::fast_exp_half_sq(double x) { return std::exp(-0.5 * x * x); }

GaussianTable::GaussianTable() {
  double dn = kTailR, tn = kTailR;
  const double q = kArea / std::exp(-0.5 * dn * dn);
  kn_[0] = static_cast<std::uint32_t>((dn / q) * kM1);
  kn_[1] = 0;
  wn_[0] = q / kM1;
  wn_[127] = dn / kM1;
  fn_[0] = 1.0;
  fn_[127] = std::exp(-0.5 * dn * dn);
  for (int i = 126; i >= 1; --i) {
    dn = std::sqrt(-2.0 * std::log(kArea / dn + std::exp(-0.5 * dn * dn)));
    kn_[i + 1] = static_cast<std::uint32_t>((dn / tn) * kM1);
    tn = dn;
    fn_[i] = std::exp(-0.5 * dn * dn);
    wn_[i] = dn / kM1;
  }
}

void NormalFiller::generate_chunk(float* z_cos, float* z_sin) {
  constexpr std::size_t np = kChunkPairs;
  alignas(64) float u1[np], u2[np];
  constexpr float kScale = 1.0f / 16777216.0f;  // 2^-24
  auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  for (std::size_t i = 0; i < np; i += kLanes) {
    std::uint64_t bits[kLanes];
    for (int l = 0; l < kLanes; ++l) {  // xoshiro256++ across lanes, vectorisable
      bits[l] = rotl(state_[0][l] + state_[3][l], 23) + state_[0][l];
      const std::uint64_t t = state_[1][l] << 17;
      state_[2][l] ^= state_[0][l];
      state_[3][l] ^= state_[1][l];
      state_[1][l] ^= state_[2][l];
      state_[0][l] ^= state_[3][l];
      state_[2][l] ^= t;
      state_[3][l] = rotl(state_[3][l], 45);
    }
    for (int l = 0; l < kLanes; ++l) {
      u1[i + l] = (static_cast<float>(static_cast<std::uint32_t>(bits[l] >> 40)) + 1.0f) * kScale;
      u2[i + l] = static_cast<float>(static_cast<std::uint32_t>(bits[l]) >> 8) * kScale;
    }
  }
  using Arr = Eigen::Array<float, Eigen::Dynamic, 1>;
  using Map = Eigen::Map<Arr, Eigen::Aligned32>;
  Map a1(u1, np), a2(u2, np);
  alignas(32) float rbuf[np];
  Map r(rbuf, np);
  r = (-2.0f * a1.log()).sqrt();
  const auto angle = (2.0f * std::numbers::pi_v<float>)*a2;
  Eigen::Map<Arr> zc(z_cos, np), zs(z_sin, np);
  zc = r * angle.cos();
  zs = r * angle.sin();
}

void NormalFiller::fill(float* out, std::size_t n) {
  // drain buffered leftover, then write whole chunks straight into out
  while (n > 0 && avail_ > 0) {
    *out++ = buf_[2 * kChunkPairs - avail_];
    --avail_;
    --n;
  }
  while (n >= 2 * kChunkPairs) {
    generate_chunk(out, out + kChunkPairs);
    out += 2 * kChunkPairs;
    n -= 2 * kChunkPairs;
  }
  if (n > 0) {
    generate_chunk(buf_, buf_ + kChunkPairs);
    avail_ = 2 * kChunkPairs;
    std::memcpy(out, buf_, n * sizeof(float));
    avail_ -= n;
  }
}

}  // namespace specdyn
