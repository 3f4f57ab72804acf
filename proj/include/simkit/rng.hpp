#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simkit/detail/binio.hpp"
#include "simkit/detail/hash.hpp"
#include "simkit/errors.hpp"

namespace simkit {

/// Identifies one pseudorandom stream. Distinct keys give mutually
/// independent streams; derivation depends on nothing else (no process,
/// thread or call-order state).
struct StreamKey {
  std::uint64_t global_seed = 0;
  std::string model_name;
  std::uint64_t chunk_index = 0;  // 0 is reserved for model construction
};

/// Serializable full generator state. `algorithm`/`version` guard the
/// on-disk format: restoring a state produced by a different generator is
/// an error, never a silent reinterpretation.
struct RngState {
  std::string algorithm;
  int version = 0;
  std::string state;  // raw bytes; hex-encoded when embedded in files

  friend bool operator==(const RngState&, const RngState&) = default;
};

inline constexpr const char* kRngAlgorithm = "philox4x32-10";
inline constexpr int kRngVersion = 1;

namespace detail {

// Philox 4x32-10 block function (Random123 constants).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u;
  constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
    std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
    std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

// AS 241 (PPND16): double-precision inverse of the standard normal CDF.
// Rational approximations; the only libm calls are sqrt and log in the
// tail branches, so evaluation cost and stream consumption are fixed.
inline double inverse_normal_cdf(double p) {
  constexpr double a[8] = {3.3871328727963666080e0,  1.3314166789178437745e2,
                           1.9715909503065514427e3,  1.3731693765509461125e4,
                           4.5921953931549871457e4,  6.7265770927008700853e4,
                           3.3430575583588128105e4,  2.5090809287301226727e3};
  constexpr double b[8] = {1.0,
                           4.2313330701600911252e1,
                           6.8718700749205790830e2,
                           5.3941960214247511077e3,
                           2.1213794301586595867e4,
                           3.9307895800092710610e4,
                           2.8729085735721942674e4,
                           5.2264952788528545610e3};
  constexpr double c[8] = {1.42343711074968357734e0,  4.63033784615654529590e0,
                           5.76949722146069140550e0,  3.64784832476320460504e0,
                           1.27045825245236838258e0,  2.41780725177450611770e-1,
                           2.27238449892691845833e-2, 7.74545014278341407640e-4};
  constexpr double d[8] = {1.0,
                           2.05319162663775882187e0,
                           1.67638483018380384940e0,
                           6.89767334985100004550e-1,
                           1.48103976427480074590e-1,
                           1.51986665636164571966e-2,
                           5.47593808499534494600e-4,
                           1.05075007164441684324e-9};
  constexpr double e[8] = {6.65790464350110377720e0,  5.46378491116411436990e0,
                           1.78482653991729133580e0,  2.96560571828504891230e-1,
                           2.65321895265761230930e-2, 1.24266094738807843860e-3,
                           2.71155556874348757815e-5, 2.01033439929228813265e-7};
  constexpr double f[8] = {1.0,
                           5.99832206555887937690e-1,
                           1.36929880922735805310e-1,
                           1.48753612908506148525e-2,
                           7.86869131145613259100e-4,
                           1.84631831751005468180e-5,
                           1.42151175831644588870e-7,
                           2.04426310338993978564e-15};
  auto poly = [](const double (&coef)[8], double x) {
    double acc = coef[7];
    for (int i = 6; i >= 0; --i) acc = acc * x + coef[i];
    return acc;
  };
  if (!(p > 0.0 && p < 1.0)) throw ContractError("inverse_normal_cdf requires p in (0,1)");
  double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = poly(c, r) / poly(d, r);
  } else {
    r -= 5.0;
    z = poly(e, r) / poly(f, r);
  }
  return (q < 0.0) ? -z : z;
}

}  // namespace detail

/// One pseudorandom stream. Single-owner: a stream is consumed by exactly
/// one task at a time. Deriving and restoring are safe from many threads.
///
/// Every variate consumes a fixed number of 32-bit words (two per double),
/// so captured end states are independent of the values drawn.
class RngStream {
 public:
  static RngStream derive(const StreamKey& key) {
    detail::Fnv1a64 h;
    h.update("simkit.stream.v1");
    h.update("\0", 1);
    append_u64(h, key.global_seed);
    h.update(key.model_name);
    h.update("\0", 1);
    append_u64(h, key.chunk_index);
    return RngStream(detail::mix64(h.digest()));
  }

  static RngStream restore(const RngState& s) {
    if (s.algorithm != kRngAlgorithm || s.version != kRngVersion)
      throw VersionMismatchError("RNG state tagged \"" + s.algorithm + "\" v" +
                                 std::to_string(s.version) + "; this build implements \"" +
                                 kRngAlgorithm + "\" v" + std::to_string(kRngVersion));
    if (s.state.size() != kStateBytes)
      throw VersionMismatchError("RNG state has " + std::to_string(s.state.size()) +
                                 " bytes, expected " + std::to_string(kStateBytes));
    RngStream g;
    detail::Reader r(s.state, "RngState");
    g.key_ = {r.u32(), r.u32()};
    g.ctr_ = {r.u32(), r.u32(), r.u32(), r.u32()};
    g.sub_ = r.u8();
    if (g.sub_ > 3) throw VersionMismatchError("RNG state sub-index out of range");
    g.origin_ = s;
    return g;
  }

  RngState capture() const {
    RngState s;
    s.algorithm = kRngAlgorithm;
    s.version = kRngVersion;
    detail::put_u32(s.state, key_[0]);
    detail::put_u32(s.state, key_[1]);
    for (std::uint32_t c : ctr_) detail::put_u32(s.state, c);
    detail::put_u8(s.state, static_cast<std::uint8_t>(sub_));
    return s;
  }

  /// State this stream was derived from or restored to. fork() keys off it,
  /// so forked substreams do not depend on how much of the parent stream
  /// has been consumed since.
  const RngState& origin() const { return origin_; }

  /// Independent substream keyed by (origin state, ordinal).
  RngStream fork(std::uint64_t ordinal) const {
    detail::Fnv1a64 h;
    h.update("simkit.substream.v1");
    h.update("\0", 1);
    h.update(origin_.state);
    append_u64(h, ordinal);
    return RngStream(detail::mix64(h.digest()));
  }

  std::uint32_t next_u32() {
    if (!block_valid_) {
      block_ = detail::philox4x32_10(ctr_, key_);
      block_valid_ = true;
    }
    std::uint32_t v = block_[sub_];
    if (++sub_ == 4) {
      sub_ = 0;
      block_valid_ = false;
      for (auto& c : ctr_) {
        if (++c != 0) break;  // 128-bit counter increment with carry
      }
    }
    return v;
  }

  /// 53-bit uniform in [0, 1).
  double uniform01() {
    std::uint32_t a = next_u32();
    std::uint32_t b = next_u32();
    return ((a >> 5) * 67108864.0 + (b >> 6)) * (1.0 / 9007199254740992.0);
  }

  /// Uniform in the open interval (0, 1); safe input for inverse CDFs.
  double open01() {
    std::uint32_t a = next_u32();
    std::uint32_t b = next_u32();
    return ((a >> 5) * 67108864.0 + (b >> 6) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal via the inverse CDF. Consumes exactly two 32-bit words.
  double normal() { return detail::inverse_normal_cdf(open01()); }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Uniform index in [0, n). Consumes exactly two 32-bit words.
  std::size_t index_below(std::size_t n) {
    if (n == 0) throw ContractError("index_below(0)");
    auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return idx < n ? idx : n - 1;
  }

 private:
  static constexpr std::size_t kStateBytes = 25;  // key(8) + counter(16) + sub(1)

  RngStream() = default;
  explicit RngStream(std::uint64_t key64) {
    key_ = {static_cast<std::uint32_t>(key64), static_cast<std::uint32_t>(key64 >> 32)};
    ctr_ = {0, 0, 0, 0};
    sub_ = 0;
    origin_ = capture();
  }

  static void append_u64(detail::Fnv1a64& h, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    h.update(b, 8);
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  int sub_ = 0;
  std::array<std::uint32_t, 4> block_{};
  bool block_valid_ = false;
  RngState origin_;
};

/// Fisher–Yates permutation of 0..n-1 drawn from `rng`.
inline std::vector<std::size_t> random_permutation(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.index_below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace simkit
