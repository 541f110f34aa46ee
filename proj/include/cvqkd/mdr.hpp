#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <vector>

#include "cvqkd/constellation.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {
namespace mdr {

/// Valid reconciliation dimensions. Division-algebra rotations cover
/// d <= 8; larger d uses a two-reflection orthogonal map.
inline bool is_valid_dimension(int d) {
  return d >= 1 && d <= 256 && (d & (d - 1)) == 0;
}

inline void require_dimension(int d) {
  if (!is_valid_dimension(d))
    throw ValidationError("reconciliation dimension must be a power of two in [1, 256], got " +
                          std::to_string(d));
}

// ---------------------------------------------------------------------------
// Cayley-Dickson algebra (reals, complexes, quaternions, octonions).
// Convention: (a,b)(c,d) = (ac - conj(d) b, da + b conj(c)). Octonions are
// alternative, so (u * y^-1) * y = u holds even without associativity.
// ---------------------------------------------------------------------------

inline void cd_conj(std::span<const double> a, std::span<double> out) {
  out[0] = a[0];
  for (std::size_t i = 1; i < a.size(); ++i) out[i] = -a[i];
}

inline void cd_mul(std::span<const double> a, std::span<const double> b,
                   std::span<double> out) {
  const std::size_t n = a.size();
  if (n == 1) {
    out[0] = a[0] * b[0];
    return;
  }
  const std::size_t h = n / 2;
  std::vector<double> t1(h), t2(h), cj(h);
  auto a1 = a.subspan(0, h), a2 = a.subspan(h, h);
  auto b1 = b.subspan(0, h), b2 = b.subspan(h, h);
  // out1 = a1 b1 - conj(b2) a2
  cd_mul(a1, b1, std::span<double>(t1));
  cd_conj(b2, std::span<double>(cj));
  cd_mul(std::span<const double>(cj), a2, std::span<double>(t2));
  for (std::size_t i = 0; i < h; ++i) out[i] = t1[i] - t2[i];
  // out2 = b2 a1 + a2 conj(b1)
  cd_mul(b2, a1, std::span<double>(t1));
  cd_conj(b1, std::span<double>(cj));
  cd_mul(a2, std::span<const double>(cj), std::span<double>(t2));
  for (std::size_t i = 0; i < h; ++i) out[h + i] = t1[i] + t2[i];
}

// ---------------------------------------------------------------------------
// Chunking
// ---------------------------------------------------------------------------

/// y split into unit-norm chunks of length d; trailing remainder dropped.
struct ChunkedVector {
  int d = 0;
  std::size_t count = 0;
  std::vector<double> unit;   // count * d values, each chunk unit norm
  std::vector<double> norms;  // count values

  std::span<const double> chunk(std::size_t i) const {
    return {unit.data() + static_cast<std::ptrdiff_t>(i) * d, static_cast<std::size_t>(d)};
  }
};

inline ChunkedVector chunk_and_normalize(std::span<const double> y, int d) {
  require_dimension(d);
  ChunkedVector out;
  out.d = d;
  out.count = y.size() / static_cast<std::size_t>(d);
  out.unit.resize(out.count * static_cast<std::size_t>(d));
  out.norms.resize(out.count);
  for (std::size_t c = 0; c < out.count; ++c) {
    const double* src = y.data() + c * static_cast<std::size_t>(d);
    double n2 = 0.0;
    for (int i = 0; i < d; ++i) n2 += src[i] * src[i];
    if (n2 <= 0.0)
      throw ValidationError("degenerate zero-norm chunk at index " + std::to_string(c));
    const double inv = 1.0 / std::sqrt(n2);
    double* dst = out.unit.data() + c * static_cast<std::size_t>(d);
    for (int i = 0; i < d; ++i) dst[i] = src[i] * inv;
    out.norms[c] = std::sqrt(n2);
  }
  return out;
}

/// Maps d codeword bits onto the unit sphere: bit 0 -> +1/sqrt(d),
/// bit 1 -> -1/sqrt(d).
inline std::vector<double> spherical_word(std::span<const std::uint8_t> bits, int d) {
  require_dimension(d);
  if (bits.size() != static_cast<std::size_t>(d))
    throw ValidationError("spherical word needs exactly d bits");
  const double a = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> u(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) u[static_cast<std::size_t>(i)] = bits[static_cast<std::size_t>(i)] ? -a : a;
  return u;
}

// ---------------------------------------------------------------------------
// Rotation messages
// ---------------------------------------------------------------------------

/// The orthogonal map Bob publishes per chunk. For d <= 8 it is the
/// division-algebra coefficient vector m with Q v = m * v. For d > 8 it
/// is the pair of Householder reflection vectors of Q = H(w2) H(w1);
/// an all-zero reflection vector denotes the identity.
struct RotationMessage {
  int d = 0;
  bool householder = false;
  std::vector<double> payload;  // m (d values) or w1 ++ w2 (2d values)

  std::vector<std::uint8_t> serialize() const {
    const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    std::vector<std::uint8_t> out(4 + 8 * payload.size());
    std::memcpy(out.data(), &len, 4);
    std::memcpy(out.data() + 4, payload.data(), 8 * payload.size());
    return out;
  }

  static RotationMessage deserialize(std::span<const std::uint8_t> bytes, int d) {
    require_dimension(d);
    if (bytes.size() < 4) throw ProtocolError("rotation message truncated");
    std::uint32_t len = 0;
    std::memcpy(&len, bytes.data(), 4);
    if (bytes.size() != 4 + 8 * static_cast<std::size_t>(len))
      throw ProtocolError("rotation message length mismatch");
    RotationMessage m;
    m.d = d;
    m.householder = d > 8;
    const std::size_t expect = m.householder ? 2 * static_cast<std::size_t>(d)
                                             : static_cast<std::size_t>(d);
    if (len != expect) throw ProtocolError("rotation message payload size mismatch");
    m.payload.resize(len);
    std::memcpy(m.payload.data(), bytes.data() + 4, 8 * len);
    return m;
  }
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void require_unit(std::span<const double> v, const char* what) {
  if (std::abs(norm(v) - 1.0) > 1e-8)
    throw ValidationError(std::string(what) + " must be unit norm");
}

/// Reflection vector sending `from` to `to` (both unit): w = (from - to)
/// normalized; H(w) from = to. Returns false for the identity case.
inline bool reflection_between(std::span<const double> from, std::span<const double> to,
                               std::span<double> w) {
  double n2 = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    w[i] = from[i] - to[i];
    n2 += w[i] * w[i];
  }
  if (n2 < 1e-24) return false;
  const double inv = 1.0 / std::sqrt(n2);
  for (std::size_t i = 0; i < from.size(); ++i) w[i] *= inv;
  return true;
}

inline void apply_reflection(std::span<const double> w, std::span<double> v) {
  double n2 = 0.0;
  for (const double wi : w) n2 += wi * wi;
  if (n2 < 0.5) return;  // zero vector encodes the identity
  const double proj = 2.0 * dot(w, v);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= proj * w[i];
}

}  // namespace detail

/// Bob's side: computes the map Q with Q y_hat = u.
///   d <= 8: m = u * conj(y_hat) in the division algebra, so m * y_hat = u.
///   d  > 8: Q = H(w2) H(w1) through a canonical axis e: H(w1) y_hat = e,
///           H(w2) e = u. When y_hat and u are antipodal, e is chosen as
///           the coordinate axis most orthogonal to them so both
///           reflections stay well conditioned.
inline RotationMessage encode_rotation(std::span<const double> y_hat,
                                       std::span<const double> u, int d) {
  require_dimension(d);
  if (y_hat.size() != static_cast<std::size_t>(d) || u.size() != static_cast<std::size_t>(d))
    throw ValidationError("encode_rotation: vector length != d");
  detail::require_unit(y_hat, "y_hat");
  detail::require_unit(u, "u");

  RotationMessage msg;
  msg.d = d;
  if (d <= 8) {
    msg.householder = false;
    msg.payload.resize(static_cast<std::size_t>(d));
    std::vector<double> yc(static_cast<std::size_t>(d));
    cd_conj(y_hat, std::span<double>(yc));
    cd_mul(u, std::span<const double>(yc), std::span<double>(msg.payload));
    return msg;
  }

  msg.householder = true;
  msg.payload.assign(2 * static_cast<std::size_t>(d), 0.0);
  std::span<double> w1(msg.payload.data(), static_cast<std::size_t>(d));
  std::span<double> w2(msg.payload.data() + d, static_cast<std::size_t>(d));

  std::vector<double> axis(static_cast<std::size_t>(d), 0.0);
  std::size_t axis_idx = 0;
  if (detail::dot(y_hat, u) < -1.0 + 1e-12) {
    double best = std::abs(y_hat[0]);
    for (std::size_t i = 1; i < y_hat.size(); ++i) {
      if (std::abs(y_hat[i]) < best) {
        best = std::abs(y_hat[i]);
        axis_idx = i;
      }
    }
  }
  axis[axis_idx] = 1.0;

  std::vector<double> tmp(static_cast<std::size_t>(d));
  if (!detail::reflection_between(y_hat, axis, w1)) std::fill(w1.begin(), w1.end(), 0.0);
  if (!detail::reflection_between(axis, u, w2)) std::fill(w2.begin(), w2.end(), 0.0);
  return msg;
}

/// Alice's side: applies the published map to her normalized chunk.
inline std::vector<double> apply_rotation(const RotationMessage& msg,
                                          std::span<const double> x_hat) {
  if (x_hat.size() != static_cast<std::size_t>(msg.d))
    throw ValidationError("apply_rotation: vector length != d");
  std::vector<double> v(x_hat.begin(), x_hat.end());
  if (!msg.householder) {
    std::vector<double> out(v.size());
    cd_mul(std::span<const double>(msg.payload), std::span<const double>(v),
           std::span<double>(out));
    return out;
  }
  std::span<const double> w1(msg.payload.data(), static_cast<std::size_t>(msg.d));
  std::span<const double> w2(msg.payload.data() + msg.d, static_cast<std::size_t>(msg.d));
  detail::apply_reflection(w1, v);
  detail::apply_reflection(w2, v);
  return v;
}

/// LLRs for the virtual binary channel seen after rotation. norm_y is the
/// chunk norm of y standardized to unit sample variance; snr is the
/// per-quadrature SNR of the block. With gamma = (sqrt(d)/2) * norm_y *
/// sqrt(snr (1 + snr)) the LLR is 4 gamma r_i / sqrt(d); positive LLR
/// means bit 0 (symbol +1/sqrt(d)). The chunk norm of x is approximated
/// by its ensemble mean, which is exact in the Gaussian-modulation limit.
inline std::vector<double> compute_llrs(std::span<const double> rotated, double norm_y,
                                        double channel_snr, int d) {
  require_dimension(d);
  if (!(channel_snr > 0.0)) throw ValidationError("channel_snr must be > 0");
  if (rotated.size() != static_cast<std::size_t>(d))
    throw ValidationError("compute_llrs: vector length != d");
  const double scale = 2.0 * norm_y * std::sqrt(channel_snr * (1.0 + channel_snr));
  std::vector<double> llr(rotated.size());
  for (std::size_t i = 0; i < rotated.size(); ++i) llr[i] = scale * rotated[i];
  return llr;
}

// ---------------------------------------------------------------------------
// Virtual-channel fidelity
// ---------------------------------------------------------------------------

/// How far the virtual channel is from the ideal BI-AWGN of the same
/// conditional capacity. Simulates chunks at the given SNR, standardizes
/// each rotated component by the exact conditional Gaussian statistics of
/// the chunk (which are the BI-AWGN statistics), and returns the KL
/// divergence (nats) of the pooled residuals against N(0, 1) over a fixed
/// histogram. Gaussian modulation makes the residuals exactly standard
/// normal for every d; shaped constellations converge as d grows.
/// Pass nullptr for Gaussian modulation.
inline double virtual_channel_fidelity(int d, const ShapedConstellation* c, double snr,
                                       std::size_t n, std::uint64_t seed) {
  require_dimension(d);
  if (n < 10000) throw ValidationError("fidelity estimate needs n >= 1e4 samples");
  if (!(snr > 0.0)) throw ValidationError("snr must be > 0");
  RandomStream rng(seed);

  const std::size_t chunks = n / static_cast<std::size_t>(d);
  const double g = std::sqrt(snr);           // y = g x + z, Var x = 1, Var z = 1
  const double sy2 = 1.0 + snr;              // Var y
  const double bwd_gain = g / sy2;           // c in x = c y + w
  const double wvar = 1.0 / (1.0 + snr);     // Var w

  constexpr int kBins = 41;
  constexpr double kLo = -5.0, kHi = 5.0;
  std::vector<std::uint64_t> hist(kBins + 2, 0);
  std::uint64_t total = 0;

  std::vector<double> x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(d));
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(d));
  for (std::size_t ci = 0; ci < chunks; ++ci) {
    if (c != nullptr) {
      const auto sym = sample_symbols(*c, (static_cast<std::size_t>(d) + 1) / 2, rng);
      const double sd = std::sqrt(c->variance() / 2.0);
      for (int i = 0; i < d; ++i) {
        const auto& s = sym[static_cast<std::size_t>(i) / 2];
        x[static_cast<std::size_t>(i)] = (i % 2 == 0 ? s.real() : s.imag()) / sd;
      }
    } else {
      for (auto& v : x) v = rng.normal();
    }
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = g * x[i] + rng.normal();
    for (auto& b : bits) b = rng.bit() ? 1 : 0;

    double ny2 = 0.0, nx2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      ny2 += y[i] * y[i];
      nx2 += x[i] * x[i];
    }
    const double ny = std::sqrt(ny2), nx = std::sqrt(nx2);
    std::vector<double> yh(y), xh(x);
    for (auto& v : yh) v /= ny;
    for (auto& v : xh) v /= nx;

    const auto u = spherical_word(bits, d);
    const auto msg = encode_rotation(yh, u, d);
    const auto r = apply_rotation(msg, xh);

    // exact conditional statistics given (|x|, |y|) for Gaussian input
    const double mean_amp = bwd_gain * ny / (std::sqrt(static_cast<double>(d)) * nx);
    const double sd_amp = std::sqrt(wvar) / nx;
    for (int i = 0; i < d; ++i) {
      const double sgn = bits[static_cast<std::size_t>(i)] ? -1.0 : 1.0;
      const double t = (r[static_cast<std::size_t>(i)] * sgn - mean_amp) / sd_amp;
      int bin;
      if (t < kLo) {
        bin = 0;
      } else if (t >= kHi) {
        bin = kBins + 1;
      } else {
        bin = std::min(1 + static_cast<int>((t - kLo) / (kHi - kLo) * kBins), kBins);
      }
      ++hist[static_cast<std::size_t>(bin)];
      ++total;
    }
  }

  // KL(empirical || N(0,1)) over the binned support
  const auto phi = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  double kl = 0.0;
  for (int bi = 0; bi < kBins + 2; ++bi) {
    if (hist[static_cast<std::size_t>(bi)] == 0) continue;
    const double p_emp = static_cast<double>(hist[static_cast<std::size_t>(bi)]) /
                         static_cast<double>(total);
    double lo, hi;
    if (bi == 0) {
      lo = -1e9;
      hi = kLo;
    } else if (bi == kBins + 1) {
      lo = kHi;
      hi = 1e9;
    } else {
      lo = kLo + (bi - 1) * (kHi - kLo) / kBins;
      hi = lo + (kHi - kLo) / kBins;
    }
    const double p_ref = std::max(phi(hi) - phi(lo), 1e-300);
    kl += p_emp * std::log(p_emp / p_ref);
  }
  return kl;
}

}  // namespace mdr
}  // namespace cvqkd
