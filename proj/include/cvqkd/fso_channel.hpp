#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cvqkd/constellation.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

/// Weak-fluctuation fading model fitted by two parameters: a lognormal
/// scintillation factor (unit mean, variance sigma_I) and a pointing-loss
/// factor with density beta_jitter * u^(beta_jitter - 1) on (0, 1].
struct TurbulenceParams {
  double sigma_I = 0.0;
  double beta_jitter = 1.0;
  bool no_jitter = false;  // beta_jitter -> infinity limit
  double mean_T = 1.0;

  void validate() const {
    if (sigma_I < 0.0) throw ValidationError("sigma_I must be >= 0");
    if (!no_jitter && !(beta_jitter > 0.0)) throw ValidationError("beta_jitter must be > 0");
    if (!(mean_T > 0.0) || mean_T > 1.0) throw ValidationError("mean_T must be in (0, 1]");
  }
};

/// Trusted receiver: quantum efficiency eta and electronic noise derived
/// from the shot-noise clearance, v_el = 10^(-clearance_db / 10) SNU.
struct ReceiverModel {
  double eta = 1.0;
  double clearance_db = std::numeric_limits<double>::infinity();
  double xi = 0.0;  // excess noise (SNU), channel-input referred

  double electronic_noise() const { return std::pow(10.0, -clearance_db / 10.0); }

  void validate() const {
    if (!(eta > 0.0) || eta > 1.0) throw ValidationError("eta must be in (0, 1]");
    if (!(clearance_db > 0.0)) throw ValidationError("clearance_db must be > 0");
    if (xi < 0.0) throw ValidationError("xi must be >= 0");
  }
};

/// One CV-QKD block: Alice's transmitted quadratures x, Bob's measured
/// quadratures y (interleaved Re, Im), and the fading realization.
struct QuantumBlock {
  std::vector<double> x;
  std::vector<double> y;
  double T_block = 1.0;
  std::size_t block_size = 0;  // complex symbols; |x| = |y| = 2 * block_size
};

/// Per-block realized transmittances. Each raw sample is the product of
/// the lognormal scintillation factor and the pointing-loss factor; the
/// batch is rescaled so its empirical mean equals mean_T, then clipped to
/// (0, 1]. With both fluctuation sources off every sample equals mean_T.
inline std::vector<double> sample_transmittance(const TurbulenceParams& p,
                                                std::size_t n_blocks,
                                                RandomStream& rng) {
  p.validate();
  std::vector<double> t(n_blocks);
  // lognormal with unit mean and variance sigma_I: ln I_s ~ N(-w/2, w),
  // w = ln(1 + sigma_I)
  const double w = std::log(1.0 + p.sigma_I);
  const double mu = -0.5 * w;
  const double sd = std::sqrt(w);
  double sum = 0.0;
  for (std::size_t i = 0; i < n_blocks; ++i) {
    const double scint = (p.sigma_I > 0.0) ? std::exp(mu + sd * rng.normal()) : 1.0;
    const double point = p.no_jitter ? 1.0 : std::pow(rng.uniform_pos(), 1.0 / p.beta_jitter);
    t[i] = scint * point;
    sum += t[i];
  }
  const double scale = p.mean_T * static_cast<double>(n_blocks) / sum;
  for (double& v : t) v = std::min(v * scale, 1.0);
  return t;
}

inline std::vector<double> sample_transmittance(const TurbulenceParams& p,
                                                std::size_t n_blocks,
                                                std::uint64_t seed) {
  RandomStream rng(seed);
  return sample_transmittance(p, n_blocks, rng);
}

/// Heterodyne quantum channel acting per real quadrature:
///   y = sqrt(eta * T / 2) * x + z,  Var(z) = 1 + eta * T * xi / 2 + v_el
/// in SNU. The 1/2 factors are the heterodyne split; the unit term is the
/// shot noise of the measured quadrature.
inline std::vector<double> transmit(std::span<const double> x, double T_block,
                                    const ReceiverModel& r, RandomStream& rng) {
  r.validate();
  if (!(T_block > 0.0) || T_block > 1.0)
    throw ValidationError("T_block must be in (0, 1]");
  const double gain = std::sqrt(r.eta * T_block / 2.0);
  const double noise_var = 1.0 + r.eta * T_block * r.xi / 2.0 + r.electronic_noise();
  const double noise_sd = std::sqrt(noise_var);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw ValidationError("transmit: non-finite input sample");
    y[i] = gain * x[i] + noise_sd * rng.normal();
  }
  return y;
}

inline std::vector<double> transmit(std::span<const double> x, double T_block,
                                    const ReceiverModel& r, std::uint64_t seed) {
  RandomStream rng(seed);
  return transmit(x, T_block, r, rng);
}

/// Draws one fading realization, samples Alice's symbols, and runs them
/// through the channel. Deterministic for a fixed seed.
inline QuantumBlock generate_block(const ShapedConstellation& c, const TurbulenceParams& p,
                                   const ReceiverModel& r, std::size_t block_size,
                                   std::uint64_t seed) {
  QuantumBlock b;
  b.block_size = block_size;
  RandomStream fade_rng = RandomStream::derive(seed, 0);
  RandomStream sym_rng = RandomStream::derive(seed, 1);
  RandomStream chan_rng = RandomStream::derive(seed, 2);
  b.T_block = sample_transmittance(p, 1, fade_rng)[0];
  b.x = interleave_quadratures(sample_symbols(c, block_size, sym_rng));
  b.y = transmit(b.x, b.T_block, r, chan_rng);
  return b;
}

struct ChannelEstimate {
  double T_hat = 0.0;
  double xi_hat = 0.0;
};

/// Maximum-likelihood estimates of (T, xi) from the x-y covariance under
/// the transmit() model, with eta and v_el known from calibration:
///   sqrt(eta T / 2) = Cov(x, y) / Var(x)
///   xi = (Var(y - gain x) - 1 - v_el) * 2 / (eta T)
inline ChannelEstimate estimate_channel(const QuantumBlock& b, const ReceiverModel& r) {
  const std::size_t n = b.x.size();
  if (b.block_size < 10000)
    throw EstimationError("block too small for parameter estimation (need >= 1e4 symbols)");
  if (n != b.y.size()) throw EstimationError("x/y length mismatch");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += b.x[i];
    my += b.y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double vxx = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    vxx += (b.x[i] - mx) * (b.x[i] - mx);
    cxy += (b.x[i] - mx) * (b.y[i] - my);
  }
  vxx /= static_cast<double>(n);
  cxy /= static_cast<double>(n);
  if (vxx < 1e-12) throw EstimationError("degenerate block: Var(x) ~ 0");

  const double gain_hat = cxy / vxx;
  ChannelEstimate e;
  e.T_hat = 2.0 * gain_hat * gain_hat / r.eta;
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = (b.y[i] - my) - gain_hat * (b.x[i] - mx);
    resid += d * d;
  }
  resid /= static_cast<double>(n);
  e.xi_hat = (resid - 1.0 - r.electronic_noise()) * 2.0 / (r.eta * e.T_hat);
  return e;
}

}  // namespace cvqkd
