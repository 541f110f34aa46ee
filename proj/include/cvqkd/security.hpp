#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "cvqkd/constellation.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/fso_channel.hpp"

namespace cvqkd {

/// Everything the security analysis needs besides the channel estimate.
/// xi is channel-input referred; v_el is electronic noise per measured
/// quadrature, consistent with the transmit() and snr_of() conventions.
struct SecurityParams {
  double V_A = 7.44;
  double eta = 0.4;
  double xi = 0.0045;
  double v_el = 0.1;
  std::size_t block_size = 6800000;   // complex symbols per CV-QKD block
  double epsilon_pe = 1e-10;

  static SecurityParams from_receiver(double V_A, const ReceiverModel& r,
                                      std::size_t block_size, double epsilon_pe = 1e-10) {
    SecurityParams p;
    p.V_A = V_A;
    p.eta = r.eta;
    p.xi = r.xi;
    p.v_el = r.electronic_noise();
    p.block_size = block_size;
    p.epsilon_pe = epsilon_pe;
    return p;
  }

  void validate() const {
    if (!(V_A > 0.0)) throw ValidationError("V_A must be > 0");
    if (!(eta > 0.0) || eta > 1.0) throw ValidationError("eta must be in (0, 1]");
    if (xi < 0.0) throw ValidationError("xi must be >= 0");
    if (v_el < 0.0) throw ValidationError("v_el must be >= 0");
    if (!(epsilon_pe > 0.0) || !(epsilon_pe < 1.0))
      throw ValidationError("epsilon_pe must be in (0, 1)");
  }
};

/// Per-quadrature SNR of the heterodyne channel.
inline double snr_of(const SecurityParams& p, double T) {
  if (!(T > 0.0) || T > 1.0) throw ValidationError("T must be in (0, 1]");
  return (p.eta * T * p.V_A / 2.0) / (1.0 + p.eta * T * p.xi / 2.0 + p.v_el);
}

/// Bosonic entropy of a thermal state with mean photon number x.
inline double gfun(double x) {
  if (x < 1e-9) {
    if (x <= 0.0) return 0.0;
    // series: ln-domain expansion avoids log(0)
    return (x - x * std::log(x) + 0.5 * x * x) / std::numbers::ln2;
  }
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature (probabilists' weight), Golub-Welsch
// ---------------------------------------------------------------------------

struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1 (weight function N(0,1))

  explicit GaussHermite(int order) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int i = 1; i < order; ++i) {
      const double b = std::sqrt(static_cast<double>(i));
      J(i, i - 1) = b;
      J(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    nodes.resize(static_cast<std::size_t>(order));
    weights.resize(static_cast<std::size_t>(order));
    for (int i = 0; i < order; ++i) {
      nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
      const double v0 = es.eigenvectors()(0, i);
      weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
  }
};

/// Mutual information of a discrete unit-variance PAM input over a real
/// AWGN channel at the given SNR, in bits per real dimension.
inline double pam_mutual_information(const std::vector<double>& levels,
                                     const std::vector<double>& probs, double snr,
                                     int quad_order = 96) {
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) mean += probs[i] * levels[i];
  for (std::size_t i = 0; i < levels.size(); ++i)
    var += probs[i] * (levels[i] - mean) * (levels[i] - mean);
  std::vector<double> x(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) x[i] = (levels[i] - mean) / std::sqrt(var);

  const GaussHermite gh(quad_order);
  const double sigma2 = 1.0 / snr;
  const double sigma = std::sqrt(sigma2);
  double mi = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < gh.nodes.size(); ++k) {
      const double n = sigma * gh.nodes[k];
      double den = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[i] + n - x[j];
        den += probs[j] * std::exp(-(diff * diff - n * n) / (2.0 * sigma2));
      }
      inner += gh.weights[k] * std::log2(1.0 / den);
    }
    mi += probs[i] * inner;
  }
  return mi;
}

/// Heterodyne mutual information between Alice and Bob in bits per
/// complex symbol: log2(1 + snr) for Gaussian modulation. Each complex
/// symbol feeds two binary virtual-channel uses, so the per-quadrature
/// rate the reconciliation code works against is half this value.
inline double mutual_information(const SecurityParams& p, double T) {
  return std::log2(1.0 + snr_of(p, T));
}

/// Same, with the finite-constellation shaping penalty subtracted
/// (numerical integration, Gauss-Hermite order >= 64).
inline double mutual_information(const SecurityParams& p, double T,
                                 const ShapedConstellation& c) {
  const double s = snr_of(p, T);
  std::vector<double> levels, probs;
  c.pam_marginal(levels, probs);
  return 2.0 * pam_mutual_information(levels, probs, s, 96);
}

/// Shaping penalty in bits per complex symbol at a given per-quadrature
/// SNR: Gaussian capacity minus the shaped-constellation rate.
inline double shaping_penalty(const ShapedConstellation& c, double snr) {
  std::vector<double> levels, probs;
  c.pam_marginal(levels, probs);
  return std::log2(1.0 + snr) - 2.0 * pam_mutual_information(levels, probs, snr, 96);
}

// ---------------------------------------------------------------------------
// Gaussian-state machinery
// ---------------------------------------------------------------------------

inline Eigen::MatrixXd symplectic_form(int n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (int k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

/// Symplectic spectrum of an n-mode covariance matrix: the absolute
/// eigenvalues of i Omega cov, one per mode (pairs deduplicated).
inline std::vector<double> symplectic_spectrum(const Eigen::MatrixXd& cov) {
  const int dim = static_cast<int>(cov.rows());
  if (dim % 2 != 0 || cov.cols() != dim)
    throw ValidationError("covariance matrix must be 2n x 2n");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw ValidationError("covariance matrix must be symmetric");
  const int n = dim / 2;
  Eigen::MatrixXcd m = std::complex<double>(0.0, 1.0) * symplectic_form(n) * cov;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  std::vector<double> abs_vals(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) abs_vals[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i));
  std::sort(abs_vals.begin(), abs_vals.end(), std::greater<>());
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = abs_vals[static_cast<std::size_t>(2 * k)];
  return out;
}

/// Two-mode version returning (nu1, nu2), nu1 >= nu2.
inline std::pair<double, double> symplectic_eigenvalues(const Eigen::Matrix4d& cov) {
  const auto s = symplectic_spectrum(cov);
  return {s[0], s[1]};
}

namespace detail {

/// Alice-Bob covariance after the untrusted channel (T, xi), before the
/// trusted detector. Entangling-source variance V = V_A + 1.
inline Eigen::Matrix4d channel_output_cov(double V_A, double T, double xi) {
  const double V = V_A + 1.0;
  const double a = V;
  const double b = T * (V - 1.0) + 1.0 + T * xi;
  const double c = std::sqrt(T * (V * V - 1.0));
  Eigen::Matrix4d g = Eigen::Matrix4d::Zero();
  g(0, 0) = g(1, 1) = a;
  g(2, 2) = g(3, 3) = b;
  g(0, 2) = g(2, 0) = c;
  g(1, 3) = g(3, 1) = -c;
  return g;
}

inline double entropy_from_spectrum(const std::vector<double>& nus) {
  double s = 0.0;
  for (const double nu : nus) s += gfun((nu - 1.0) / 2.0);
  return s;
}

}  // namespace detail

/// Holevo bound chi_BE for reverse reconciliation with heterodyne
/// detection and a trusted receiver. Eve purifies the channel output
/// state only; detector efficiency and electronic noise enter Bob's
/// conditioning through a beamsplitter fed by one half of an EPR state,
/// not Eve's purification. Electronic noise is per measured quadrature,
/// which corresponds to 2 v_el before the heterodyne split.
inline double holevo_bound_at(double V_A, double T, double xi, double eta, double v_el) {
  const Eigen::Matrix4d g_ab = detail::channel_output_cov(V_A, T, xi);
  const auto nu12 = symplectic_spectrum(g_ab);
  for (const double nu : nu12) {
    if (nu < 1.0 - 1e-9)
      throw PhysicalityError("channel output covariance is non-physical (nu = " +
                             std::to_string(nu) + ")");
  }
  const double s_e = detail::entropy_from_spectrum(nu12);

  const bool ideal_detector = eta >= 1.0 - 1e-12 && v_el <= 1e-15;
  Eigen::MatrixXd full;
  int bob_mode;
  if (ideal_detector) {
    full = g_ab;
    bob_mode = 1;
  } else {
    if (eta >= 1.0 - 1e-12)
      throw ValidationError("eta = 1 with nonzero electronic noise is not representable; "
                            "use eta slightly below 1");
    // modes A, B, F, G; F-G is an EPR pair of variance v_d
    const double v_d = 1.0 + 2.0 * v_el / (1.0 - eta);
    const double c_fg = std::sqrt(std::max(v_d * v_d - 1.0, 0.0));
    full = Eigen::MatrixXd::Zero(8, 8);
    full.topLeftCorner<4, 4>() = g_ab;
    full(4, 4) = full(5, 5) = full(6, 6) = full(7, 7) = v_d;
    full(4, 6) = full(6, 4) = c_fg;
    full(5, 7) = full(7, 5) = -c_fg;
    // beamsplitter eta on modes (B, F)
    Eigen::MatrixXd bs = Eigen::MatrixXd::Identity(8, 8);
    const double se = std::sqrt(eta), sr = std::sqrt(1.0 - eta);
    for (int q = 0; q < 2; ++q) {
      const int i = 2 + q, j = 4 + q;
      bs(i, i) = se;
      bs(i, j) = sr;
      bs(j, i) = -sr;
      bs(j, j) = se;
    }
    full = bs * full * bs.transpose();
    bob_mode = 1;
  }

  // heterodyne conditioning on Bob's measured mode
  const int dim = static_cast<int>(full.rows());
  const int bi = 2 * bob_mode;
  std::vector<int> rest;
  for (int i = 0; i < dim; ++i)
    if (i != bi && i != bi + 1) rest.push_back(i);
  Eigen::MatrixXd g_rr(dim - 2, dim - 2), g_rb(dim - 2, 2);
  Eigen::Matrix2d g_bb = full.block<2, 2>(bi, bi);
  for (int i = 0; i < dim - 2; ++i) {
    for (int j = 0; j < dim - 2; ++j) g_rr(i, j) = full(rest[static_cast<std::size_t>(i)], rest[static_cast<std::size_t>(j)]);
    for (int j = 0; j < 2; ++j) g_rb(i, j) = full(rest[static_cast<std::size_t>(i)], bi + j);
  }
  const Eigen::MatrixXd cond =
      g_rr - g_rb * (g_bb + Eigen::Matrix2d::Identity()).inverse() * g_rb.transpose();
  const double s_e_given_b = detail::entropy_from_spectrum(symplectic_spectrum(cond));

  return std::max(s_e - s_e_given_b, 0.0);
}

inline double holevo_bound(const SecurityParams& p, double T) {
  p.validate();
  if (!(T > 0.0) || T > 1.0) throw ValidationError("T must be in (0, 1]");
  return holevo_bound_at(p.V_A, T, p.xi, p.eta, p.v_el);
}

// ---------------------------------------------------------------------------
// Finite-size penalty
// ---------------------------------------------------------------------------

/// Two-sided Gaussian tail quantile: z such that P(|N(0,1)| > z) = eps.
inline double gaussian_tail_quantile(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) throw ValidationError("eps must be in (0, 1)");
  // Newton refinement of the Acklam inverse-normal approximation
  const double p = 1.0 - eps / 2.0;
  const double q = p - 0.5;
  double z;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    z = q * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r + 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r + 133.14166789178437745) * r + 3.387132872796366608) /
        (((((((5226.495278852545703 * r + 28729.085735721942674) * r + 39307.89580009271061) * r + 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r + 42.313330701600911252) * r + 1.0);
  } else {
    double r = std::sqrt(-std::log(eps / 2.0));
    if (r <= 5.0) {
      r -= 1.6;
      z = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r + 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r + 4.6303378461565452959) * r + 1.42343711074968357734) /
          (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r + 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r + 2.05319162663775882187) * r + 1.0);
    } else {
      r -= 5.0;
      z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r + 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r + 5.4637849111641143699) * r + 6.6579046435011037772) /
          (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r + 0.59983220655588793769) * r + 1.0);
    }
  }
  // one Halley step against the complementary error function
  for (int it = 0; it < 2; ++it) {
    const double err = std::erfc(z / std::sqrt(2.0)) - eps;
    const double pdf = std::exp(-0.5 * z * z) * std::sqrt(2.0 / M_PI);
    z += err / pdf;
  }
  return z;
}

/// Worst-case Holevo bound under parameter-estimation uncertainty:
/// the channel gain is lowered and the noise raised by z(eps_pe) times
/// their estimator standard deviations (known-shot-noise variant),
/// then chi_BE is recomputed at the degraded parameters. n_used counts
/// quadrature samples. Returns nullopt when the worst case admits no
/// positive key (e.g. gain estimate compatible with zero).
inline std::optional<double> finite_size_chi(const SecurityParams& p, double T_hat,
                                             double xi_hat, std::size_t n_used) {
  p.validate();
  if (n_used < 10000) throw ValidationError("finite-size analysis needs n_used >= 1e4");
  if (!(T_hat > 0.0)) return std::nullopt;
  const double z = gaussian_tail_quantile(p.epsilon_pe);
  const double t = std::sqrt(p.eta * T_hat / 2.0);
  const double v_x = p.V_A / 2.0;
  const double sigma_z2 = 1.0 + p.eta * T_hat * std::max(xi_hat, 0.0) / 2.0 + p.v_el;
  const double n = static_cast<double>(n_used);

  const double t_low = t - z * std::sqrt(sigma_z2 / (n * v_x));
  if (t_low <= 0.0) return std::nullopt;
  const double T_low = 2.0 * t_low * t_low / p.eta;
  const double sigma_high = sigma_z2 + z * sigma_z2 * std::sqrt(2.0 / n);
  const double xi_high = (sigma_high - 1.0 - p.v_el) * 2.0 / (p.eta * T_low);
  try {
    return holevo_bound_at(p.V_A, std::min(T_low, 1.0), std::max(xi_high, 0.0), p.eta, p.v_el);
  } catch (const PhysicalityError&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Secret key rate
// ---------------------------------------------------------------------------

/// One block's security bookkeeping. All per-symbol quantities are bits
/// per complex symbol; beta relates the effective reconciliation rate
/// (two binary uses per symbol) to I_AB.
struct RateReport {
  double I_AB = 0.0;
  double chi_BE = 0.0;
  double beta = 0.0;
  double fer = 0.0;
  double skr_bits_per_symbol = 0.0;
  double skr_bits_per_s = 0.0;
  bool positive = false;
};

inline RateReport skr(double I_AB, double chi_BE, double beta, double fer,
                      double symbol_rate = 250e6) {
  if (fer < 0.0 || fer > 1.0) throw ValidationError("fer must be in [0, 1]");
  if (!(beta > 0.0)) throw ValidationError("beta must be > 0");
  RateReport r;
  r.I_AB = I_AB;
  r.chi_BE = chi_BE;
  r.beta = beta;
  r.fer = fer;
  const double raw = (1.0 - fer) * (beta * I_AB - chi_BE);
  r.positive = raw > 0.0;
  r.skr_bits_per_symbol = std::max(raw, 0.0);
  r.skr_bits_per_s = r.skr_bits_per_symbol * symbol_rate;
  return r;
}

}  // namespace cvqkd
