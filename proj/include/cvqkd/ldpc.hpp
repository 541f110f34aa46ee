#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/gf2.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {
namespace ldpc {

// ---------------------------------------------------------------------------
// Protograph
// ---------------------------------------------------------------------------

/// Small template graph; entry (i, j) is the number of parallel edges
/// between check type i and variable type j.
struct Protograph {
  int rows = 0;
  int cols = 0;
  std::vector<int> entries;  // row major

  int at(int i, int j) const { return entries[static_cast<std::size_t>(i * cols + j)]; }

  double design_rate() const { return 1.0 - static_cast<double>(rows) / cols; }

  int variable_degree(int j) const {
    int d = 0;
    for (int i = 0; i < rows; ++i) d += at(i, j);
    return d;
  }

  void validate() const {
    if (rows < 1 || cols < 2 || rows >= cols)
      throw ValidationError("protograph must have 1 <= rows < cols");
    for (const int e : entries)
      if (e < 0) throw ValidationError("protograph entries must be >= 0");
  }

  /// Plain-text format: one row per line of whitespace-separated integer
  /// multiplicities; '#' starts a comment.
  static Protograph parse(std::istream& in) {
    Protograph p;
    std::string line;
    while (std::getline(in, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream row(line);
      std::vector<int> vals;
      int v;
      while (row >> v) vals.push_back(v);
      if (vals.empty()) continue;
      if (p.cols == 0) {
        p.cols = static_cast<int>(vals.size());
      } else if (static_cast<int>(vals.size()) != p.cols) {
        throw ConfigError("ragged base matrix row");
      }
      p.entries.insert(p.entries.end(), vals.begin(), vals.end());
      ++p.rows;
    }
    if (p.rows == 0) throw ConfigError("empty base matrix");
    p.validate();
    return p;
  }

  static Protograph from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open base matrix file: " + path);
    return parse(in);
  }

  /// Shipped rate-0.2 base matrix: one high-degree systematic type and a
  /// dual-diagonal parity chain, a documented stand-in for code designs
  /// published elsewhere. Tuned on the BI-AWGN channel at desk scale.
  static Protograph builtin_r02();
};

// ---------------------------------------------------------------------------
// Expanded code
// ---------------------------------------------------------------------------

/// Quasi-cyclic lift of a protograph. Immutable after construction and
/// safe to share between threads.
struct ExpandedCode {
  int lift = 0;
  std::size_t n_vars = 0;    // N
  std::size_t n_checks = 0;  // M
  int girth_target = 6;
  Protograph proto;
  std::vector<int> shifts;  // one per protograph parallel edge

  // adjacency (CSR, checks over variables and the transpose)
  std::vector<std::uint32_t> check_offsets;  // M + 1
  std::vector<std::uint32_t> check_vars;     // edge -> variable
  std::vector<std::uint32_t> var_offsets;    // N + 1
  std::vector<std::uint32_t> var_edges;      // positions into check_vars

  std::size_t blocklength() const { return n_vars; }
  std::size_t info_length() const { return n_vars - n_checks; }
  double design_rate() const { return proto.design_rate(); }
  int var_type(std::size_t v) const { return static_cast<int>(v / static_cast<std::size_t>(lift)); }

  /// Variable types ordered by descending degree; puncturing draws
  /// positions from the front of this list.
  std::vector<int> puncture_type_order() const {
    std::vector<int> order(static_cast<std::size_t>(proto.cols));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return proto.variable_degree(a) > proto.variable_degree(b);
    });
    return order;
  }

  std::uint64_t fingerprint() const {
    std::uint64_t h = splitmix64(0x9d1c9b2a5f830c11ULL ^ n_vars);
    h = splitmix64(h ^ n_checks);
    for (std::size_t c = 0; c < n_checks; ++c) {
      for (std::uint32_t e = check_offsets[c]; e < check_offsets[c + 1]; ++e)
        h = splitmix64(h ^ (static_cast<std::uint64_t>(c) << 32 | check_vars[e]));
    }
    return h;
  }
};

namespace detail {

struct BaseEdge {
  int row, col, index;  // index = position in ExpandedCode::shifts
};

/// 4-cycle test on the lifted graph: two variables sharing two checks.
/// Exhaustive, used both as construction certificate and test oracle.
inline bool has_four_cycles(const ExpandedCode& code) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(code.check_vars.size() * 4);
  std::vector<std::uint32_t> checks_of;
  for (std::size_t v = 0; v < code.n_vars; ++v) {
    checks_of.clear();
    for (std::uint32_t k = code.var_offsets[v]; k < code.var_offsets[v + 1]; ++k) {
      // recover the check index from the edge position
      const std::uint32_t e = code.var_edges[k];
      const auto it = std::upper_bound(code.check_offsets.begin(), code.check_offsets.end(), e);
      checks_of.push_back(static_cast<std::uint32_t>(it - code.check_offsets.begin() - 1));
    }
    std::sort(checks_of.begin(), checks_of.end());
    for (std::size_t a = 0; a < checks_of.size(); ++a) {
      for (std::size_t b = a + 1; b < checks_of.size(); ++b) {
        if (checks_of[a] == checks_of[b]) return true;  // doubled edge
        const std::uint64_t key =
            (static_cast<std::uint64_t>(checks_of[a]) << 32) | checks_of[b];
        if (!seen.insert(key).second) return true;
      }
    }
  }
  return false;
}

/// Algebraic short-cycle test for a candidate shift assignment. For QC
/// lifts, cycles of length 2k correspond exactly to closed alternating
/// walks in the base multigraph whose signed shift sum vanishes mod L.
inline bool qc_shift_ok(const std::vector<BaseEdge>& edges, const std::vector<int>& shifts,
                        int candidate_idx, int candidate_shift, int lift, int girth_target) {
  const auto shift_of = [&](int idx) {
    return idx == candidate_idx ? candidate_shift : shifts[static_cast<std::size_t>(idx)];
  };
  const auto assigned = [&](int idx) {
    return idx == candidate_idx || shifts[static_cast<std::size_t>(idx)] >= 0;
  };
  const BaseEdge& ne = edges[static_cast<std::size_t>(candidate_idx)];

  // 4-cycles through the candidate: walk ne -> a (same row) -> b (same
  // col as a) -> c (same row as b, same col as ne)
  for (const auto& a : edges) {
    if (!assigned(a.index) || a.index == ne.index || a.row != ne.row) continue;
    for (const auto& b : edges) {
      if (!assigned(b.index) || b.index == a.index || b.col != a.col || b.row == a.row) continue;
      for (const auto& c : edges) {
        if (!assigned(c.index) || c.index == b.index || c.index == ne.index) continue;
        if (c.row != b.row || c.col != ne.col) continue;
        const int sum = shift_of(ne.index) - shift_of(a.index) + shift_of(b.index) -
                        shift_of(c.index);
        if (((sum % lift) + lift) % lift == 0) return false;
      }
    }
  }
  // parallel-edge pair: 2 (s1 - s2) = 0 mod L
  for (const auto& a : edges) {
    if (!assigned(a.index) || a.index == ne.index) continue;
    if (a.row == ne.row && a.col == ne.col) {
      const int diff = shift_of(ne.index) - shift_of(a.index);
      if ((2 * diff % lift + lift) % lift == 0) return false;
    }
  }
  if (girth_target < 8) return true;

  // 6-cycles through the candidate (conservative: consecutive-distinct
  // closed walks of length 6)
  const int n_edges = static_cast<int>(edges.size());
  for (int i2 = 0; i2 < n_edges; ++i2) {
    const auto& e2 = edges[static_cast<std::size_t>(i2)];
    if (!assigned(i2) || i2 == ne.index || e2.row != ne.row) continue;
    for (int i3 = 0; i3 < n_edges; ++i3) {
      const auto& e3 = edges[static_cast<std::size_t>(i3)];
      if (!assigned(i3) || i3 == i2 || e3.col != e2.col) continue;
      for (int i4 = 0; i4 < n_edges; ++i4) {
        const auto& e4 = edges[static_cast<std::size_t>(i4)];
        if (!assigned(i4) || i4 == i3 || e4.row != e3.row) continue;
        for (int i5 = 0; i5 < n_edges; ++i5) {
          const auto& e5 = edges[static_cast<std::size_t>(i5)];
          if (!assigned(i5) || i5 == i4 || e5.col != e4.col) continue;
          // closing edge: same row as e5, same col as ne, distinct
          for (int i6 = 0; i6 < n_edges; ++i6) {
            const auto& e6 = edges[static_cast<std::size_t>(i6)];
            if (!assigned(i6) || i6 == i5 || i6 == ne.index) continue;
            if (e6.row != e5.row || e6.col != ne.col) continue;
            const int sum = shift_of(ne.index) - shift_of(i2) + shift_of(i3) -
                            shift_of(i4) + shift_of(i5) - shift_of(i6);
            if (((sum % lift) + lift) % lift == 0) return false;
          }
        }
      }
    }
  }
  return true;
}

}  // namespace detail

/// Lifts a protograph into a quasi-cyclic code of blocklength
/// cols * lift_size. Circulant shifts are drawn in seeded random order
/// and accepted only when no cycle shorter than girth_target appears;
/// the finished graph is certified 4-cycle-free by explicit search.
inline ExpandedCode expand_protograph(const Protograph& p, int lift_size, std::uint64_t seed,
                                      int girth_target = 6) {
  p.validate();
  if (lift_size < 2) throw ValidationError("lift_size must be >= 2");
  if (girth_target != 6 && girth_target != 8)
    throw ValidationError("supported girth targets: 6, 8");

  std::vector<detail::BaseEdge> edges;
  for (int i = 0; i < p.rows; ++i) {
    for (int j = 0; j < p.cols; ++j) {
      for (int k = 0; k < p.at(i, j); ++k)
        edges.push_back({i, j, static_cast<int>(edges.size())});
    }
  }

  std::vector<int> shifts;
  constexpr int kMaxAttempts = 64;
  int attempt = 0;
  for (; attempt < kMaxAttempts; ++attempt) {
    RandomStream rng = RandomStream::derive(seed, static_cast<std::uint64_t>(attempt));
    shifts.assign(edges.size(), -1);
    bool ok = true;
    std::vector<int> candidates(static_cast<std::size_t>(lift_size));
    for (const auto& e : edges) {
      std::iota(candidates.begin(), candidates.end(), 0);
      for (std::size_t i = candidates.size(); i > 1; --i)
        std::swap(candidates[i - 1], candidates[rng.below(i)]);
      int chosen = -1;
      for (const int cand : candidates) {
        if (detail::qc_shift_ok(edges, shifts, e.index, cand, lift_size, girth_target)) {
          chosen = cand;
          break;
        }
      }
      if (chosen < 0) {
        ok = false;
        break;
      }
      shifts[static_cast<std::size_t>(e.index)] = chosen;
    }
    if (ok) break;
  }
  if (attempt == kMaxAttempts)
    throw ConstructionError("could not reach girth " + std::to_string(girth_target) +
                            " at lift " + std::to_string(lift_size) +
                            "; increase the lift size");

  ExpandedCode code;
  code.lift = lift_size;
  code.proto = p;
  code.shifts = shifts;
  code.n_vars = static_cast<std::size_t>(p.cols) * lift_size;
  code.n_checks = static_cast<std::size_t>(p.rows) * lift_size;
  code.girth_target = girth_target;

  // assemble CSR: check c = i * L + u holds var j * L + t when t + shift = u (mod L)
  std::vector<std::vector<std::uint32_t>> per_check(code.n_checks);
  for (const auto& e : edges) {
    const int s = shifts[static_cast<std::size_t>(e.index)];
    for (int t = 0; t < lift_size; ++t) {
      const std::uint32_t var = static_cast<std::uint32_t>(e.col * lift_size + t);
      const std::uint32_t chk = static_cast<std::uint32_t>(e.row * lift_size + (t + s) % lift_size);
      per_check[chk].push_back(var);
    }
  }
  code.check_offsets.assign(code.n_checks + 1, 0);
  for (std::size_t c = 0; c < code.n_checks; ++c) {
    std::sort(per_check[c].begin(), per_check[c].end());
    code.check_offsets[c + 1] = code.check_offsets[c] + static_cast<std::uint32_t>(per_check[c].size());
  }
  code.check_vars.reserve(code.check_offsets.back());
  for (auto& vars : per_check)
    code.check_vars.insert(code.check_vars.end(), vars.begin(), vars.end());

  std::vector<std::vector<std::uint32_t>> per_var(code.n_vars);
  for (std::size_t c = 0; c < code.n_checks; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e)
      per_var[code.check_vars[e]].push_back(e);
  }
  code.var_offsets.assign(code.n_vars + 1, 0);
  for (std::size_t v = 0; v < code.n_vars; ++v)
    code.var_offsets[v + 1] = code.var_offsets[v] + static_cast<std::uint32_t>(per_var[v].size());
  code.var_edges.reserve(code.var_offsets.back());
  for (auto& es : per_var)
    code.var_edges.insert(code.var_edges.end(), es.begin(), es.end());

  if (detail::has_four_cycles(code))
    throw ConstructionError("internal: lifted graph contains a 4-cycle");
  return code;
}

/// Exhaustive 4-cycle search (test oracle and validation hook).
inline bool has_four_cycles(const ExpandedCode& code) { return detail::has_four_cycles(code); }

// ---------------------------------------------------------------------------
// Rate adaptation (sp-protocol)
// ---------------------------------------------------------------------------

/// Puncture/shorten plan. Punctured positions stay in the codeword but
/// are never transmitted (zero LLR at the decoder input); shortened
/// positions are information bits pinned to zero on both sides.
struct RateAdaptation {
  std::size_t n_punctured = 0;
  std::size_t n_shortened = 0;
  std::vector<std::uint32_t> punctured;  // ascending
  std::vector<std::uint32_t> shortened;  // ascending
  double target_rate = 0.0;

  double effective_rate(std::size_t K, std::size_t N) const {
    return static_cast<double>(K - n_shortened) /
           static_cast<double>(N - n_punctured - n_shortened);
  }
};

/// Solves (K - s) / (N - p - s) = target with the smallest total p + s:
/// puncture-only above the design rate, shorten-only below, rounding the
/// adjustment up so the achieved rate crosses the target.
inline RateAdaptation choose_sp(double target_rate, const ExpandedCode& code) {
  if (!(target_rate > 0.0) || !(target_rate < 1.0))
    throw ValidationError("target rate must lie in (0, 1)");
  const std::size_t N = code.n_vars;
  const std::size_t K = code.info_length();
  const double r0 = static_cast<double>(K) / static_cast<double>(N);

  RateAdaptation ra;
  ra.target_rate = target_rate;
  const int L = code.lift;

  if (std::abs(target_rate - r0) < 1e-12) return ra;

  if (target_rate > r0) {
    const double p_real = static_cast<double>(N) - static_cast<double>(K) / target_rate;
    ra.n_punctured = static_cast<std::size_t>(std::ceil(p_real - 1e-9));
    const auto order = code.puncture_type_order();
    // only non-trivial to puncture up to all-but-one variable type; in
    // practice the feasibility bound is the designated-type capacity
    std::size_t capacity = 0;
    const std::size_t usable_types = order.size() - 1;  // keep at least one type transmitted
    for (std::size_t i = 0; i < usable_types; ++i) capacity += static_cast<std::size_t>(L);
    if (ra.n_punctured > capacity)
      throw ValidationError("infeasible rate " + std::to_string(target_rate) +
                            ": would puncture " + std::to_string(ra.n_punctured) +
                            " of " + std::to_string(capacity) + " puncturable positions");
    std::size_t remaining = ra.n_punctured;
    for (std::size_t ti = 0; ti < order.size() && remaining > 0; ++ti) {
      const std::size_t take = std::min<std::size_t>(remaining, static_cast<std::size_t>(L));
      const std::uint32_t base = static_cast<std::uint32_t>(order[ti] * L);
      for (std::size_t k = 0; k < take; ++k)
        ra.punctured.push_back(base + static_cast<std::uint32_t>(k * static_cast<std::size_t>(L) / take));
      remaining -= take;
    }
    std::sort(ra.punctured.begin(), ra.punctured.end());
  } else {
    const double s_real = (static_cast<double>(K) - target_rate * static_cast<double>(N)) /
                          (1.0 - target_rate);
    ra.n_shortened = static_cast<std::size_t>(std::ceil(s_real - 1e-9));
    if (ra.n_shortened >= K)
      throw ValidationError("infeasible rate " + std::to_string(target_rate) +
                            ": shortening would consume all information bits");
    // shortened positions spread evenly over the systematic columns
    for (std::size_t k = 0; k < ra.n_shortened; ++k)
      ra.shortened.push_back(static_cast<std::uint32_t>(k * K / ra.n_shortened));
    std::sort(ra.shortened.begin(), ra.shortened.end());
  }
  return ra;
}

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

/// Systematic encoder built by one-time GF(2) elimination: parity columns
/// are chosen from the right of H so the information bits occupy the
/// leading positions. Construction throws on rank-deficient H.
class Encoder {
 public:
  explicit Encoder(const ExpandedCode& code) : code_(&code) {
    const std::size_t M = code.n_checks, N = code.n_vars;
    BitMatrix h(M, N);
    for (std::size_t c = 0; c < M; ++c) {
      for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e)
        h.flip(c, code.check_vars[e]);
    }
    std::vector<bool> is_parity(N, false);
    std::vector<std::size_t> pivot_col(M);
    std::size_t rank = 0;
    for (std::size_t col_scan = 0; col_scan < N && rank < M; ++col_scan) {
      const std::size_t col = N - 1 - col_scan;
      std::size_t pivot = M;
      for (std::size_t r = rank; r < M; ++r) {
        if (h.get(r, col)) { pivot = r; break; }
      }
      if (pivot == M) continue;
      h.swap_rows(pivot, rank);
      for (std::size_t r = 0; r < M; ++r) {
        if (r != rank && h.get(r, col)) h.xor_rows(r, rank);
      }
      pivot_col[rank] = col;
      is_parity[col] = true;
      ++rank;
    }
    if (rank < M)
      throw ConstructionError("parity-check matrix is rank deficient (rank " +
                              std::to_string(rank) + " of " + std::to_string(M) + ")");
    parity_positions_.resize(M);
    for (std::size_t r = 0; r < M; ++r) parity_positions_[r] = static_cast<std::uint32_t>(pivot_col[r]);
    for (std::size_t v = 0; v < N; ++v)
      if (!is_parity[v]) info_positions_.push_back(static_cast<std::uint32_t>(v));

    // after full Gauss-Jordan, row r reads: c[pivot_col[r]] = sum of info
    // columns with a 1 in row r
    row_info_cols_.resize(M);
    for (std::size_t r = 0; r < M; ++r) {
      for (const std::uint32_t v : info_positions_)
        if (h.get(r, v)) row_info_cols_[r].push_back(v);
    }
    info_index_.assign(N, UINT32_MAX);
    for (std::size_t k = 0; k < info_positions_.size(); ++k)
      info_index_[info_positions_[k]] = static_cast<std::uint32_t>(k);
  }

  const std::vector<std::uint32_t>& info_positions() const { return info_positions_; }

  /// Index of a codeword position within the info vector, or UINT32_MAX.
  std::uint32_t info_index(std::uint32_t position) const { return info_index_[position]; }

  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> info_bits) const {
    if (info_bits.size() != info_positions_.size())
      throw ValidationError("encode: expected " + std::to_string(info_positions_.size()) +
                            " information bits");
    std::vector<std::uint8_t> cw(code_->n_vars, 0);
    for (std::size_t k = 0; k < info_bits.size(); ++k) cw[info_positions_[k]] = info_bits[k] & 1;
    for (std::size_t r = 0; r < parity_positions_.size(); ++r) {
      std::uint8_t acc = 0;
      for (const std::uint32_t v : row_info_cols_[r]) acc ^= cw[v];
      cw[parity_positions_[r]] = acc;
    }
    return cw;
  }

 private:
  const ExpandedCode* code_;
  std::vector<std::uint32_t> info_positions_;
  std::vector<std::uint32_t> parity_positions_;
  std::vector<std::vector<std::uint32_t>> row_info_cols_;
  std::vector<std::uint32_t> info_index_;
};

inline bool syndrome_ok(const ExpandedCode& code, std::span<const std::uint8_t> cw) {
  for (std::size_t c = 0; c < code.n_checks; ++c) {
    std::uint8_t acc = 0;
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e)
      acc ^= cw[code.check_vars[e]];
    if (acc) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Decoder
// ---------------------------------------------------------------------------

struct DecodeResult {
  std::vector<std::uint8_t> hard_bits;  // full codeword, length N
  bool converged = false;
  int iterations_used = 0;
  bool syndrome_ok = false;
};

struct DecoderOptions {
  int max_iterations = 500;
  double llr_saturation = 38.0;
  bool min_sum = false;
  double min_sum_scale = 0.8125;
};

/// Flooding belief propagation with the exact tanh rule (or scaled
/// min-sum) and early termination on a zero syndrome. The llrs span
/// covers the N - s non-shortened positions in ascending index order;
/// punctured entries are expected to carry zero. Shortened positions are
/// filled internally with the saturation LLR for the known zero bit.
inline DecodeResult decode(const ExpandedCode& code, const RateAdaptation& ra,
                           std::span<const double> llrs, const DecoderOptions& opts = {}) {
  const std::size_t N = code.n_vars;
  if (llrs.size() != N - ra.n_shortened)
    throw ValidationError("decode: expected " + std::to_string(N - ra.n_shortened) +
                          " LLRs, got " + std::to_string(llrs.size()));
  const double sat = opts.llr_saturation;

  std::vector<double> channel(N);
  {
    std::size_t in = 0, sh = 0;
    for (std::size_t v = 0; v < N; ++v) {
      if (sh < ra.shortened.size() && ra.shortened[sh] == v) {
        channel[v] = sat;
        ++sh;
      } else {
        channel[v] = std::clamp(llrs[in++], -sat, sat);
      }
    }
  }

  const std::size_t n_edges = code.check_vars.size();
  std::vector<double> var_to_check(n_edges, 0.0);
  std::vector<double> check_to_var(n_edges, 0.0);
  std::vector<double> total(N);
  std::vector<std::uint8_t> hard(N);

  // initial variable-to-check messages are the channel LLRs
  for (std::size_t v = 0; v < N; ++v) {
    for (std::uint32_t k = code.var_offsets[v]; k < code.var_offsets[v + 1]; ++k)
      var_to_check[code.var_edges[k]] = channel[v];
  }

  DecodeResult result;
  std::vector<double> fwd, bwd, mags;
  std::vector<std::uint8_t> signs;
  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    // check update
    for (std::size_t c = 0; c < code.n_checks; ++c) {
      const std::uint32_t begin = code.check_offsets[c], end = code.check_offsets[c + 1];
      const std::size_t deg = end - begin;
      if (!opts.min_sum) {
        fwd.assign(deg + 1, 1.0);
        bwd.assign(deg + 1, 1.0);
        for (std::size_t k = 0; k < deg; ++k) {
          const double t = std::tanh(0.5 * var_to_check[begin + k]);
          fwd[k + 1] = fwd[k] * t;
        }
        for (std::size_t k = deg; k > 0; --k) {
          const double t = std::tanh(0.5 * var_to_check[begin + k - 1]);
          bwd[k - 1] = bwd[k] * t;
        }
        for (std::size_t k = 0; k < deg; ++k) {
          const double prod = std::clamp(fwd[k] * bwd[k + 1], -(1.0 - 1e-15), 1.0 - 1e-15);
          check_to_var[begin + k] = std::clamp(2.0 * std::atanh(prod), -sat, sat);
        }
      } else {
        double min1 = 1e300, min2 = 1e300;
        std::size_t arg1 = 0;
        std::uint8_t sign_all = 0;
        signs.assign(deg, 0);
        for (std::size_t k = 0; k < deg; ++k) {
          const double m = var_to_check[begin + k];
          const double a = std::abs(m);
          signs[k] = m < 0.0;
          sign_all ^= signs[k];
          if (a < min1) {
            min2 = min1;
            min1 = a;
            arg1 = k;
          } else if (a < min2) {
            min2 = a;
          }
        }
        for (std::size_t k = 0; k < deg; ++k) {
          const double mag = opts.min_sum_scale * (k == arg1 ? min2 : min1);
          const std::uint8_t sgn = sign_all ^ signs[k];
          check_to_var[begin + k] = std::clamp(sgn ? -mag : mag, -sat, sat);
        }
      }
    }

    // variable update + hard decision
    for (std::size_t v = 0; v < N; ++v) {
      double sum = channel[v];
      for (std::uint32_t k = code.var_offsets[v]; k < code.var_offsets[v + 1]; ++k)
        sum += check_to_var[code.var_edges[k]];
      total[v] = sum;
      hard[v] = sum < 0.0;
      for (std::uint32_t k = code.var_offsets[v]; k < code.var_offsets[v + 1]; ++k) {
        const std::uint32_t e = code.var_edges[k];
        var_to_check[e] = std::clamp(sum - check_to_var[e], -sat, sat);
      }
    }

    result.iterations_used = iter;
    if (syndrome_ok(code, hard)) {
      result.converged = true;
      break;
    }
  }
  result.hard_bits = std::move(hard);
  result.syndrome_ok = result.converged || syndrome_ok(code, result.hard_bits);
  return result;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Digest comparison standing in for the protocol's hash exchange. Uses a
/// keyed 64-bit universal hash, so unequal inputs collide with
/// probability 2^-64 over the key.
inline bool verify(const std::vector<std::uint8_t>& s, const std::vector<std::uint8_t>& s_hat,
                   std::uint64_t key_seed) {
  if (s.size() != s_hat.size())
    throw ProtocolError("verify: length mismatch (" + std::to_string(s.size()) + " vs " +
                        std::to_string(s_hat.size()) + ")");
  return universal_hash64(s, key_seed) == universal_hash64(s_hat, key_seed);
}

// ---------------------------------------------------------------------------
// H export / import (coordinate list)
// ---------------------------------------------------------------------------

inline void export_coo(std::ostream& out, const ExpandedCode& code) {
  out << "# " << code.n_checks << " " << code.n_vars << "\n";
  for (std::size_t c = 0; c < code.n_checks; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e)
      out << c << " " << code.check_vars[e] << "\n";
  }
}

struct RawParityCheck {
  std::size_t n_checks = 0;
  std::size_t n_vars = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> entries;  // (row, col) sorted
};

inline RawParityCheck import_coo(std::istream& in) {
  RawParityCheck raw;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      std::istringstream hdr(line.substr(1));
      if (hdr >> raw.n_checks >> raw.n_vars) have_header = true;
      continue;
    }
    std::istringstream row(line);
    std::uint32_t r, c;
    if (row >> r >> c) raw.entries.emplace_back(r, c);
  }
  std::sort(raw.entries.begin(), raw.entries.end());
  if (!have_header) {
    for (const auto& [r, c] : raw.entries) {
      raw.n_checks = std::max<std::size_t>(raw.n_checks, r + 1);
      raw.n_vars = std::max<std::size_t>(raw.n_vars, c + 1);
    }
  }
  return raw;
}

inline RawParityCheck to_raw(const ExpandedCode& code) {
  RawParityCheck raw;
  raw.n_checks = code.n_checks;
  raw.n_vars = code.n_vars;
  for (std::size_t c = 0; c < code.n_checks; ++c) {
    for (std::uint32_t e = code.check_offsets[c]; e < code.check_offsets[c + 1]; ++e)
      raw.entries.emplace_back(static_cast<std::uint32_t>(c), code.check_vars[e]);
  }
  std::sort(raw.entries.begin(), raw.entries.end());
  return raw;
}

inline bool operator==(const RawParityCheck& a, const RawParityCheck& b) {
  return a.n_checks == b.n_checks && a.n_vars == b.n_vars && a.entries == b.entries;
}

inline Protograph Protograph::builtin_r02() {
  Protograph p;
  p.rows = 4;
  p.cols = 5;
  p.entries = {
      3, 1, 0, 0, 0,  //
      3, 1, 1, 0, 0,  //
      2, 0, 1, 1, 0,  //
      2, 0, 0, 1, 1,  //
  };
  return p;
}

}  // namespace ldpc
}  // namespace cvqkd
