#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

namespace cvqkd {

/// Dense GF(2) matrix backed by 64-bit words, row major.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64),
        data_(rows * words_per_row_, 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool get(std::size_t r, std::size_t c) const {
    return (word(r, c / 64) >> (c % 64)) & 1ULL;
  }
  void set(std::size_t r, std::size_t c, bool v) {
    std::uint64_t& w = data_[r * words_per_row_ + c / 64];
    const std::uint64_t mask = 1ULL << (c % 64);
    w = v ? (w | mask) : (w & ~mask);
  }
  void flip(std::size_t r, std::size_t c) {
    data_[r * words_per_row_ + c / 64] ^= 1ULL << (c % 64);
  }

  void xor_rows(std::size_t dst, std::size_t src) {
    std::uint64_t* d = &data_[dst * words_per_row_];
    const std::uint64_t* s = &data_[src * words_per_row_];
    for (std::size_t w = 0; w < words_per_row_; ++w) d[w] ^= s[w];
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    std::uint64_t* pa = &data_[a * words_per_row_];
    std::uint64_t* pb = &data_[b * words_per_row_];
    for (std::size_t w = 0; w < words_per_row_; ++w) std::swap(pa[w], pb[w]);
  }

  /// dst ^= M * v, where v is a packed bit vector of length cols().
  void mul_accumulate(const std::vector<std::uint64_t>& v,
                      std::vector<std::uint64_t>& dst) const {
    for (std::size_t r = 0; r < rows_; ++r) {
      std::uint64_t acc = 0;
      const std::uint64_t* row = &data_[r * words_per_row_];
      for (std::size_t w = 0; w < words_per_row_; ++w) acc ^= row[w] & v[w];
      dst[r / 64] ^= static_cast<std::uint64_t>(__builtin_parityll(acc)) << (r % 64);
    }
  }

  /// In-place Gauss-Jordan inverse. Returns false if singular.
  bool invert() {
    if (rows_ != cols_) return false;
    BitMatrix inv(rows_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) inv.set(i, i, true);
    for (std::size_t col = 0; col < cols_; ++col) {
      std::size_t pivot = rows_;
      for (std::size_t r = col; r < rows_; ++r) {
        if (get(r, col)) { pivot = r; break; }
      }
      if (pivot == rows_) return false;
      swap_rows(pivot, col);
      inv.swap_rows(pivot, col);
      for (std::size_t r = 0; r < rows_; ++r) {
        if (r != col && get(r, col)) {
          xor_rows(r, col);
          inv.xor_rows(r, col);
        }
      }
    }
    *this = std::move(inv);
    return true;
  }

 private:
  std::uint64_t word(std::size_t r, std::size_t w) const {
    return data_[r * words_per_row_ + w];
  }

  std::size_t rows_ = 0, cols_ = 0, words_per_row_ = 0;
  std::vector<std::uint64_t> data_;
};

inline std::vector<std::uint64_t> pack_bits(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint64_t> out((bits.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i / 64] |= 1ULL << (i % 64);
  }
  return out;
}

namespace gf2_64 {

// GF(2^64) with reduction polynomial x^64 + x^4 + x^3 + x + 1.
inline std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t hi = 0, lo = 0;
  for (int i = 0; i < 64; ++i) {
    if ((b >> i) & 1ULL) {
      lo ^= a << i;
      if (i > 0) hi ^= a >> (64 - i);
    }
  }
  // fold the high half back: x^64 = x^4 + x^3 + x + 1
  for (int pass = 0; pass < 2; ++pass) {
    const std::uint64_t h = hi;
    hi = (h >> 60) ^ (h >> 61) ^ (h >> 63);
    lo ^= h ^ (h << 4) ^ (h << 3) ^ (h << 1);
  }
  return lo;
}

}  // namespace gf2_64

/// Keyed multilinear hash over GF(2^64). For two distinct equal-length
/// messages the digests collide with probability exactly 2^-64 over the
/// key choice, so a digest match certifies equality up to that bound.
inline std::uint64_t universal_hash64(const std::vector<std::uint8_t>& bits,
                                      std::uint64_t key_seed) {
  const std::vector<std::uint64_t> words = pack_bits(bits);
  std::uint64_t state = key_seed;
  std::uint64_t acc = 0;
  for (const std::uint64_t w : words) {
    state = splitmix64(state);
    acc ^= gf2_64::mul(state, w);
  }
  state = splitmix64(state);
  acc ^= gf2_64::mul(state, static_cast<std::uint64_t>(bits.size()));
  return acc;
}

}  // namespace cvqkd
