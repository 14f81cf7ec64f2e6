#pragma once

// Rotation-extended dictionaries built from circularly masked DCT-2 atoms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace srisck {

//! Square n x n block of samples, row-major.
struct AtomBlock {
  std::size_t n = 0;
  std::vector<double> values;

  AtomBlock() = default;
  explicit AtomBlock(std::size_t side, double fill = 0.0)
      : n(side), values(side * side, fill) {}

  double &operator()(std::size_t r, std::size_t c) { return values[r * n + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * n + c];
  }
};

//! Pixels of an n x n block whose distance to the block centre is <= n/2,
//! in row-major order.
class CircularMask {
public:
  explicit CircularMask(std::size_t n) : n_(n) {
    if (n < 2)
      throw std::invalid_argument("CircularMask: side must be >= 2");
    const double c0 = (static_cast<double>(n) - 1.0) / 2.0;
    const double r2 = (static_cast<double>(n) / 2.0) * (n / 2.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double dr = r - c0, dc = c - c0;
        if (dr * dr + dc * dc <= r2)
          index_.emplace_back(r, c);
      }
  }

  std::size_t side() const { return n_; }
  double radius() const { return static_cast<double>(n_) / 2.0; }
  std::size_t size() const { return index_.size(); }
  std::span<const std::pair<std::size_t, std::size_t>> index_map() const {
    return index_;
  }
  bool contains(std::size_t r, std::size_t c) const {
    const double c0 = (static_cast<double>(n_) - 1.0) / 2.0;
    const double dr = r - c0, dc = c - c0;
    return dr * dr + dc * dc <= radius() * radius();
  }

private:
  std::size_t n_;
  std::vector<std::pair<std::size_t, std::size_t>> index_;
};

//! One DCT-2 basis element of size n x n; p and q are 1-based frequency
//! indices (p selects rows, q columns).
inline AtomBlock dct2_atom(std::size_t n, std::size_t p, std::size_t q) {
  if (n < 2 || p < 1 || q < 1 || p > n || q > n)
    throw std::invalid_argument("dct2_atom: index out of range");
  const double nd = static_cast<double>(n);
  const double ap = p == 1 ? 1.0 / std::sqrt(nd) : std::sqrt(2.0 / nd);
  const double aq = q == 1 ? 1.0 / std::sqrt(nd) : std::sqrt(2.0 / nd);
  AtomBlock b(n);
  for (std::size_t e = 0; e < n; ++e)
    for (std::size_t f = 0; f < n; ++f)
      b(e, f) = ap * aq *
                std::cos(std::numbers::pi * (2.0 * e + 1.0) * (p - 1.0) /
                         (2.0 * nd)) *
                std::cos(std::numbers::pi * (2.0 * f + 1.0) * (q - 1.0) /
                         (2.0 * nd));
  return b;
}

//! All n^2 atoms; atom (p-1)*n + (q-1) holds frequency (p, q).
inline std::vector<AtomBlock> dct2_basis(std::size_t n) {
  if (n < 2)
    throw std::invalid_argument("dct2_basis: n must be >= 2");
  std::vector<AtomBlock> atoms;
  atoms.reserve(n * n);
  for (std::size_t p = 1; p <= n; ++p)
    for (std::size_t q = 1; q <= n; ++q)
      atoms.push_back(dct2_atom(n, p, q));
  return atoms;
}

//! In-circle samples of `block`, in the mask's index order.
inline std::vector<double> circular_mask_vector(const AtomBlock &block,
                                                const CircularMask &mask) {
  if (block.n != mask.side())
    throw std::invalid_argument("circular_mask_vector: size mismatch");
  std::vector<double> v;
  v.reserve(mask.size());
  for (auto [r, c] : mask.index_map())
    v.push_back(block(r, c));
  return v;
}

//! Block with every out-of-circle sample set to zero.
inline AtomBlock apply_mask(AtomBlock block, const CircularMask &mask) {
  for (std::size_t r = 0; r < block.n; ++r)
    for (std::size_t c = 0; c < block.n; ++c)
      if (!mask.contains(r, c))
        block(r, c) = 0.0;
  return block;
}

namespace detail {

inline AtomBlock rotate_quarter_turns(const AtomBlock &b, int quarters) {
  quarters = ((quarters % 4) + 4) % 4;
  AtomBlock cur = b;
  const std::size_t n = b.n;
  for (int k = 0; k < quarters; ++k) {
    AtomBlock next(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        next(n - 1 - c, r) = cur(r, c);
    cur = std::move(next);
  }
  return cur;
}

} // namespace detail

//! Rotates a block about its centre by `degrees` (counter-clockwise as
//! displayed, rows pointing down). Multiples of 90 degrees are exact index
//! permutations; other angles use bilinear interpolation, with taps beyond
//! the grid replicated from the nearest edge sample.
inline AtomBlock rotate_block(const AtomBlock &block, double degrees) {
  const double quarters = degrees / 90.0;
  if (quarters == std::round(quarters))
    return detail::rotate_quarter_turns(block,
                                        static_cast<int>(std::fmod(quarters, 4.0)));

  const std::size_t n = block.n;
  const double c0 = (static_cast<double>(n) - 1.0) / 2.0;
  const double th = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(th), sn = std::sin(th);
  const long last = static_cast<long>(n) - 1;
  auto at = [&](long r, long c) {
    return block(static_cast<std::size_t>(std::clamp(r, 0L, last)),
                 static_cast<std::size_t>(std::clamp(c, 0L, last)));
  };

  AtomBlock out(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double dx = c - c0, dy = r - c0;
      const double sx = dx * cs - dy * sn + c0;
      const double sy = dx * sn + dy * cs + c0;
      const double fx = std::floor(sx), fy = std::floor(sy);
      const double ax = sx - fx, ay = sy - fy;
      const long x0 = static_cast<long>(fx), y0 = static_cast<long>(fy);
      out(r, c) = (1 - ay) * ((1 - ax) * at(y0, x0) + ax * at(y0, x0 + 1)) +
                  ay * ((1 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
    }
  return out;
}

//! True when the masked block maps onto itself under an exact rotation by a
//! multiple of 90 degrees (L2 difference <= tol).
inline bool is_rotation_symmetric(const AtomBlock &block,
                                  const CircularMask &mask, int quarter_turns,
                                  double tol = 1e-6) {
  const auto a = circular_mask_vector(block, mask);
  const auto b = circular_mask_vector(
      detail::rotate_quarter_turns(block, quarter_turns), mask);
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d2) <= tol;
}

//! Mean-centres and scales a vector to unit L2 norm; throws on a flat vector.
inline void center_and_normalize(std::span<double> v) {
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double &x : v) {
    x -= mean;
    ss += x * x;
  }
  const double norm = std::sqrt(ss);
  if (norm < 1e-12)
    throw std::invalid_argument("dictionary atom is constant inside the mask");
  for (double &x : v)
    x /= norm;
}

//! Dictionary of masked, mean-centred, unit-norm atoms and their rotations.
//! Column order follows rotation slot first: column = slot * k + atom.
class ExtendedDictionary {
public:
  ExtendedDictionary() = default;

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return k_ * slots_; }
  std::size_t base_count() const { return k_; }
  std::size_t slot_count() const { return slots_; }
  double beta() const { return beta_; }
  double symmetry_period() const { return period_; }
  std::size_t block_size() const { return n_; }

  std::span<const double> column(std::size_t j) const {
    return {data_.data() + j * rows_, rows_};
  }
  //! Rotated (unmasked) block each column was vectorised from.
  //! Not available for dictionaries made with from_columns.
  const AtomBlock &source_block(std::size_t j) const { return sources_.at(j); }
  std::size_t column_index(std::size_t slot, std::size_t atom) const {
    return slot * k_ + atom;
  }

  //! Column-major data, rows() x cols().
  std::span<const double> data() const { return data_; }

  //! Wraps explicit column-major data (rows x base_count*slots) without
  //! normalising it.
  static ExtendedDictionary from_columns(std::size_t block_size, std::size_t rows,
                                         std::size_t base_count, std::size_t slots,
                                         std::vector<double> data, double beta = 360.0,
                                         double period = 360.0) {
    if (data.size() != rows * base_count * slots)
      throw std::invalid_argument("from_columns: data size mismatch");
    ExtendedDictionary ed;
    ed.n_ = block_size;
    ed.rows_ = rows;
    ed.k_ = base_count;
    ed.slots_ = slots;
    ed.beta_ = beta;
    ed.period_ = period;
    ed.data_ = std::move(data);
    return ed;
  }

  friend ExtendedDictionary
  build_extended_dictionary(const std::vector<AtomBlock> &base, double beta,
                            double symmetry_period, const CircularMask &mask);

private:
  std::size_t n_ = 0, rows_ = 0, k_ = 0, slots_ = 0;
  double beta_ = 0.0, period_ = 0.0;
  std::vector<double> data_;
  std::vector<AtomBlock> sources_;
};

namespace detail {

inline std::size_t exact_ratio(double num, double den, const char *what) {
  if (!(den > 0.0) || !(num > 0.0))
    throw std::invalid_argument(what);
  const double q = num / den;
  const double rq = std::round(q);
  if (rq < 1.0 || std::abs(q - rq) > 1e-9)
    throw std::invalid_argument(what);
  return static_cast<std::size_t>(rq);
}

} // namespace detail

//! Rotates each base atom to 0, beta, ..., period - beta, then masks,
//! mean-centres and normalises it. Atoms are rotated over the full square so
//! that samples near the rim of the circle are interpolated from real data.
//! The base atoms are expected to be symmetric under rotation by
//! `symmetry_period` (use 360 for no symmetry).
inline ExtendedDictionary
build_extended_dictionary(const std::vector<AtomBlock> &base, double beta,
                          double symmetry_period, const CircularMask &mask) {
  if (base.empty())
    throw std::invalid_argument("build_extended_dictionary: no base atoms");
  const auto slots = detail::exact_ratio(
      symmetry_period, beta, "beta must divide the symmetry period");
  detail::exact_ratio(360.0, symmetry_period,
                      "symmetry period must divide 360");

  ExtendedDictionary ed;
  ed.n_ = mask.side();
  ed.rows_ = mask.size();
  ed.k_ = base.size();
  ed.slots_ = slots;
  ed.beta_ = beta;
  ed.period_ = symmetry_period;
  ed.data_.reserve(ed.rows_ * ed.cols());
  ed.sources_.reserve(ed.cols());

  for (const auto &b : base)
    if (b.n != mask.side())
      throw std::invalid_argument("build_extended_dictionary: atom size");
  for (std::size_t s = 0; s < slots; ++s)
    for (const auto &atom : base) {
      auto rotated = rotate_block(atom, static_cast<double>(s) * beta);
      auto v = circular_mask_vector(rotated, mask);
      center_and_normalize(v);
      ed.data_.insert(ed.data_.end(), v.begin(), v.end());
      ed.sources_.push_back(std::move(rotated));
    }
  return ed;
}

//! Parameters of the analytic single-atom dictionary used by the presets.
struct ExtDct2Options {
  std::size_t p = 3;
  std::size_t q = 3;
  double beta = 10.0;
  double symmetry_period = 90.0;
};

//! Extended dictionary from one DCT-2 atom of the block size.
inline ExtendedDictionary make_ext_dct2(std::size_t n,
                                        const ExtDct2Options &opt = {}) {
  const CircularMask mask(n);
  return build_extended_dictionary({dct2_atom(n, opt.p, opt.q)}, opt.beta,
                                   opt.symmetry_period, mask);
}

//! Coefficients re-indexed for a block rotated by `shift` rotation slots:
//! out[(slot + shift) mod slots, atom] = alpha[slot, atom].
inline std::vector<double> shift_rotation_slots(std::span<const double> alpha,
                                                std::size_t base_count,
                                                std::size_t slots, long shift) {
  if (alpha.size() != base_count * slots)
    throw std::invalid_argument("shift_rotation_slots: length mismatch");
  std::vector<double> out(alpha.size());
  const long m = static_cast<long>(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto t = static_cast<std::size_t>(((static_cast<long>(s) + shift) % m + m) % m);
    for (std::size_t a = 0; a < base_count; ++a)
      out[t * base_count + a] = alpha[s * base_count + a];
  }
  return out;
}

} // namespace srisck
