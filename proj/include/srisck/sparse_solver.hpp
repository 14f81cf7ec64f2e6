#pragma once

// Block normalisation and the elastic-net coder:
//   min_a  1/2 |y - D a|^2 + lambda1 |a|_1 + lambda2/2 |a|^2

#include "dictionary.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace srisck {

//! Zero-mean, unit-L2 masked block.
struct NormalizedBlock {
  std::vector<double> values;
};

//! In-place (v - mean) / |v - mean|. Returns false, leaving v centred, when
//! the block is flat (centred norm below 1e-12).
inline bool normalize_in_place(std::span<double> v) {
  if (v.empty())
    throw std::invalid_argument("normalize_block: empty vector");
  double mean = 0.0;
  for (double x : v)
    mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double &x : v) {
    x -= mean;
    ss += x * x;
  }
  const double norm = std::sqrt(ss);
  if (norm < 1e-12)
    return false;
  for (double &x : v)
    x /= norm;
  return true;
}

//! Zero-mean, unit-norm version of `masked`, or nullopt when the block is
//! flat.
inline std::optional<NormalizedBlock>
normalize_block(std::span<const double> masked) {
  NormalizedBlock out{std::vector<double>(masked.begin(), masked.end())};
  if (!normalize_in_place(out.values))
    return std::nullopt;
  return out;
}

struct SparseCode {
  std::vector<double> alpha;
  double nonzero_epsilon = 1e-8;
  std::size_t sweeps = 0;
  bool converged = true;
};

inline std::size_t complexity_measure(const SparseCode &code) {
  std::size_t cm = 0;
  for (double a : code.alpha)
    if (std::abs(a) > code.nonzero_epsilon)
      ++cm;
  return cm;
}

inline double strength_measure(const SparseCode &code) {
  std::size_t cm = 0;
  double l1 = 0.0;
  for (double a : code.alpha)
    if (std::abs(a) > code.nonzero_epsilon) {
      ++cm;
      l1 += std::abs(a);
    }
  return static_cast<double>(cm) * l1;
}

struct ElasticNetParams {
  double lambda1 = 0.125;
  double lambda2 = 0.375;
  double tolerance = 1e-10;  // max coefficient change per sweep
  std::size_t max_sweeps = 10000;
};

//! Cyclic coordinate descent with soft-thresholding over a fixed dictionary.
//! The Gram matrix is precomputed once; the solver is immutable after
//! construction and may be shared between threads.
class ElasticNetSolver {
public:
  ElasticNetSolver(const ExtendedDictionary &ed, ElasticNetParams params)
      : ed_(&ed), params_(params), k_(ed.cols()), gram_(k_ * k_) {
    if (!(params.lambda1 > 0.0) || !(params.lambda2 > 0.0))
      throw std::invalid_argument("elastic net: lambdas must be positive");
    for (std::size_t i = 0; i < k_; ++i)
      for (std::size_t j = i; j < k_; ++j) {
        const auto a = ed.column(i), b = ed.column(j);
        double g = 0.0;
        for (std::size_t r = 0; r < a.size(); ++r)
          g += a[r] * b[r];
        gram_[i * k_ + j] = gram_[j * k_ + i] = g;
      }
  }

  const ExtendedDictionary &dictionary() const { return *ed_; }
  const ElasticNetParams &params() const { return params_; }
  double gram(std::size_t i, std::size_t j) const { return gram_[i * k_ + j]; }

  //! D^T y.
  std::vector<double> correlations(std::span<const double> y) const {
    if (y.size() != ed_->rows())
      throw std::invalid_argument("elastic net: block length != dictionary rows");
    std::vector<double> c(k_);
    for (std::size_t j = 0; j < k_; ++j) {
      const auto col = ed_->column(j);
      double s = 0.0;
      for (std::size_t r = 0; r < y.size(); ++r)
        s += col[r] * y[r];
      c[j] = s;
    }
    return c;
  }

  SparseCode solve(std::span<const double> y) const {
    return solve_from_correlations(correlations(y));
  }

  //! Solves using precomputed D^T y; the objective depends on y only through
  //! these correlations (up to a constant).
  SparseCode solve_from_correlations(const std::vector<double> &c) const {
    const double l1 = params_.lambda1, l2 = params_.lambda2;
    SparseCode code;
    code.alpha.assign(k_, 0.0);
    auto &a = code.alpha;

    code.converged = false;
    for (std::size_t sweep = 1; sweep <= params_.max_sweeps; ++sweep) {
      double max_change = 0.0;
      for (std::size_t j = 0; j < k_; ++j) {
        double r = c[j];
        for (std::size_t i = 0; i < k_; ++i)
          if (i != j)
            r -= gram_[j * k_ + i] * a[i];
        const double next = soft_threshold(r, l1) / (gram_[j * k_ + j] + l2);
        max_change = std::max(max_change, std::abs(next - a[j]));
        a[j] = next;
      }
      code.sweeps = sweep;
      if (max_change < params_.tolerance) {
        code.converged = true;
        break;
      }
    }
    polish(c, a);
    return code;
  }

  //! Largest violation of the optimality conditions for `alpha`.
  double kkt_violation(std::span<const double> c,
                       std::span<const double> alpha) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      double g = c[j];
      for (std::size_t i = 0; i < k_; ++i)
        g -= gram_[j * k_ + i] * alpha[i];
      g -= params_.lambda2 * alpha[j];
      const double v = alpha[j] == 0.0
                           ? std::max(0.0, std::abs(g) - params_.lambda1)
                           : std::abs(g - params_.lambda1 *
                                              (alpha[j] > 0 ? 1.0 : -1.0));
      worst = std::max(worst, v);
    }
    return worst;
  }

private:
  static double soft_threshold(double v, double t) {
    if (v > t)
      return v - t;
    if (v < -t)
      return v + t;
    return 0.0;
  }

  // Re-solves the stationarity equations on the active set found by
  // coordinate descent. Accepted only if signs and off-support conditions
  // still hold, so the result is the exact minimiser to rounding error.
  void polish(const std::vector<double> &c, std::vector<double> &a) const {
    std::vector<std::size_t> support;
    for (std::size_t j = 0; j < k_; ++j)
      if (a[j] != 0.0)
        support.push_back(j);
    if (support.empty())
      return;
    const std::size_t m = support.size();
    std::vector<double> mat(m * m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j)
        mat[i * m + j] = gram_[support[i] * k_ + support[j]];
      mat[i * m + i] += params_.lambda2;
      rhs[i] = c[support[i]] - params_.lambda1 * (a[support[i]] > 0 ? 1.0 : -1.0);
    }
    if (!cholesky_solve(mat, rhs, m))
      return;
    std::vector<double> candidate(k_, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if ((rhs[i] > 0) != (a[support[i]] > 0) || rhs[i] == 0.0)
        return;
      candidate[support[i]] = rhs[i];
    }
    if (kkt_violation(c, candidate) > 1e-9)
      return;
    a = std::move(candidate);
  }

  // In-place Cholesky solve of a symmetric positive definite system.
  static bool cholesky_solve(std::vector<double> &a, std::vector<double> &b,
                             std::size_t m) {
    for (std::size_t j = 0; j < m; ++j) {
      double d = a[j * m + j];
      for (std::size_t k = 0; k < j; ++k)
        d -= a[j * m + k] * a[j * m + k];
      if (!(d > 0.0))
        return false;
      d = std::sqrt(d);
      a[j * m + j] = d;
      for (std::size_t i = j + 1; i < m; ++i) {
        double s = a[i * m + j];
        for (std::size_t k = 0; k < j; ++k)
          s -= a[i * m + k] * a[j * m + k];
        a[i * m + j] = s / d;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k)
        s -= a[i * m + k] * b[k];
      b[i] = s / a[i * m + i];
    }
    for (std::size_t i = m; i-- > 0;) {
      double s = b[i];
      for (std::size_t k = i + 1; k < m; ++k)
        s -= a[k * m + i] * b[k];
      b[i] = s / a[i * m + i];
    }
    return true;
  }

  const ExtendedDictionary *ed_;
  ElasticNetParams params_;
  std::size_t k_;
  std::vector<double> gram_;
};

//! One-shot convenience wrapper; prefer ElasticNetSolver for repeated solves.
inline SparseCode elastic_net(const NormalizedBlock &y,
                              const ExtendedDictionary &ed, double lambda1,
                              double lambda2) {
  return ElasticNetSolver(ed, {lambda1, lambda2}).solve(y.values);
}

//! Objective value for coefficients `alpha` and target `y`.
inline double elastic_net_objective(std::span<const double> y,
                                    const ExtendedDictionary &ed,
                                    std::span<const double> alpha,
                                    double lambda1, double lambda2) {
  std::vector<double> resid(y.begin(), y.end());
  double l1 = 0.0, l2 = 0.0;
  for (std::size_t j = 0; j < ed.cols(); ++j) {
    if (alpha[j] == 0.0)
      continue;
    const auto col = ed.column(j);
    for (std::size_t r = 0; r < resid.size(); ++r)
      resid[r] -= alpha[j] * col[r];
    l1 += std::abs(alpha[j]);
    l2 += alpha[j] * alpha[j];
  }
  double rss = 0.0;
  for (double r : resid)
    rss += r * r;
  return 0.5 * rss + lambda1 * l1 + 0.5 * lambda2 * l2;
}

} // namespace srisck
