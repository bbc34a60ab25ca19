#pragma once

// Random instance generators and independent oracles shared by the unit and
// acceptance suites. Nothing here calls into the solver it checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "triage/data.hpp"
#include "triage/human.hpp"

namespace testing_support {

using triage::DataSet;
using triage::LabeledSample;

/// Gaussian blobs around +/- `shift` on the first axis with uniform human scores.
inline DataSet random_instance(std::mt19937_64& rng, std::size_t n, std::size_t dim, double shift = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (;;) {
    std::vector<LabeledSample> samples;
    for (std::size_t i = 0; i < n; ++i) {
      LabeledSample s;
      s.label = (rng() & 1) ? 1 : -1;
      s.features.resize(dim);
      for (auto& v : s.features) v = normal(rng);
      s.features[0] += shift * s.label;
      s.human_score = unit(rng);
      samples.push_back(std::move(s));
    }
    std::size_t pos = 0;
    for (const auto& s : samples) pos += s.label > 0;
    if (pos >= 2 && n - pos >= 2) return DataSet(std::move(samples));
  }
}

/// Linearly separable with margin: points pushed beyond |x_0| >= gap.
inline DataSet separable_instance(std::mt19937_64& rng, std::size_t n, std::size_t dim, double gap = 1.0) {
  DataSet raw = random_instance(rng, n, dim, 0.0);
  std::vector<LabeledSample> samples(raw.samples().begin(), raw.samples().end());
  std::uniform_real_distribution<double> extra(0.0, 1.0);
  for (auto& s : samples) s.features[0] = s.label * (gap + extra(rng));
  return DataSet(std::move(samples));
}

struct DualOracle {
  std::vector<double> alpha;
  double value = -std::numeric_limits<double>::infinity();
};

/// Exact maximizer of  sum a - (1/(4 lambda m)) a^T Q a,  0 <= a <= upper,
/// (sum a y = 0 when with_offset), by enumerating every lower/free/upper
/// pattern and solving the KKT system of the free block. n <= 9.
inline DualOracle enumerate_dual(const Eigen::MatrixXd& K, const std::vector<int>& y, double lambda,
                                 bool with_offset, double upper = 1.0) {
  const int n = static_cast<int>(y.size());
  const double s = 1.0 / (4.0 * lambda * n);
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = y[i] * y[j] * K(i, j);
  auto value = [&](const Eigen::VectorXd& a) { return a.sum() - s * a.dot(Q * a); };

  DualOracle best;
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  for (int code = 0; code < patterns; ++code) {
    std::vector<int> state(n);
    int c = code;
    for (int i = 0; i < n; ++i) state[i] = c % 3, c /= 3;
    std::vector<int> free_idx;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) free_idx.push_back(i);
      if (state[i] == 2) a[i] = upper;
    }
    const int f = static_cast<int>(free_idx.size());
    if (f > 0) {
      // Stationarity on the free block: 1 - 2 s (Q a)_i - nu y_i = 0.
      const int rows = f + (with_offset ? 1 : 0);
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, rows);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
      for (int r = 0; r < f; ++r) {
        const int i = free_idx[r];
        double fixed = 0.0;
        for (int j = 0; j < n; ++j) {
          if (state[j] == 2) fixed += Q(i, j) * upper;
        }
        for (int q = 0; q < f; ++q) M(r, q) = 2.0 * s * Q(i, free_idx[q]);
        rhs[r] = 1.0 - 2.0 * s * fixed;
        if (with_offset) M(r, f) = y[i];
      }
      if (with_offset) {
        double fixed = 0.0;
        for (int j = 0; j < n; ++j) {
          if (state[j] == 2) fixed += y[j] * upper;
        }
        for (int q = 0; q < f; ++q) M(f, q) = y[free_idx[q]];
        rhs[f] = -fixed;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < rows) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      for (int q = 0; q < f; ++q) a[free_idx[q]] = sol[q];
    }
    bool feasible = true;
    for (int i = 0; i < n; ++i) feasible = feasible && a[i] >= -1e-10 && a[i] <= upper + 1e-10;
    if (with_offset) {
      double eq = 0.0;
      for (int i = 0; i < n; ++i) eq += y[i] * a[i];
      feasible = feasible && std::abs(eq) <= 1e-9;
    }
    if (!feasible) continue;
    const double v = value(a);
    if (v > best.value) {
      best.value = v;
      best.alpha.assign(a.data(), a.data() + n);
    }
  }
  return best;
}

inline Eigen::MatrixXd linear_gram(const DataSet& d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 0.0;
      const auto a = d.features(static_cast<std::size_t>(i));
      const auto b = d.features(static_cast<std::size_t>(j));
      for (std::size_t k = 0; k < a.size(); ++k) v += a[k] * b[k];
      K(i, j) = v;
    }
  return K;
}

/// Optimal soft-margin primal value  lambda m ||w||^2 + sum hinge  on the
/// given rows, through strong duality with the enumeration oracle.
inline double oracle_svm_value(const DataSet& d, const std::vector<std::size_t>& rows, double lambda,
                               bool with_offset) {
  std::vector<LabeledSample> picked;
  for (auto r : rows) picked.push_back(d[r]);
  const DataSet sub(std::move(picked));
  std::vector<int> y;
  for (std::size_t i = 0; i < sub.size(); ++i) y.push_back(sub.label(i));
  return enumerate_dual(linear_gram(sub), y, lambda, with_offset).value;
}

/// Minimum of lambda m w^2 + sum hinge over a dense (w, b) grid, 1-D features.
inline double grid_primal_1d(const std::vector<double>& x, const std::vector<int>& y, double lambda,
                             bool with_offset, double& w_at, double& b_at) {
  double best = std::numeric_limits<double>::infinity();
  const double m = static_cast<double>(x.size());
  auto value = [&](double w, double b) {
    double v = lambda * m * w * w;
    for (std::size_t i = 0; i < x.size(); ++i) v += std::max(0.0, 1.0 - y[i] * (w * x[i] + b));
    return v;
  };
  // Coarse pass, then two refinements around the incumbent.
  double wc = 0.0, bc = 0.0, span = 4.0;
  for (int pass = 0; pass < 4; ++pass) {
    const int steps = 400;
    double bw = wc, bb = bc;
    for (int i = 0; i <= steps; ++i) {
      const double w = wc - span + 2.0 * span * i / steps;
      for (int j = 0; j <= (with_offset ? steps : 0); ++j) {
        const double b = with_offset ? bc - span + 2.0 * span * j / steps : 0.0;
        const double v = value(w, b);
        if (v < best) best = v, bw = w, bb = b;
      }
    }
    wc = bw, bc = bb;
    span /= 50.0;
  }
  w_at = wc;
  b_at = bc;
  return best;
}

/// Distance between two 1-D reduced hulls by dense grids over the
/// hull endpoints: each 1-D reduced hull is an interval whose ends are
/// averages of the s smallest / largest points.
inline double hull_gap_1d(std::vector<double> pos, std::vector<double> neg, std::size_t s) {
  auto interval = [&](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    // Smallest mass-1 combination with weights <= 1/s: fill the lowest points.
    auto extreme = [&](bool low) {
      double mass = 0.0, sum = 0.0;
      for (std::size_t k = 0; k < v.size() && mass < 1.0 - 1e-15; ++k) {
        const double x = low ? v[k] : v[v.size() - 1 - k];
        const double w = std::min(1.0 / static_cast<double>(s), 1.0 - mass);
        sum += w * x;
        mass += w;
      }
      return sum;
    };
    return std::pair{extreme(true), extreme(false)};
  };
  const auto [p_lo, p_hi] = interval(pos);
  const auto [n_lo, n_hi] = interval(neg);
  // Dense grid over both intervals as an independent distance check.
  double best = std::numeric_limits<double>::infinity();
  const int steps = 2000;
  for (int i = 0; i <= steps; ++i) {
    const double a = p_lo + (p_hi - p_lo) * i / steps;
    const double closest = std::clamp(a, n_lo, n_hi);
    best = std::min(best, std::abs(a - closest));
  }
  return best;
}

}  // namespace testing_support
