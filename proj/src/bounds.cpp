#include "triage/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "triage/errors.hpp"

namespace triage {

std::vector<double> project_capped_simplex(std::span<const double> values, double cap) {
  const std::size_t n = values.size();
  if (n == 0 || cap * static_cast<double>(n) < 1.0 - 1e-12) {
    throw InvalidArgument("capped simplex is empty");
  }
  // sum_i clip(v_i - tau, 0, cap) is piecewise linear and nonincreasing in tau;
  // its kinks sit at v_i and v_i - cap.
  std::vector<double> kinks;
  kinks.reserve(2 * n);
  for (double v : values) {
    kinks.push_back(v);
    kinks.push_back(v - cap);
  }
  std::sort(kinks.begin(), kinks.end());
  auto mass = [&](double tau) {
    double m = 0.0;
    for (double v : values) m += std::clamp(v - tau, 0.0, cap);
    return m;
  };
  // Find adjacent kinks bracketing mass = 1; mass is linear between them.
  std::size_t lo = 0;
  std::size_t hi = kinks.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (mass(kinks[mid]) >= 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double m_lo = mass(kinks[lo]);
  const double m_hi = mass(kinks[hi]);
  double tau = kinks[lo];
  if (m_lo > 1.0 && m_lo != m_hi) tau = kinks[lo] + (m_lo - 1.0) * (kinks[hi] - kinks[lo]) / (m_lo - m_hi);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(values[i] - tau, 0.0, cap);
  return out;
}

namespace {

// min || sum_{i in P} mu_i phi_i - sum_{j in N} mu_j phi_j ||^2 with unit mass
// and per-entry cap on each side, by pairwise exchanges within a class.
struct HullSolve {
  std::vector<double> mu_pos;
  std::vector<double> mu_neg;
  double value = 0.0;
  bool converged = true;
};

HullSolve solve_hull_qp(const GramMatrix& gram, const IndexSet& pos, const IndexSet& neg, double cap) {
  const auto& K = gram.matrix();
  IndexSet idx = pos;
  idx.insert(idx.end(), neg.begin(), neg.end());
  const std::size_t n = idx.size();
  const std::size_t np = pos.size();
  std::vector<double> sign(n);
  std::vector<double> mu(n);
  for (std::size_t t = 0; t < n; ++t) {
    const bool positive = t < np;
    sign[t] = positive ? 1.0 : -1.0;
    mu[t] = 1.0 / static_cast<double>(positive ? np : n - np);
  }
  auto k = [&](std::size_t a, std::size_t b) {
    return K(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
  };
  std::vector<double> v(n, 0.0);  // <phi_t, x+ - x->
  auto refresh = [&] {
    std::fill(v.begin(), v.end(), 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      if (mu[b] == 0.0) continue;
      const double c = sign[b] * mu[b];
      for (std::size_t a = 0; a < n; ++a) v[a] += c * k(a, b);
    }
  };
  refresh();

  double kappa_sq = 0.0;
  for (std::size_t t = 0; t < n; ++t) kappa_sq = std::max(kappa_sq, k(t, t));
  const double tol = 1e-15 * std::max(1.0, kappa_sq);
  const std::size_t max_iter = 2'000'000;

  HullSolve out;
  out.converged = false;
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // Gradient of the squared distance: 2 sign_t v_t.
    double best_viol = 0.0;
    std::size_t gain_t = n;
    std::size_t lose_t = n;
    for (int cls = 0; cls < 2; ++cls) {
      const std::size_t begin = cls == 0 ? 0 : np;
      const std::size_t end = cls == 0 ? np : n;
      double min_grad = std::numeric_limits<double>::infinity();
      double max_grad = -std::numeric_limits<double>::infinity();
      std::size_t gi = n;
      std::size_t lj = n;
      for (std::size_t t = begin; t < end; ++t) {
        const double grad = 2.0 * sign[t] * v[t];
        if (mu[t] < cap && grad < min_grad) {
          min_grad = grad;
          gi = t;
        }
        if (mu[t] > 0.0 && grad > max_grad) {
          max_grad = grad;
          lj = t;
        }
      }
      if (gi < n && lj < n && max_grad - min_grad > best_viol) {
        best_viol = max_grad - min_grad;
        gain_t = gi;
        lose_t = lj;
      }
    }
    if (best_viol <= tol) {
      out.converged = true;
      break;
    }
    const std::size_t i = gain_t;
    const std::size_t j = lose_t;
    const double curv = k(i, i) + k(j, j) - 2.0 * k(i, j);
    const double bound = std::min(cap - mu[i], mu[j]);
    double step = curv > 0.0 ? best_viol / (2.0 * curv) : bound;
    step = std::min(step, bound);
    if (!(step > 0.0)) {
      out.converged = true;
      break;
    }
    mu[i] += step;
    mu[j] -= step;
    if (step == bound) {
      if (cap - mu[i] <= 0.0 || bound == cap - (mu[i] - step)) mu[i] = std::min(mu[i], cap);
      if (mu[j] < 0.0) mu[j] = 0.0;
    }
    const double c = sign[i] * step;
    for (std::size_t a = 0; a < n; ++a) v[a] += c * (k(a, i) - k(a, j));
    if ((iter + 1) % 10000 == 0) refresh();
  }

  out.mu_pos = project_capped_simplex(std::span<const double>(mu).subspan(0, np), cap);
  out.mu_neg = project_capped_simplex(std::span<const double>(mu).subspan(np), cap);
  std::copy(out.mu_pos.begin(), out.mu_pos.end(), mu.begin());
  std::copy(out.mu_neg.begin(), out.mu_neg.end(), mu.begin() + static_cast<std::ptrdiff_t>(np));
  refresh();
  double value = 0.0;
  for (std::size_t t = 0; t < n; ++t) value += sign[t] * mu[t] * v[t];
  out.value = std::max(0.0, value);
  return out;
}

std::size_t min_class_size(const DataSet& data) {
  return std::min(data.count_label(1), data.count_label(-1));
}

}  // namespace

HullDistanceResult reduced_hull_distance(const GramMatrix& gram, std::size_t s) {
  const auto& data = gram.data();
  const std::size_t vmin = min_class_size(data);
  if (vmin == 0) throw InvalidArgument("reduced hulls need both classes");
  if (s < 1 || s > vmin) {
    throw InvalidArgument("s = " + std::to_string(s) + " must lie in 1.." + std::to_string(vmin));
  }
  const auto solved = solve_hull_qp(gram, data.indices_with_label(1), data.indices_with_label(-1),
                                    1.0 / static_cast<double>(s));
  HullDistanceResult out;
  out.s = s;
  out.distance = std::sqrt(solved.value);
  out.mu_positive = solved.mu_pos;
  out.mu_negative = solved.mu_neg;
  out.converged = solved.converged;
  return out;
}

HullDistanceResult reduced_hull_distance(const DataSet& data, std::size_t s, const Kernel& kernel) {
  return reduced_hull_distance(GramMatrix(std::make_shared<const DataSet>(data), kernel), s);
}

std::vector<double> hull_distance_scan(const GramMatrix& gram) {
  const std::size_t vmin = min_class_size(gram.data());
  if (vmin == 0) throw InvalidArgument("reduced hulls need both classes");
  std::vector<double> out;
  out.reserve(vmin);
  for (std::size_t s = 1; s <= vmin; ++s) out.push_back(reduced_hull_distance(gram, s).distance);
  return out;
}

double overlap_threshold(const GramMatrix& gram) { return 1e-7 * gram.max_feature_norm(); }

DeltaStar delta_star(const GramMatrix& gram) {
  const std::size_t vmin = min_class_size(gram.data());
  if (vmin == 0) throw InvalidArgument("delta* needs both classes");
  const double threshold = overlap_threshold(gram);
  // Distances are nondecreasing in s, so the first separated scan entry is the minimum.
  for (std::size_t s = 1; s <= vmin; ++s) {
    const double d = reduced_hull_distance(gram, s).distance;
    if (d > threshold) return {d, s};
  }
  return {0.0, 0};
}

DeltaStar delta_star(const DataSet& data, const Kernel& kernel) {
  return delta_star(GramMatrix(std::make_shared<const DataSet>(data), kernel));
}

ZetaResult zeta(const GramMatrix& gram) {
  const auto& data = gram.data();
  if (min_class_size(data) == 0) throw InvalidArgument("zeta needs both classes");
  const auto pos = data.indices_with_label(1);
  const auto neg = data.indices_with_label(-1);
  const auto solved = solve_hull_qp(gram, pos, neg, 1.0);

  ZetaResult out;
  out.zeta = solved.value;
  out.mu.assign(data.size(), 0.0);
  for (std::size_t t = 0; t < pos.size(); ++t) out.mu[pos[t]] = solved.mu_pos[t];
  for (std::size_t t = 0; t < neg.size(); ++t) out.mu[neg[t]] = solved.mu_neg[t];

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram.matrix(), Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  const double trace = gram.matrix().trace();
  out.rank_deficient = out.min_eigenvalue <= 1e-8 * trace / static_cast<double>(data.size());
  return out;
}

ZetaResult zeta(const DataSet& data, const Kernel& kernel) {
  return zeta(GramMatrix(std::make_shared<const DataSet>(data), kernel));
}

std::string to_string(BoundVariant variant) {
  switch (variant) {
    case BoundVariant::linear_offset:
      return "linear_offset";
    case BoundVariant::kernel_offset:
      return "kernel_offset";
    case BoundVariant::no_offset:
      return "no_offset";
    case BoundVariant::hard_margin:
      return "hard_margin";
  }
  return "unknown";
}

BoundVariant parse_bound_variant(const std::string& text) {
  for (auto v : {BoundVariant::linear_offset, BoundVariant::kernel_offset, BoundVariant::no_offset,
                 BoundVariant::hard_margin}) {
    if (to_string(v) == text) return v;
  }
  throw ParseError("unknown bound variant '" + text + "'");
}

double eta_term(double eta) {
  const double gap = eta - 2.0;
  if (gap <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (gap * gap);
}

double offset_bound_denominator(double eta, std::size_t size) {
  const double v = static_cast<double>(size);
  return eta + 0.5 * eta * eta * (0.5 + std::sqrt(0.25 + 4.0 * v * (eta - 1.0) / (eta * eta))) + (eta - 1.0) * v;
}

GammaBoundReport gamma_bound(const GramMatrix& gram, double lambda, BoundVariant variant,
                             std::optional<std::size_t> budget) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  const auto& data = gram.data();
  GammaBoundReport r;
  r.variant = variant;
  r.size = data.size();
  r.lambda = lambda;
  r.kappa = gram.max_feature_norm();
  r.eta = (2.0 * std::sqrt(lambda) + r.kappa) / std::sqrt(lambda);
  const double v = static_cast<double>(r.size);
  const std::size_t vmin = min_class_size(data);
  r.rho_star = static_cast<double>(vmin) / v;

  switch (variant) {
    case BoundVariant::hard_margin:
      r.gamma_star = 1.0 / v;
      if (vmin > 0 && reduced_hull_distance(gram, 1).distance <= overlap_threshold(gram)) {
        r.warnings.push_back("the classes are not separable; the hard-margin program is infeasible");
      }
      break;
    case BoundVariant::no_offset:
      r.gamma_star = std::min(eta_term(r.eta), 0.5) / (r.eta + 0.5 * r.eta * r.eta);
      break;
    case BoundVariant::linear_offset: {
      if (!std::holds_alternative<LinearKernel>(gram.kernel())) {
        r.warnings.push_back("linear_offset bound assumes the linear kernel");
      }
      const auto ds = delta_star(gram);
      r.delta_star = ds.delta;
      r.s_star = ds.s_star;
      r.sigma_star = static_cast<double>(ds.s_star) / v;
      if (ds.s_star == 0) {
        r.gamma_star = 0.0;
        r.n_max = 0;
        r.warnings.push_back("reduced hulls overlap for every s; delta* = 0 and the bound is vacuous");
        break;
      }
      const double lead = std::pow(r.delta_star * r.sigma_star, 2) / (4.0 * lambda);
      r.gamma_star = std::min(lead, eta_term(r.eta)) / offset_bound_denominator(r.eta, r.size);
      const double room = (r.rho_star - r.sigma_star) * v;
      r.n_max = room > 0.0 ? static_cast<std::size_t>(std::floor(room + 1e-9)) : 0;
      break;
    }
    case BoundVariant::kernel_offset: {
      const auto z = zeta(gram);
      r.zeta = z.zeta;
      r.min_eigenvalue = z.min_eigenvalue;
      // Largest admissible sigma* on a grid over (0, rho*]; gamma* grows with sigma*.
      constexpr int kGrid = 64;
      double sigma = 0.0;
      for (int k = kGrid; k >= 1; --k) {
        const double candidate = r.rho_star * k / kGrid;
        if (!budget || static_cast<double>(*budget) <= (r.rho_star - candidate) * v + 1e-9) {
          sigma = candidate;
          break;
        }
      }
      r.sigma_star = sigma;
      r.n_max = static_cast<std::size_t>(std::floor((r.rho_star - sigma) * v + 1e-9));
      if (z.rank_deficient) {
        r.warnings.push_back("kernel matrix is rank deficient; the kernel bound does not apply");
        r.gamma_star = 0.0;
        break;
      }
      if (sigma <= 0.0) {
        r.warnings.push_back("budget leaves no admissible sigma* in (0, rho*]");
        r.gamma_star = 0.0;
        break;
      }
      const double lead = z.zeta * sigma * sigma / (4.0 * lambda);
      r.gamma_star = std::min(lead, eta_term(r.eta)) / offset_bound_denominator(r.eta, r.size);
      break;
    }
  }
  if (budget && r.n_max && *budget > *r.n_max) {
    r.warnings.push_back("budget " + std::to_string(*budget) + " exceeds n_max = " + std::to_string(*r.n_max) +
                         "; the bound does not cover it");
  }
  r.gamma_star = std::clamp(r.gamma_star, 0.0, 1.0);
  return r;
}

GammaBoundReport gamma_bound(const DataSet& data, double lambda, const Kernel& kernel, BoundVariant variant,
                             std::optional<std::size_t> budget) {
  return gamma_bound(GramMatrix(std::make_shared<const DataSet>(data), kernel), lambda, variant, budget);
}

std::string format_report(const GammaBoundReport& r) {
  std::ostringstream out;
  char buf[64];
  auto real = [&](double x) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  out << "variant=" << to_string(r.variant) << '\n';
  out << "size=" << r.size << '\n';
  out << "lambda=" << real(r.lambda) << '\n';
  out << "kappa=" << real(r.kappa) << '\n';
  out << "eta=" << real(r.eta) << '\n';
  out << "delta_star=" << real(r.delta_star) << '\n';
  out << "s_star=" << r.s_star << '\n';
  out << "sigma_star=" << real(r.sigma_star) << '\n';
  out << "rho_star=" << real(r.rho_star) << '\n';
  out << "zeta=" << (r.zeta ? real(*r.zeta) : std::string()) << '\n';
  out << "min_eigenvalue=" << (r.min_eigenvalue ? real(*r.min_eigenvalue) : std::string()) << '\n';
  out << "gamma_star=" << real(r.gamma_star) << '\n';
  out << "n_max=" << (r.n_max ? std::to_string(*r.n_max) : std::string()) << '\n';
  for (const auto& w : r.warnings) out << "warning=" << w << '\n';
  return out.str();
}

}  // namespace triage
