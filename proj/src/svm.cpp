#include "triage/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "triage/errors.hpp"

namespace triage {

namespace {

constexpr double kCurvatureFloor = 1e-12;
// Coefficients this close to a bound count as sitting on it when recovering b.
constexpr double kFreeTolerance = 1e-8;

void check_active(const GramMatrix& gram, const IndexSet& active) {
  if (active.empty()) throw InvalidArgument("SVM needs at least one active sample");
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k] >= gram.size()) throw InvalidArgument("active index out of range");
    if (k > 0 && active[k] <= active[k - 1]) throw InvalidArgument("active set must be sorted and duplicate-free");
  }
}

double median(std::vector<double> values) {
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Working state of one dual solve. Coefficients live in active order.
struct DualSolver {
  const Eigen::MatrixXd& K;
  const IndexSet& active;
  std::vector<int> y;
  std::vector<double> alpha;
  std::vector<double> u;  // sum_v y_v alpha_v K(t, v)
  double scale;           // 1 / (2 lambda |A|)
  double upper;           // box bound, +inf for hard margin
  const SvmOptions& opt;
  std::size_t updates = 0;
  double violation = 0.0;

  DualSolver(const GramMatrix& gram, const IndexSet& act, const SvmOptions& o)
      : K(gram.matrix()),
        active(act),
        scale(1.0 / (2.0 * o.lambda * static_cast<double>(act.size()))),
        upper(o.hard_margin ? std::numeric_limits<double>::infinity() : 1.0),
        opt(o) {
    y.reserve(active.size());
    for (Index i : active) y.push_back(gram.data().label(i));
  }

  const double* column(std::size_t t) const { return K.col(static_cast<Eigen::Index>(active[t])).data(); }

  void compute_sums() {
    const std::size_t m = active.size();
    u.assign(m, 0.0);
    for (std::size_t v = 0; v < m; ++v) {
      if (alpha[v] == 0.0) continue;
      const double c = y[v] * alpha[v];
      const double* col = column(v);
      for (std::size_t t = 0; t < m; ++t) u[t] += c * col[active[t]];
    }
  }

  void shift_coefficient(std::size_t t, double delta) {
    alpha[t] += delta;
    const double c = y[t] * delta;
    const double* col = column(t);
    for (std::size_t r = 0; r < u.size(); ++r) u[r] += c * col[active[r]];
  }

  // Restores sum alpha_i y_i = 0 by lowering coefficients on the heavier side.
  void repair_equality() {
    double residual = 0.0;
    for (std::size_t t = 0; t < alpha.size(); ++t) residual += y[t] * alpha[t];
    if (std::abs(residual) <= 1e-14) return;
    const int heavy = residual > 0.0 ? 1 : -1;
    double excess = std::abs(residual);
    for (std::size_t t = 0; t < alpha.size() && excess > 0.0; ++t) {
      if (y[t] != heavy || alpha[t] <= 0.0) continue;
      const double cut = std::min(alpha[t], excess);
      shift_coefficient(t, -cut);
      if (alpha[t] < 1e-300) alpha[t] = 0.0;
      excess -= cut;
    }
  }

  void check_divergence(std::size_t t) const {
    if (alpha[t] > opt.divergence_cap) {
      throw NonSeparable("hard-margin dual diverged: active samples are not separable");
    }
  }

  // Pairwise ascent under the equality constraint. e_t = y_t - w^T phi(x_t).
  void solve_with_offset() {
    const std::size_t m = active.size();
    while (true) {
      double best_up = -std::numeric_limits<double>::infinity();
      double best_low = std::numeric_limits<double>::infinity();
      std::size_t i = m;
      for (std::size_t t = 0; t < m; ++t) {
        const double e = y[t] - scale * u[t];
        const bool up = y[t] > 0 ? alpha[t] < upper : alpha[t] > 0.0;
        const bool low = y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper;
        if (up && e > best_up) {
          best_up = e;
          i = t;
        }
        if (low && e < best_low) best_low = e;
      }
      violation = (i == m || best_low == std::numeric_limits<double>::infinity()) ? 0.0 : best_up - best_low;
      if (violation <= opt.tolerance) return;
      if (updates >= opt.max_updates) return;

      // Second-order choice of the partner among the lower-set violators.
      const double* ki = column(i);
      const double kii = ki[active[i]];
      std::size_t j = m;
      double best_gain = -1.0;
      double best_curv = 1.0;
      for (std::size_t t = 0; t < m; ++t) {
        const bool low = y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper;
        if (!low) continue;
        const double e = y[t] - scale * u[t];
        const double b = best_up - e;
        if (b <= 0.0) continue;
        double a = scale * (kii + column(t)[active[t]] - 2.0 * ki[active[t]]);
        if (a <= 0.0) a = kCurvatureFloor;
        const double gain = b * b / a;
        if (gain > best_gain) {
          best_gain = gain;
          best_curv = a;
          j = t;
        }
      }
      if (j == m) return;

      const double ej = y[j] - scale * u[j];
      double step = (best_up - ej) / best_curv;
      double bound_i = y[i] > 0 ? upper - alpha[i] : alpha[i];
      double bound_j = y[j] > 0 ? alpha[j] : upper - alpha[j];
      step = std::min({step, bound_i, bound_j});

      alpha[i] += y[i] * step;
      alpha[j] -= y[j] * step;
      if (step == bound_i) alpha[i] = y[i] > 0 ? upper : 0.0;
      if (step == bound_j) alpha[j] = y[j] > 0 ? 0.0 : upper;
      const double* kj = column(j);
      for (std::size_t r = 0; r < m; ++r) u[r] += step * (ki[active[r]] - kj[active[r]]);
      ++updates;
      if (opt.hard_margin) {
        check_divergence(i);
        check_divergence(j);
      }
    }
  }

  // Greedy single-coordinate ascent; G_t = y_t w^T phi(x_t) - 1.
  void solve_without_offset() {
    const std::size_t m = active.size();
    while (true) {
      std::size_t pick = m;
      violation = 0.0;
      for (std::size_t t = 0; t < m; ++t) {
        const double g = y[t] * scale * u[t] - 1.0;
        double v = 0.0;
        if (g < 0.0 && alpha[t] < upper) v = -g;
        if (g > 0.0 && alpha[t] > 0.0) v = g;
        if (v > violation) {
          violation = v;
          pick = t;
        }
      }
      if (violation <= opt.tolerance || updates >= opt.max_updates) return;

      const double g = y[pick] * scale * u[pick] - 1.0;
      const double curv = scale * column(pick)[active[pick]];
      double target = curv > 0.0 ? alpha[pick] - g / curv : (g < 0.0 ? upper : 0.0);
      if (!std::isfinite(target)) {
        throw NonSeparable("hard-margin dual diverged: active samples are not separable");
      }
      target = std::clamp(target, 0.0, upper);
      const double delta = target - alpha[pick];
      shift_coefficient(pick, delta);
      alpha[pick] = target;
      ++updates;
      if (opt.hard_margin) check_divergence(pick);
    }
  }

  double recover_offset() const {
    std::vector<double> free_values;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const double cap = std::isfinite(upper) ? upper - kFreeTolerance : std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < active.size(); ++t) {
      const double e = y[t] - scale * u[t];
      if (alpha[t] > kFreeTolerance && alpha[t] < cap) free_values.push_back(e);
      const bool up = y[t] > 0 ? alpha[t] < upper : alpha[t] > 0.0;
      const bool low = y[t] > 0 ? alpha[t] > 0.0 : alpha[t] < upper;
      if (up) lo = std::max(lo, e);
      if (low) hi = std::min(hi, e);
    }
    if (!free_values.empty()) return median(std::move(free_values));
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    return std::isfinite(lo) ? lo : (std::isfinite(hi) ? hi : 0.0);
  }
};

}  // namespace

double SvmModel::weight_scale() const { return 1.0 / (2.0 * lambda_ * static_cast<double>(active_.size())); }

void SvmModel::recompute_kernel_sums() {
  const auto& K = gram_->matrix();
  const std::size_t m = active_.size();
  kernel_sums_.assign(m, 0.0);
  for (std::size_t v = 0; v < m; ++v) {
    if (alpha_[v] == 0.0) continue;
    const double c = gram_->data().label(active_[v]) * alpha_[v];
    const double* col = K.col(static_cast<Eigen::Index>(active_[v])).data();
    for (std::size_t t = 0; t < m; ++t) kernel_sums_[t] += c * col[active_[t]];
  }
}

SvmModel SvmModel::from_parts(std::shared_ptr<const GramMatrix> gram, IndexSet active, std::vector<double> alpha,
                              std::optional<double> offset, double lambda, bool hard_margin) {
  if (!gram) throw InvalidArgument("model needs a Gram matrix");
  check_active(*gram, active);
  if (alpha.size() != active.size()) throw InvalidArgument("alpha and active set differ in length");
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  SvmModel model;
  model.gram_ = std::move(gram);
  model.active_ = std::move(active);
  model.alpha_ = std::move(alpha);
  model.offset_ = offset;
  model.lambda_ = lambda;
  model.hard_margin_ = hard_margin;
  model.recompute_kernel_sums();
  return model;
}

double SvmModel::margin(std::span<const double> x) const {
  if (x.size() != data().dimension()) throw InvalidArgument("query dimension does not match the data set");
  double sum = 0.0;
  for (std::size_t t = 0; t < active_.size(); ++t) {
    if (alpha_[t] == 0.0) continue;
    sum += alpha_[t] * data().label(active_[t]) * gram_->cross(x, active_[t]);
  }
  return weight_scale() * sum + offset_.value_or(0.0);
}

double SvmModel::margin_at(Index i) const {
  if (i >= gram_->size()) throw InvalidArgument("query index outside the training data set");
  const double* col = gram_->matrix().col(static_cast<Eigen::Index>(i)).data();
  double sum = 0.0;
  for (std::size_t t = 0; t < active_.size(); ++t) {
    if (alpha_[t] == 0.0) continue;
    sum += alpha_[t] * data().label(active_[t]) * col[active_[t]];
  }
  return weight_scale() * sum + offset_.value_or(0.0);
}

double SvmModel::weight_norm_sq() const {
  double quad = 0.0;
  for (std::size_t t = 0; t < active_.size(); ++t) quad += alpha_[t] * data().label(active_[t]) * kernel_sums_[t];
  const double s = weight_scale();
  return std::max(0.0, s * s * quad);
}

double SvmModel::dual_value() const {
  double total = 0.0;
  double quad = 0.0;
  for (std::size_t t = 0; t < active_.size(); ++t) {
    total += alpha_[t];
    quad += alpha_[t] * data().label(active_[t]) * kernel_sums_[t];
  }
  return total - quad / (4.0 * lambda_ * static_cast<double>(active_.size()));
}

SvmModel train_svm(std::shared_ptr<const GramMatrix> gram, IndexSet active, const SvmOptions& options,
                   const WarmStart* warm_start) {
  if (!gram) throw InvalidArgument("train_svm needs a Gram matrix");
  if (!(options.lambda > 0.0) || !std::isfinite(options.lambda)) throw InvalidArgument("lambda must be positive");
  check_active(*gram, active);
  if (options.with_offset) {
    bool pos = false;
    bool neg = false;
    for (Index i : active) (gram->data().label(i) > 0 ? pos : neg) = true;
    if (!(pos && neg)) {
      throw DegenerateProblem("SVM with offset needs both classes among the " + std::to_string(active.size()) +
                              " active samples; the offset is unbounded otherwise");
    }
  }

  DualSolver solver(*gram, active, options);
  const std::size_t m = active.size();
  const bool warm = warm_start && warm_start->alpha.size() == m;
  if (warm) {
    solver.alpha = warm_start->alpha;
    bool clipped = false;
    for (auto& a : solver.alpha) {
      const double c = std::clamp(std::isfinite(a) ? a : 0.0, 0.0, solver.upper);
      clipped |= c != a;
      a = c;
    }
    if (!clipped && warm_start->kernel_sums.size() == m) {
      solver.u = warm_start->kernel_sums;
    } else {
      solver.compute_sums();
    }
    if (options.with_offset) solver.repair_equality();
  } else {
    solver.alpha.assign(m, 0.0);
    solver.u.assign(m, 0.0);
  }

  if (options.with_offset) {
    solver.solve_with_offset();
  } else {
    solver.solve_without_offset();
  }

  SvmModel model;
  model.gram_ = std::move(gram);
  model.lambda_ = options.lambda;
  model.hard_margin_ = options.hard_margin;
  model.converged_ = solver.violation <= options.tolerance;
  model.updates_ = solver.updates;
  model.final_violation_ = solver.violation;
  if (options.with_offset) model.offset_ = solver.recover_offset();
  model.alpha_ = std::move(solver.alpha);
  model.kernel_sums_ = std::move(solver.u);
  model.active_ = std::move(active);
  return model;
}

SvmModel train_svm(const DataSet& data, IndexSet active, double lambda, const Kernel& kernel, bool with_offset,
                   const std::optional<std::vector<double>>& warm_alpha) {
  auto gram = std::make_shared<const GramMatrix>(std::make_shared<const DataSet>(data), kernel);
  SvmOptions options;
  options.lambda = lambda;
  options.with_offset = with_offset;
  if (warm_alpha) {
    WarmStart warm{*warm_alpha, {}};
    return train_svm(std::move(gram), std::move(active), options, &warm);
  }
  return train_svm(std::move(gram), std::move(active), options);
}

std::pair<IndexSet, WarmStart> warm_start_without(const SvmModel& parent, Index dropped) {
  const auto& active = parent.active();
  const auto it = std::lower_bound(active.begin(), active.end(), dropped);
  if (it == active.end() || *it != dropped) throw InvalidArgument("dropped index is not active in the parent model");
  const auto pos = static_cast<std::size_t>(it - active.begin());
  const double coeff = parent.alpha()[pos] * parent.data().label(dropped);
  const double* col = parent.gram().matrix().col(static_cast<Eigen::Index>(dropped)).data();

  IndexSet reduced;
  WarmStart warm;
  reduced.reserve(active.size() - 1);
  warm.alpha.reserve(active.size() - 1);
  warm.kernel_sums.reserve(active.size() - 1);
  for (std::size_t t = 0; t < active.size(); ++t) {
    if (t == pos) continue;
    reduced.push_back(active[t]);
    warm.alpha.push_back(parent.alpha()[t]);
    warm.kernel_sums.push_back(parent.kernel_sums()[t] - coeff * col[active[t]]);
  }
  return {std::move(reduced), std::move(warm)};
}

double objective_value(const SvmModel& model, std::span<const Index> active) {
  const double norm = model.weight_norm_sq();
  double total = model.lambda() * static_cast<double>(active.size()) * norm;
  if (model.hard_margin()) return total;
  for (Index i : active) total += std::max(0.0, 1.0 - model.data().label(i) * model.margin_at(i));
  return total;
}

double objective_value(const SvmModel& model) {
  if (model.hard_margin()) {
    return model.lambda() * static_cast<double>(model.active().size()) * model.weight_norm_sq();
  }
  // Active-set margins come straight from the cached kernel sums.
  const double s = model.weight_scale();
  const double b = model.offset().value_or(0.0);
  double total = model.lambda() * static_cast<double>(model.active().size()) * model.weight_norm_sq();
  for (std::size_t t = 0; t < model.active().size(); ++t) {
    const double y = model.data().label(model.active()[t]);
    total += std::max(0.0, 1.0 - y * (s * model.kernel_sums()[t] + b));
  }
  return total;
}

KktReport kkt_check(const SvmModel& model, double tolerance) {
  KktReport report;
  const double upper = model.hard_margin() ? std::numeric_limits<double>::infinity() : 1.0;
  for (std::size_t t = 0; t < model.active().size(); ++t) {
    const Index i = model.active()[t];
    const double a = model.alpha()[t];
    const double y = model.data().label(i);
    const double ym = y * model.margin_at(i);
    if (a < -tolerance || a > upper + tolerance) {
      report.box_violations.push_back(i);
      report.max_violation = std::max(report.max_violation, a < 0.0 ? -a : a - upper);
    }
    if (ym > 1.0 + tolerance && a > tolerance) {
      report.outside_margin_violations.push_back(i);
      report.max_violation = std::max(report.max_violation, std::min(ym - 1.0, a));
    }
    if (ym < 1.0 - tolerance && a < upper - tolerance) {
      report.inside_margin_violations.push_back(i);
      report.max_violation = std::max(report.max_violation, std::min(1.0 - ym, upper - a));
    }
    report.equality_residual += a * y;
  }
  report.equality_residual = model.offset() ? std::abs(report.equality_residual) : 0.0;
  return report;
}

std::string serialize_model(const SvmModel& model) {
  std::ostringstream out;
  out << "svm-triage-model 1\n";
  out << "kernel " << describe(model.kernel()) << '\n';
  out << "lambda " << format_real(model.lambda()) << '\n';
  out << "offset " << (model.offset() ? format_real(*model.offset()) : std::string("none")) << '\n';
  out << "hard_margin " << (model.hard_margin() ? 1 : 0) << '\n';
  out << "active " << model.active().size() << '\n';
  for (std::size_t t = 0; t < model.active().size(); ++t) {
    out << model.active()[t] << ' ' << format_real(model.alpha()[t]) << '\n';
  }
  return out.str();
}

SvmModel parse_model(const std::string& text, std::shared_ptr<const GramMatrix> gram) {
  std::istringstream in(text);
  std::string key;
  std::string value;
  auto expect = [&](const char* name) {
    if (!(in >> key >> value) || key != name) throw ParseError(std::string("model file: expected '") + name + "'");
    return value;
  };
  if (expect("svm-triage-model") != "1") throw ParseError("model file: unsupported version");
  const std::string kernel = expect("kernel");
  if (!gram) throw InvalidArgument("parse_model needs the training Gram matrix");
  if (kernel != describe(gram->kernel())) {
    throw SchemaError("model kernel '" + kernel + "' does not match '" + describe(gram->kernel()) + "'");
  }
  try {
    const double lambda = std::stod(expect("lambda"));
    const std::string off = expect("offset");
    std::optional<double> offset;
    if (off != "none") offset = std::stod(off);
    const bool hard = expect("hard_margin") == "1";
    const auto count = static_cast<std::size_t>(std::stoull(expect("active")));
    IndexSet active(count);
    std::vector<double> alpha(count);
    for (std::size_t t = 0; t < count; ++t) {
      std::string idx;
      std::string a;
      if (!(in >> idx >> a)) throw ParseError("model file: truncated coefficient list");
      active[t] = static_cast<Index>(std::stoull(idx));
      alpha[t] = std::stod(a);
    }
    return SvmModel::from_parts(std::move(gram), std::move(active), std::move(alpha), offset, lambda, hard);
  } catch (const std::logic_error&) {
    throw ParseError("model file: malformed number");
  }
}

}  // namespace triage
