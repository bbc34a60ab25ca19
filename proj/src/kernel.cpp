#include "triage/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "triage/errors.hpp"

namespace triage {

namespace {

double dot(std::span<const double> x, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += x[k] * z[k];
  return s;
}

double squared_distance(std::span<const double> x, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - z[k];
    s += d * d;
  }
  return s;
}

}  // namespace

void validate(const Kernel& kernel) {
  if (const auto* p = std::get_if<PolynomialKernel>(&kernel)) {
    if (p->degree < 1) throw InvalidArgument("polynomial degree must be positive");
    if (!std::isfinite(p->scale)) throw InvalidArgument("polynomial scale must be finite");
  } else if (const auto* r = std::get_if<RbfKernel>(&kernel)) {
    if (!(r->width > 0.0)) throw InvalidArgument("RBF width must be positive");
  } else if (const auto* g = std::get_if<PrecomputedKernel>(&kernel)) {
    if (!g->gram || g->gram->rows() != g->gram->cols()) throw InvalidArgument("precomputed Gram must be square");
    const auto& m = *g->gram;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        if (std::abs(m(i, j) - m(j, i)) > 1e-9) throw InvalidArgument("precomputed Gram is not symmetric");
      }
    }
  }
}

double kernel_value(const Kernel& kernel, std::span<const double> x, std::span<const double> z) {
  if (x.size() != z.size()) throw InvalidArgument("kernel arguments differ in dimension");
  if (std::holds_alternative<LinearKernel>(kernel)) return dot(x, z);
  if (const auto* p = std::get_if<PolynomialKernel>(&kernel)) return std::pow(p->scale * dot(x, z), p->degree);
  if (const auto* r = std::get_if<RbfKernel>(&kernel)) {
    return std::exp(-squared_distance(x, z) / (2.0 * r->width * r->width));
  }
  throw InvalidArgument("precomputed kernel cannot be evaluated on explicit feature vectors");
}

std::string describe(const Kernel& kernel) {
  char buf[96];
  if (std::holds_alternative<LinearKernel>(kernel)) return "linear";
  if (const auto* p = std::get_if<PolynomialKernel>(&kernel)) {
    std::snprintf(buf, sizeof buf, "poly:%.17g:%d", p->scale, p->degree);
    return buf;
  }
  if (const auto* r = std::get_if<RbfKernel>(&kernel)) {
    std::snprintf(buf, sizeof buf, "rbf:%.17g", r->width);
    return buf;
  }
  return "precomputed";
}

Kernel parse_kernel(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ':')) parts.push_back(part);
  try {
    if (parts.size() == 1 && parts[0] == "linear") return LinearKernel{};
    if (parts.size() == 3 && parts[0] == "poly") {
      PolynomialKernel k{std::stod(parts[1]), std::stoi(parts[2])};
      validate(k);
      return k;
    }
    if (parts.size() == 2 && parts[0] == "rbf") {
      RbfKernel k{std::stod(parts[1])};
      validate(k);
      return k;
    }
  } catch (const std::logic_error&) {
    // fall through to the generic message
  }
  throw ParseError("cannot parse kernel descriptor '" + text + "'");
}

GramMatrix::GramMatrix(std::shared_ptr<const DataSet> data, Kernel kernel)
    : data_(std::move(data)), kernel_(std::move(kernel)) {
  validate(kernel_);
  const auto n = static_cast<Eigen::Index>(data_->size());
  if (const auto* g = std::get_if<PrecomputedKernel>(&kernel_)) {
    if (g->gram->rows() != n) throw InvalidArgument("precomputed Gram size does not match the data set");
    values_ = *g->gram;
    return;
  }
  for (const auto& s : data_->samples()) {
    for (double f : s.features) {
      if (!std::isfinite(f)) throw NumericError("non-finite feature value");
    }
  }
  values_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel_value(kernel_, data_->features(static_cast<Index>(i)), data_->features(static_cast<Index>(j)));
      values_(i, j) = v;
      values_(j, i) = v;
    }
  }
}

double GramMatrix::cross(std::span<const double> x, Index i) const {
  return kernel_value(kernel_, x, data_->features(i));
}

double GramMatrix::max_feature_norm() const {
  double best = 0.0;
  for (Eigen::Index i = 0; i < values_.rows(); ++i) best = std::max(best, std::sqrt(std::max(0.0, values_(i, i))));
  return best;
}

}  // namespace triage
