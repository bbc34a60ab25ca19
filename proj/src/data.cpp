#include "triage/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "triage/errors.hpp"

namespace triage {

DataSet::DataSet(std::vector<LabeledSample> samples, double score_bound)
    : samples_(std::move(samples)), score_bound_(score_bound) {
  if (samples_.empty()) throw InvalidArgument("data set must contain at least one sample");
  if (!(score_bound_ > 0.0)) throw InvalidArgument("score bound H must be positive");
  dimension_ = samples_.front().features.size();
  if (dimension_ == 0) throw InvalidArgument("samples must have at least one feature");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.features.size() != dimension_) {
      throw SchemaError("sample " + std::to_string(i) + " has " + std::to_string(s.features.size()) +
                        " features, expected " + std::to_string(dimension_));
    }
    if (s.label != 1 && s.label != -1) {
      throw ValidationError("sample " + std::to_string(i) + " has label " + std::to_string(s.label) +
                            " outside {-1, +1}");
    }
    if (s.human_score && std::abs(*s.human_score) > score_bound_) {
      throw ValidationError("sample " + std::to_string(i) + " has human score outside [-H, H]");
    }
    if (s.human_error && !(*s.human_error >= 0.0)) {
      throw ValidationError("sample " + std::to_string(i) + " has negative human error");
    }
    if (!s.human_score && !s.human_error && !s.grade) {
      throw ValidationError("sample " + std::to_string(i) + " carries no human score, error or grade");
    }
  }
}

std::size_t DataSet::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples_.begin(), samples_.end(), [&](const auto& s) { return s.label == label; }));
}

IndexSet DataSet::indices_with_label(int label) const {
  IndexSet out;
  for (Index i = 0; i < samples_.size(); ++i) {
    if (samples_[i].label == label) out.push_back(i);
  }
  return out;
}

DataSet DataSet::subset(std::span<const Index> indices) const {
  std::vector<LabeledSample> picked;
  picked.reserve(indices.size());
  for (Index i : indices) picked.push_back(samples_.at(i));
  return DataSet(std::move(picked), score_bound_);
}

bool DataSet::operator==(const DataSet& other) const {
  if (score_bound_ != other.score_bound_ || samples_.size() != other.samples_.size()) return false;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& a = samples_[i];
    const auto& b = other.samples_[i];
    if (a.features != b.features || a.label != b.label || a.human_score != b.human_score ||
        a.human_error != b.human_error || a.grade != b.grade) {
      return false;
    }
  }
  return true;
}

namespace {

void check_delta_h(double delta_h) {
  if (!(delta_h >= 0.0 && delta_h <= 1.0)) {
    throw InvalidArgument("delta_h must lie in [0, 1], got " + std::to_string(delta_h));
  }
}

// 2x2 lower Cholesky factor of [[a, b], [b, c]].
struct Cholesky2 {
  double l11, l21, l22;
  Cholesky2(double a, double b, double c) : l11(std::sqrt(a)), l21(b / std::sqrt(a)), l22(std::sqrt(c - b * b / a)) {}
  std::array<double, 2> apply(double z1, double z2) const { return {l11 * z1, l21 * z1 + l22 * z2}; }
};

double draw_uniform_score(int label, double delta_h, std::mt19937_64& rng) {
  // y = +1: Unif[-dH, 1 - dH]; y = -1: Unif[-1 + dH, dH].
  const double lo = label > 0 ? -delta_h : -1.0 + delta_h;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return lo + unit(rng);
}

}  // namespace

DataSet generate_synthetic_linear(std::size_t count, double delta_h, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("count must be positive");
  check_delta_h(delta_h);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Cholesky2 chol(6.0, 1.0, 6.0);

  std::vector<LabeledSample> samples(count);
  for (auto& s : samples) {
    s.label = coin(rng) ? 1 : -1;
    double cx = 0.0;
    double cy = 0.0;
    if (s.label > 0) {
      const bool upper = coin(rng);
      cx = cy = upper ? 5.0 : -5.0;
    }
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const auto offset = chol.apply(z1, z2);
    s.features = {cx + offset[0], cy + offset[1]};
    s.human_score = draw_uniform_score(s.label, delta_h, rng);
  }
  return DataSet(std::move(samples));
}

int quadratic_label(std::span<const double> x) {
  if (x.size() != 2) throw InvalidArgument("quadratic_label expects a 2-D point");
  const double near = std::hypot(x[0] - 1.0, x[1] - 1.0);
  const double far = std::hypot(x[0] + 1.0, x[1] + 1.0);
  return (near <= 2.0 || far >= 5.0) ? 1 : -1;
}

DataSet generate_synthetic_quadratic(std::size_t count, double delta_h, std::uint64_t seed) {
  if (count == 0) throw InvalidArgument("count must be positive");
  check_delta_h(delta_h);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Cholesky2 chol(12.0, 1.0, 14.0);

  std::vector<LabeledSample> samples(count);
  for (auto& s : samples) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const auto x = chol.apply(z1, z2);
    s.features = {x[0], x[1]};
    s.label = quadratic_label(s.features);
    s.human_score = draw_uniform_score(s.label, delta_h, rng);
  }
  return DataSet(std::move(samples));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& text, std::size_t line_no) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty field");
  std::size_t consumed = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &consumed);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse number '" + t + "'");
  }
  if (consumed != t.size()) throw ParseError("line " + std::to_string(line_no) + ": cannot parse number '" + t + "'");
  if (!std::isfinite(v)) throw ParseError("line " + std::to_string(line_no) + ": non-finite value '" + t + "'");
  return v;
}

enum class Tag { score, error, grade };

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DataSet parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    for (auto& h : split_fields(line)) header.push_back(trim(h));
    break;
  }
  if (header.empty()) throw SchemaError("CSV is empty");

  const auto y_it = std::find(header.begin(), header.end(), "y");
  if (y_it == header.end()) throw SchemaError("CSV header has no 'y' column");
  const std::size_t dim = static_cast<std::size_t>(y_it - header.begin());
  if (dim == 0) throw SchemaError("CSV header declares no feature columns");

  std::vector<Tag> tags;
  for (auto it = y_it + 1; it != header.end(); ++it) {
    if (*it == "h") {
      tags.push_back(Tag::score);
    } else if (*it == "c_h") {
      tags.push_back(Tag::error);
    } else if (*it == "q") {
      tags.push_back(Tag::grade);
    } else {
      throw SchemaError("unknown CSV column '" + *it + "' after 'y'");
    }
  }
  if (tags.empty()) throw SchemaError("CSV header needs at least one of h, c_h, q after 'y'");
  const std::size_t width = header.size();

  std::vector<LabeledSample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw SchemaError("line " + std::to_string(line_no) + " (row " + std::to_string(row) + "): expected " +
                        std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    LabeledSample s;
    s.features.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) s.features.push_back(parse_real(fields[k], line_no));
    const double y = parse_real(fields[dim], line_no);
    if (y != 1.0 && y != -1.0) {
      throw ValidationError("row " + std::to_string(row) + " (line " + std::to_string(line_no) + "): label " +
                            trim(fields[dim]) + " is not -1 or 1");
    }
    s.label = static_cast<int>(y);
    for (std::size_t t = 0; t < tags.size(); ++t) {
      const double v = parse_real(fields[dim + 1 + t], line_no);
      switch (tags[t]) {
        case Tag::score:
          if (std::abs(v) > 1.0) {
            throw ValidationError("row " + std::to_string(row) + ": human score outside [-1, 1]");
          }
          s.human_score = v;
          break;
        case Tag::error:
          if (v < 0.0) throw ValidationError("row " + std::to_string(row) + ": negative human error");
          s.human_error = v;
          break;
        case Tag::grade:
          if (v != std::floor(v) || v < 1.0) {
            throw ValidationError("row " + std::to_string(row) + ": grade must be a positive integer");
          }
          s.grade = static_cast<int>(v);
          break;
      }
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw SchemaError("CSV has a header but no rows");
  return DataSet(std::move(samples));
}

DataSet load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

std::string format_csv(const DataSet& data) {
  const auto& first = data[0];
  const bool has_score = first.human_score.has_value();
  const bool has_error = first.human_error.has_value();
  const bool has_grade = first.grade.has_value();
  for (const auto& s : data.samples()) {
    if (s.human_score.has_value() != has_score || s.human_error.has_value() != has_error ||
        s.grade.has_value() != has_grade) {
      throw SchemaError("cannot write CSV: samples carry different human columns");
    }
  }

  std::ostringstream out;
  for (std::size_t k = 0; k < data.dimension(); ++k) out << 'f' << (k + 1) << ',';
  out << 'y';
  if (has_score) out << ",h";
  if (has_error) out << ",c_h";
  if (has_grade) out << ",q";
  out << '\n';
  for (const auto& s : data.samples()) {
    for (double f : s.features) out << format_real(f) << ',';
    out << s.label;
    if (has_score) out << ',' << format_real(*s.human_score);
    if (has_error) out << ',' << format_real(*s.human_error);
    if (has_grade) out << ',' << *s.grade;
    out << '\n';
  }
  return out.str();
}

void save_csv(const DataSet& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << format_csv(data);
}

SplitIndices split_indices(std::size_t count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(count)));
  if (n_train < 1 || n_train >= count) {
    throw InvalidArgument("train_fraction " + std::to_string(train_fraction) + " leaves an empty side for " +
                          std::to_string(count) + " samples");
  }
  IndexSet order(count);
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return out;
}

std::pair<DataSet, DataSet> split(const DataSet& data, double train_fraction, std::uint64_t seed) {
  const auto parts = split_indices(data.size(), train_fraction, seed);
  return {data.subset(parts.train), data.subset(parts.test)};
}

}  // namespace triage
