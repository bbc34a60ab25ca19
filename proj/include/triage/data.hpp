#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace triage {

using Index = std::size_t;
/// Sorted, duplicate-free list of sample indices.
using IndexSet = std::vector<Index>;

struct LabeledSample {
  std::vector<double> features;
  int label = 1;
  /// Normalized expert score h(x) in [-H, H].
  std::optional<double> human_score;
  /// Expert error c(x, y), when supplied directly instead of a score.
  std::optional<double> human_error;
  /// Ground-truth severity grade (1-based) for graded data sets.
  std::optional<int> grade;
};

/// Immutable ordered collection of labeled samples sharing one feature dimension.
class DataSet {
 public:
  DataSet(std::vector<LabeledSample> samples, double score_bound = 1.0);

  std::size_t size() const { return samples_.size(); }
  std::size_t dimension() const { return dimension_; }
  double score_bound() const { return score_bound_; }

  const LabeledSample& operator[](Index i) const { return samples_[i]; }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  std::span<const double> features(Index i) const { return samples_[i].features; }
  int label(Index i) const { return samples_[i].label; }

  std::size_t count_label(int label) const;
  /// Indices of the samples carrying `label`, in order.
  IndexSet indices_with_label(int label) const;
  DataSet subset(std::span<const Index> indices) const;

  bool operator==(const DataSet& other) const;

 private:
  std::vector<LabeledSample> samples_;
  std::size_t dimension_ = 0;
  double score_bound_ = 1.0;
};

/// Two-class synthetic data for linear SVMs with offset: negatives from one
/// Gaussian, positives from a symmetric two-component Gaussian mixture.
/// Human scores follow the uniform model with shift `delta_h` in [0, 1].
///
/// Draw order per sample: label, mixture component (positives only), two
/// standard normals, human score.
DataSet generate_synthetic_linear(std::size_t count, double delta_h, std::uint64_t seed);

/// Single-Gaussian features labeled by the two-ball rule of `quadratic_label`.
DataSet generate_synthetic_quadratic(std::size_t count, double delta_h, std::uint64_t seed);

/// +1 iff ||x - [1,1]|| <= 2 or ||x + [1,1]|| >= 5.
int quadratic_label(std::span<const double> x);

/// Reads `f1,...,fm,y,<tags>` where the trailing tags are any of `h`, `c_h`, `q`.
DataSet load_csv(const std::filesystem::path& path);
DataSet parse_csv(const std::string& text);
void save_csv(const DataSet& data, const std::filesystem::path& path);
std::string format_csv(const DataSet& data);

struct SplitIndices {
  IndexSet train;
  IndexSet test;
};

/// Uniformly shuffled partition; the train side gets floor(fraction * |V|) samples.
SplitIndices split_indices(std::size_t count, double train_fraction, std::uint64_t seed);
std::pair<DataSet, DataSet> split(const DataSet& data, double train_fraction, std::uint64_t seed);

}  // namespace triage
