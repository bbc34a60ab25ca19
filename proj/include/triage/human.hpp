#pragma once

#include <random>
#include <string_view>
#include <variant>
#include <vector>

#include "triage/data.hpp"

namespace triage {

/// Scores drawn per label from Unif[-dH, 1 - dH] (y = +1) or Unif[-1 + dH, dH] (y = -1).
struct UniformSynthetic {
  double delta_h = 0.0;
};

/// Expert grade q_hat ~ Cat(p), p ~ Dirichlet(chi[q - 1]) where q is the
/// sample's true grade. Grades 1..grade_threshold correspond to y = -1.
struct DirichletCategorical {
  int grade_count = 0;
  std::vector<std::vector<double>> chi;
  int grade_threshold = 2;
};

/// Scores already recorded on the samples.
struct FixedScores {};

using HumanModel = std::variant<UniformSynthetic, DirichletCategorical, FixedScores>;

/// Throws InvalidArgument when the model violates its invariants.
void validate(const HumanModel& model);

/// Built-in chi tables: "messidor" (4 grades), "stare" and "aptos" (5 grades).
DirichletCategorical human_preset(std::string_view name);

/// Affine map of grade 1..k onto [-1, 1].
double grade_to_score(int grade, int grade_count);

/// Label an expert would assign given a score drawn from `model`.
int human_label(const HumanModel& model, double score);

/// Compound Dirichlet-categorical probabilities of each reported grade.
std::vector<double> grade_probabilities(const DirichletCategorical& model, int true_grade);

double sample_score(const HumanModel& model, const LabeledSample& sample, std::mt19937_64& rng);

/// Expected hinge error E[(1 - y h)_+] under `model`. FixedScores prefers a
/// sample's recorded `human_error` over its score.
double human_error(const HumanModel& model, const LabeledSample& sample);

std::vector<double> human_errors(const HumanModel& model, const DataSet& data);

/// Probability that the expert's label disagrees with y.
double expected_human_mistake(const HumanModel& model, const LabeledSample& sample);

}  // namespace triage
