#include "triage/human.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "triage/errors.hpp"

namespace triage {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int require_grade(const DirichletCategorical& model, const LabeledSample& sample) {
  if (!sample.grade) throw InvalidArgument("Dirichlet-categorical human model needs the sample's grade");
  const int q = *sample.grade;
  if (q < 1 || q > model.grade_count) {
    throw InvalidArgument("grade " + std::to_string(q) + " outside 1.." + std::to_string(model.grade_count));
  }
  return q;
}

double require_score(const LabeledSample& sample) {
  if (!sample.human_score) throw InvalidArgument("fixed-score human model needs the sample's human score");
  return *sample.human_score;
}

}  // namespace

void validate(const HumanModel& model) {
  std::visit(overloaded{
                 [](const UniformSynthetic& m) {
                   if (!(m.delta_h >= 0.0 && m.delta_h <= 1.0)) throw InvalidArgument("delta_h must lie in [0, 1]");
                 },
                 [](const DirichletCategorical& m) {
                   if (m.grade_count < 2) throw InvalidArgument("Dirichlet model needs at least two grades");
                   if (m.grade_threshold < 1 || m.grade_threshold >= m.grade_count) {
                     throw InvalidArgument("grade threshold must lie in [1, k)");
                   }
                   if (m.chi.size() != static_cast<std::size_t>(m.grade_count)) {
                     throw InvalidArgument("Dirichlet model needs one chi vector per grade");
                   }
                   for (const auto& row : m.chi) {
                     if (row.size() != static_cast<std::size_t>(m.grade_count)) {
                       throw InvalidArgument("chi vectors must have one entry per grade");
                     }
                     for (double c : row) {
                       if (!(c > 0.0)) throw InvalidArgument("chi entries must be strictly positive");
                     }
                   }
                 },
                 [](const FixedScores&) {},
             },
             model);
}

DirichletCategorical human_preset(std::string_view name) {
  DirichletCategorical m;
  m.grade_threshold = 2;
  if (name == "messidor") {
    m.grade_count = 4;
    m.chi = {{3, 3, 1, 1}, {2, 3, 2, 1}, {0.5, 0.5, 5, 4}, {0.1, 0.1, 4, 6}};
  } else if (name == "stare") {
    m.grade_count = 5;
    m.chi = {{3, 3, 2, 1, 1}, {2, 7, 0.5, 0.5, 0.1}, {0.1, 0.1, 4, 3, 2}, {1, 2, 3, 3, 1}, {0.1, 0.1, 5, 5, 5}};
  } else if (name == "aptos") {
    m.grade_count = 5;
    m.chi = {{4, 2, 1, 1, 1}, {4, 1, 1, 0.5, 0.5}, {0.1, 0.1, 5, 4, 4}, {0.1, 0.1, 4, 5, 4}, {0.1, 0.1, 4, 4, 5}};
  } else {
    throw InvalidArgument("unknown human preset '" + std::string(name) + "'");
  }
  return m;
}

double grade_to_score(int grade, int grade_count) {
  return 2.0 * static_cast<double>(grade - 1) / static_cast<double>(grade_count - 1) - 1.0;
}

int human_label(const HumanModel& model, double score) {
  if (const auto* m = std::get_if<DirichletCategorical>(&model)) {
    const double grade = (score + 1.0) * static_cast<double>(m->grade_count - 1) / 2.0 + 1.0;
    return std::lround(grade) <= m->grade_threshold ? -1 : 1;
  }
  return score >= 0.0 ? 1 : -1;
}

std::vector<double> grade_probabilities(const DirichletCategorical& model, int true_grade) {
  const auto& chi = model.chi.at(static_cast<std::size_t>(true_grade - 1));
  const double total = std::accumulate(chi.begin(), chi.end(), 0.0);
  std::vector<double> p(chi.size());
  std::transform(chi.begin(), chi.end(), p.begin(), [&](double c) { return c / total; });
  return p;
}

double sample_score(const HumanModel& model, const LabeledSample& sample, std::mt19937_64& rng) {
  return std::visit(
      overloaded{
          [&](const UniformSynthetic& m) {
            const double lo = sample.label > 0 ? -m.delta_h : -1.0 + m.delta_h;
            return lo + std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          },
          [&](const DirichletCategorical& m) {
            const int q = require_grade(m, sample);
            const auto& chi = m.chi[static_cast<std::size_t>(q - 1)];
            std::vector<double> p(chi.size());
            for (std::size_t k = 0; k < chi.size(); ++k) p[k] = std::gamma_distribution<double>(chi[k], 1.0)(rng);
            // A tiny concentration can underflow every component to zero.
            if (std::accumulate(p.begin(), p.end(), 0.0) <= 0.0) p = grade_probabilities(m, q);
            std::discrete_distribution<int> cat(p.begin(), p.end());
            return grade_to_score(cat(rng) + 1, m.grade_count);
          },
          [&](const FixedScores&) { return require_score(sample); },
      },
      model);
}

double human_error(const HumanModel& model, const LabeledSample& sample) {
  const double y = sample.label;
  return std::visit(overloaded{
                        [&](const UniformSynthetic& m) {
                          // Both label branches put 1 - y h in [dH, 1 + dH], so the hinge is inactive.
                          return 0.5 + m.delta_h;
                        },
                        [&](const DirichletCategorical& m) {
                          const auto p = grade_probabilities(m, require_grade(m, sample));
                          double e = 0.0;
                          for (int g = 1; g <= m.grade_count; ++g) {
                            e += p[static_cast<std::size_t>(g - 1)] *
                                 std::max(0.0, 1.0 - y * grade_to_score(g, m.grade_count));
                          }
                          return e;
                        },
                        [&](const FixedScores&) {
                          if (sample.human_error) return *sample.human_error;
                          return std::max(0.0, 1.0 - y * require_score(sample));
                        },
                    },
                    model);
}

std::vector<double> human_errors(const HumanModel& model, const DataSet& data) {
  validate(model);
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& s : data.samples()) out.push_back(human_error(model, s));
  return out;
}

double expected_human_mistake(const HumanModel& model, const LabeledSample& sample) {
  return std::visit(overloaded{
                        [&](const UniformSynthetic& m) { return m.delta_h; },
                        [&](const DirichletCategorical& m) {
                          const auto p = grade_probabilities(m, require_grade(m, sample));
                          double wrong = 0.0;
                          for (int g = 1; g <= m.grade_count; ++g) {
                            if (human_label(model, grade_to_score(g, m.grade_count)) != sample.label) {
                              wrong += p[static_cast<std::size_t>(g - 1)];
                            }
                          }
                          return wrong;
                        },
                        [&](const FixedScores&) {
                          return human_label(model, require_score(sample)) != sample.label ? 1.0 : 0.0;
                        },
                    },
                    model);
}

}  // namespace triage
