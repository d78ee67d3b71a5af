#pragma once

// Crossover quiz analysis: two quiz versions share some questions unchanged
// and swap original/revised forms of the treatment questions. This module
// validates such designs, checks that the two arms are comparable on the
// shared questions, and estimates the original-vs-revised form effect with a
// seeded permutation test (students, i.e. version labels, are the unit of
// permutation, preserving within-student correlation).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quizsim/errors.hpp"
#include "quizsim/rng.hpp"

namespace quizsim {

enum class QuestionForm { Original, Revised };

inline const char* to_string(QuestionForm f) {
  return f == QuestionForm::Original ? "original" : "revised";
}

struct CrossoverDesign {
  std::vector<std::string> version_a;  // question ids appearing in version A
  std::vector<std::string> version_b;
  std::vector<std::string> shared;     // declared unchanged-in-both ids
  std::vector<std::string> revised;    // declared treatment ids
  std::map<std::string, QuestionForm> form_in_a;
  std::map<std::string, QuestionForm> form_in_b;

  bool in_version(const std::string& qid, const std::string& version) const {
    const auto& list = version == "A" ? version_a : version_b;
    return std::find(list.begin(), list.end(), qid) != list.end();
  }

  // Version whose students saw the revised form of `qid`.
  std::string revised_arm(const std::string& qid) const {
    auto a = form_in_a.find(qid);
    if (a != form_in_a.end() && a->second == QuestionForm::Revised) return "A";
    auto b = form_in_b.find(qid);
    if (b != form_in_b.end() && b->second == QuestionForm::Revised) return "B";
    throw ValidationError("question '" + qid + "' has no revised form in either version");
  }
};

struct DesignCheck {
  bool ok = true;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  void error(const std::string& msg) {
    ok = false;
    errors.push_back(msg);
  }
  void warn(const std::string& msg) { warnings.push_back(msg); }
};

// Structural validation: every treatment question is revised in exactly one
// version and original in the other; shared questions appear unchanged in
// both. An empty shared set is legal but downgrades the analysis (no
// randomization check), so it only warns.
inline DesignCheck validate_design(const CrossoverDesign& d) {
  DesignCheck check;

  auto form_of = [](const std::map<std::string, QuestionForm>& forms, const std::string& qid)
      -> std::optional<QuestionForm> {
    auto it = forms.find(qid);
    if (it == forms.end()) return std::nullopt;
    return it->second;
  };

  auto in_list = [](const std::vector<std::string>& list, const std::string& qid) {
    return std::find(list.begin(), list.end(), qid) != list.end();
  };

  for (const auto& qid : d.revised) {
    if (!in_list(d.version_a, qid) || !in_list(d.version_b, qid)) {
      check.error("treatment question '" + qid + "' must appear in both versions");
      continue;
    }
    auto fa = form_of(d.form_in_a, qid);
    auto fb = form_of(d.form_in_b, qid);
    if (!fa || !fb) {
      check.error("treatment question '" + qid + "' lacks a form entry for some version");
      continue;
    }
    if (*fa == QuestionForm::Revised && *fb == QuestionForm::Revised)
      check.error("question '" + qid + "' is revised in both versions");
    else if (*fa == QuestionForm::Original && *fb == QuestionForm::Original)
      check.error("question '" + qid + "' is declared a treatment question but revised in neither version");
  }

  for (const auto& qid : d.shared) {
    if (!in_list(d.version_a, qid) || !in_list(d.version_b, qid)) {
      check.error("shared question '" + qid + "' must appear in both versions");
      continue;
    }
    auto fa = form_of(d.form_in_a, qid);
    auto fb = form_of(d.form_in_b, qid);
    if (fa && fb && *fa != *fb)
      check.error("shared question '" + qid + "' differs between versions");
    if (in_list(d.revised, qid))
      check.error("question '" + qid + "' is listed both shared and revised");
  }

  std::set<std::string> accounted(d.shared.begin(), d.shared.end());
  accounted.insert(d.revised.begin(), d.revised.end());
  for (const auto& qid : d.version_a)
    if (in_list(d.version_b, qid) && !accounted.count(qid)) {
      auto fa = form_of(d.form_in_a, qid);
      auto fb = form_of(d.form_in_b, qid);
      if (fa && fb && *fa != *fb)
        check.error("question '" + qid + "' changes form but is not declared a treatment question");
    }

  if (d.shared.empty())
    check.warn("no shared questions: the randomization check is unavailable");

  return check;
}

struct StudentQuizRecord {
  std::string student_id;
  std::string version;                // "A" or "B"
  std::map<std::string, int> scores;  // question id → 0/1
};

using QuizResponses = std::vector<StudentQuizRecord>;

inline void validate_quiz_responses(const QuizResponses& responses, const CrossoverDesign& d) {
  std::set<std::string> seen;
  for (const auto& r : responses) {
    if (r.version != "A" && r.version != "B")
      throw ValidationError("student '" + r.student_id + "' has version '" + r.version +
                            "'; expected A or B");
    if (!seen.insert(r.student_id).second)
      throw ValidationError("student '" + r.student_id + "' appears twice");
    for (const auto& [qid, score] : r.scores) {
      if (score != 0 && score != 1)
        throw ValidationError("student '" + r.student_id + "' has non-binary score on '" + qid +
                              "'");
      if (!d.in_version(qid, r.version))
        throw ValidationError("student '" + r.student_id + "' scored question '" + qid +
                              "' absent from version " + r.version);
    }
  }
}

namespace detail {

struct ArmMean {
  double mean = 0.0;
  std::size_t n = 0;
};

// Mean score on one question over the students `labels` assigns to `arm`.
inline ArmMean arm_mean(const QuizResponses& responses, const std::vector<std::string>& labels,
                        const std::string& arm, const std::string& qid) {
  ArmMean out;
  double sum = 0.0;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (labels[i] != arm) continue;
    auto it = responses[i].scores.find(qid);
    if (it == responses[i].scores.end()) continue;
    sum += it->second;
    ++out.n;
  }
  if (out.n > 0) out.mean = sum / static_cast<double>(out.n);
  return out;
}

// Two-sided permutation p with the add-one correction; the tiny slack keeps
// float noise from flipping ties at |observed|.
inline double two_sided_p(double observed, const std::vector<double>& permuted) {
  std::size_t at_least = 0;
  for (double t : permuted)
    if (std::abs(t) >= std::abs(observed) - 1e-12) ++at_least;
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + permuted.size());
}

// Label vector for permutation `index`: the observed label multiset dealt to
// students in a seed-derived random order. Independent of evaluation order,
// so permutations can be computed in any order or in parallel.
inline std::vector<std::string> permuted_labels(const std::vector<std::string>& observed,
                                                std::uint64_t seed, std::uint64_t index) {
  std::size_t n_a = 0;
  for (const auto& label : observed)
    if (label == "A") ++n_a;
  std::vector<std::size_t> order(observed.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = rng_for_permutation(seed, index);
  rng.shuffle(order);
  std::vector<std::string> labels(observed.size(), "B");
  for (std::size_t i = 0; i < n_a; ++i) labels[order[i]] = "A";
  return labels;
}

}  // namespace detail

struct SharedQuestionCheck {
  std::string question_id;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double diff = 0.0;  // mean_a − mean_b
  std::optional<double> p_value;
};

// Compares the two arms on every shared question. Similar means (large
// p-values) support the claim that the arms were exchangeable at assignment.
inline std::vector<SharedQuestionCheck> randomization_check(const QuizResponses& responses,
                                                            const CrossoverDesign& d,
                                                            std::uint64_t seed = 1,
                                                            std::size_t n_permutations = 10000) {
  validate_quiz_responses(responses, d);
  std::vector<std::string> observed;
  observed.reserve(responses.size());
  for (const auto& r : responses) observed.push_back(r.version);
  const auto n_a = static_cast<std::size_t>(std::count(observed.begin(), observed.end(), "A"));
  if (n_a == 0 || n_a == observed.size())
    throw ValidationError("randomization check needs respondents in both versions");

  std::vector<SharedQuestionCheck> checks;
  for (const auto& qid : d.shared) {
    SharedQuestionCheck c;
    c.question_id = qid;
    auto a = detail::arm_mean(responses, observed, "A", qid);
    auto b = detail::arm_mean(responses, observed, "B", qid);
    c.mean_a = a.mean;
    c.mean_b = b.mean;
    c.n_a = a.n;
    c.n_b = b.n;
    c.diff = a.mean - b.mean;

    std::vector<double> permuted;
    permuted.reserve(n_permutations);
    for (std::uint64_t p = 0; p < n_permutations; ++p) {
      auto labels = detail::permuted_labels(observed, seed, p);
      auto pa = detail::arm_mean(responses, labels, "A", qid);
      auto pb = detail::arm_mean(responses, labels, "B", qid);
      permuted.push_back(pa.mean - pb.mean);
    }
    c.p_value = detail::two_sided_p(c.diff, permuted);
    checks.push_back(std::move(c));
  }
  return checks;
}

struct FormQuestionEffect {
  std::string question_id;
  double mean_original = 0.0;
  double mean_revised = 0.0;
  std::size_t n_original = 0;
  std::size_t n_revised = 0;
  double diff = 0.0;  // mean_revised − mean_original
};

struct FormEffect {
  std::vector<FormQuestionEffect> questions;
  double mean_improvement = 0.0;  // arithmetic mean of the per-question diffs
  std::optional<double> p_value;  // absent for aggregate-only input
  std::size_t n_permutations = 0;
};

namespace detail {

// Mean improvement across treatment questions under a given label vector.
// Questions with an empty arm under that labelling are left out of the
// average (cannot happen for the observed labels; the caller checks).
inline double improvement_stat(const QuizResponses& responses, const CrossoverDesign& d,
                               const std::vector<std::string>& labels) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& qid : d.revised) {
    const std::string rev_arm = d.revised_arm(qid);
    const std::string orig_arm = rev_arm == "A" ? "B" : "A";
    auto rev = arm_mean(responses, labels, rev_arm, qid);
    auto orig = arm_mean(responses, labels, orig_arm, qid);
    if (rev.n == 0 || orig.n == 0) continue;
    sum += rev.mean - orig.mean;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

}  // namespace detail

// Estimates how much the revised forms changed scores: per-question means by
// form, their average difference, and a permutation p-value obtained by
// re-dealing version labels (which simultaneously permutes form exposure).
inline FormEffect form_effect(const QuizResponses& responses, const CrossoverDesign& d,
                              std::uint64_t seed = 1, std::size_t n_permutations = 10000) {
  validate_quiz_responses(responses, d);
  if (d.revised.empty()) throw ValidationError("design has no treatment questions");

  std::vector<std::string> observed;
  observed.reserve(responses.size());
  for (const auto& r : responses) observed.push_back(r.version);

  FormEffect effect;
  double diff_sum = 0.0;
  for (const auto& qid : d.revised) {
    const std::string rev_arm = d.revised_arm(qid);
    const std::string orig_arm = rev_arm == "A" ? "B" : "A";
    FormQuestionEffect q;
    q.question_id = qid;
    auto rev = detail::arm_mean(responses, observed, rev_arm, qid);
    auto orig = detail::arm_mean(responses, observed, orig_arm, qid);
    if (rev.n == 0 || orig.n == 0)
      throw ValidationError("question '" + qid + "' has a form without respondents");
    q.mean_revised = rev.mean;
    q.n_revised = rev.n;
    q.mean_original = orig.mean;
    q.n_original = orig.n;
    q.diff = rev.mean - orig.mean;
    diff_sum += q.diff;
    effect.questions.push_back(std::move(q));
  }
  effect.mean_improvement = diff_sum / static_cast<double>(effect.questions.size());

  std::vector<double> permuted;
  permuted.reserve(n_permutations);
  for (std::uint64_t p = 0; p < n_permutations; ++p)
    permuted.push_back(detail::improvement_stat(
        responses, d, detail::permuted_labels(observed, seed, p)));
  effect.p_value = detail::two_sided_p(effect.mean_improvement, permuted);
  effect.n_permutations = n_permutations;
  return effect;
}

// Published-style summary of a finished run: arm sizes and per-question mean
// by version. Supports a descriptive analysis when no per-student rows exist.
struct VersionAggregates {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::map<std::string, double> mean_a;
  std::map<std::string, double> mean_b;
};

inline double aggregate_mean(const VersionAggregates& agg, const std::string& version,
                             const std::string& qid) {
  const auto& table = version == "A" ? agg.mean_a : agg.mean_b;
  auto it = table.find(qid);
  if (it == table.end())
    throw ValidationError("no aggregate mean for question '" + qid + "' in version " + version);
  return it->second;
}

// Descriptive form effect from aggregates alone; no p-value (per-student
// rows would be required to permute).
inline FormEffect form_effect_from_aggregates(const VersionAggregates& agg,
                                              const CrossoverDesign& d) {
  if (d.revised.empty()) throw ValidationError("design has no treatment questions");
  FormEffect effect;
  double diff_sum = 0.0;
  for (const auto& qid : d.revised) {
    const std::string rev_arm = d.revised_arm(qid);
    const std::string orig_arm = rev_arm == "A" ? "B" : "A";
    FormQuestionEffect q;
    q.question_id = qid;
    q.mean_revised = aggregate_mean(agg, rev_arm, qid);
    q.mean_original = aggregate_mean(agg, orig_arm, qid);
    q.n_revised = rev_arm == "A" ? agg.n_a : agg.n_b;
    q.n_original = orig_arm == "A" ? agg.n_a : agg.n_b;
    q.diff = q.mean_revised - q.mean_original;
    diff_sum += q.diff;
    effect.questions.push_back(std::move(q));
  }
  effect.mean_improvement = diff_sum / static_cast<double>(effect.questions.size());
  return effect;
}

// Descriptive arm comparison on shared questions from aggregates alone.
inline std::vector<SharedQuestionCheck> randomization_means_from_aggregates(
    const VersionAggregates& agg, const CrossoverDesign& d) {
  std::vector<SharedQuestionCheck> checks;
  for (const auto& qid : d.shared) {
    SharedQuestionCheck c;
    c.question_id = qid;
    c.mean_a = aggregate_mean(agg, "A", qid);
    c.mean_b = aggregate_mean(agg, "B", qid);
    c.n_a = agg.n_a;
    c.n_b = agg.n_b;
    c.diff = c.mean_a - c.mean_b;
    checks.push_back(std::move(c));
  }
  return checks;
}

}  // namespace quizsim
