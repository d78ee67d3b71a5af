#pragma once

// Item statistics over binary score matrices: per-item means, Pearson
// correlation, Cronbach's alpha, easy/hard classification, distractor
// frequencies, condition-accuracy aggregation, and cohort comparison.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"

namespace quizsim {

// Binary students × questions score matrix with a mask for missing cells
// (failed backend calls, unparsed replies).
class ResponseMatrix {
public:
  ResponseMatrix() = default;
  ResponseMatrix(std::vector<std::string> students, std::vector<std::string> questions)
      : students_(std::move(students)),
        questions_(std::move(questions)),
        scores_(students_.size() * questions_.size(), 0),
        present_(students_.size() * questions_.size(), 0) {}

  const std::vector<std::string>& students() const { return students_; }
  const std::vector<std::string>& questions() const { return questions_; }
  std::size_t n_students() const { return students_.size(); }
  std::size_t n_questions() const { return questions_.size(); }

  void set(std::size_t student, std::size_t question, bool correct) {
    scores_[at(student, question)] = correct ? 1 : 0;
    present_[at(student, question)] = 1;
  }

  void set_missing(std::size_t student, std::size_t question) {
    scores_[at(student, question)] = 0;
    present_[at(student, question)] = 0;
  }

  bool has(std::size_t student, std::size_t question) const {
    return present_[at(student, question)] != 0;
  }

  int score(std::size_t student, std::size_t question) const {
    return scores_[at(student, question)];
  }

  bool complete() const {
    for (char p : present_)
      if (!p) return false;
    return true;
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (char p : present_)
      if (!p) ++n;
    return n;
  }

  // Copy holding only the students with no missing cells; used before alpha.
  ResponseMatrix complete_cases(std::vector<std::string>* dropped = nullptr) const {
    std::vector<std::size_t> keep;
    for (std::size_t s = 0; s < n_students(); ++s) {
      bool full = true;
      for (std::size_t q = 0; q < n_questions(); ++q)
        if (!has(s, q)) { full = false; break; }
      if (full)
        keep.push_back(s);
      else if (dropped != nullptr)
        dropped->push_back(students_[s]);
    }
    std::vector<std::string> kept_ids;
    kept_ids.reserve(keep.size());
    for (std::size_t s : keep) kept_ids.push_back(students_[s]);
    ResponseMatrix out(kept_ids, questions_);
    for (std::size_t i = 0; i < keep.size(); ++i)
      for (std::size_t q = 0; q < n_questions(); ++q)
        out.set(i, q, score(keep[i], q) != 0);
    return out;
  }

private:
  std::size_t at(std::size_t student, std::size_t question) const {
    if (student >= n_students() || question >= n_questions())
      throw ValidationError("response matrix index out of range");
    return student * n_questions() + question;
  }

  std::vector<std::string> students_;
  std::vector<std::string> questions_;
  std::vector<char> scores_;
  std::vector<char> present_;
};

// Per-question mean over unmasked entries. A fully masked question has no
// defined mean and is an error.
inline std::vector<double> item_means(const ResponseMatrix& m) {
  std::vector<double> means;
  means.reserve(m.n_questions());
  for (std::size_t q = 0; q < m.n_questions(); ++q) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < m.n_students(); ++s) {
      if (!m.has(s, q)) continue;
      sum += m.score(s, q);
      ++n;
    }
    if (n == 0)
      throw ValidationError("question '" + m.questions()[q] + "' has no scored responses");
    means.push_back(sum / static_cast<double>(n));
  }
  return means;
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw ValidationError("correlation inputs differ in length");
  if (x.size() < 2)
    throw ValidationError("correlation needs at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("correlation undefined for a zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

enum class VarianceConvention { Population, Sample };

// α = K/(K−1) · (1 − Σᵢ σᵢ² / σ_X²), with per-item variances σᵢ² and the
// variance σ_X² of per-student total scores. The convention choice cancels
// (the same (n−1)/n factor appears in numerator and denominator), so
// Population is merely the default, not a behavioural knob.
inline double cronbach_alpha(const ResponseMatrix& m,
                             VarianceConvention convention = VarianceConvention::Population) {
  if (!m.complete())
    throw ValidationError("alpha needs a complete matrix; drop incomplete students first");
  const std::size_t n = m.n_students();
  const std::size_t k = m.n_questions();
  if (n < 2) throw ValidationError("alpha needs at least 2 students");
  if (k < 2) throw ValidationError("alpha needs at least 2 questions");

  const double denom =
      convention == VarianceConvention::Population ? static_cast<double>(n)
                                                   : static_cast<double>(n - 1);

  auto variance = [&](const std::vector<double>& values) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return ss / denom;
  };

  double item_var_sum = 0.0;
  std::vector<double> column(n);
  for (std::size_t q = 0; q < k; ++q) {
    for (std::size_t s = 0; s < n; ++s) column[s] = m.score(s, q);
    item_var_sum += variance(column);
  }

  std::vector<double> totals(n, 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t q = 0; q < k; ++q) totals[s] += m.score(s, q);
  const double total_var = variance(totals);
  if (total_var == 0.0)
    throw ValidationError("alpha undefined: total-score variance is zero");

  const double kk = static_cast<double>(k);
  return kk / (kk - 1.0) * (1.0 - item_var_sum / total_var);
}

enum class ItemClass { Easy, Hard, Neither };

inline const char* to_string(ItemClass c) {
  switch (c) {
    case ItemClass::Easy: return "easy";
    case ItemClass::Hard: return "hard";
    case ItemClass::Neither: return "neither";
  }
  return "neither";
}

// Easy is inclusive (mean ≥ easy_threshold); hard is strict (mean <
// hard_threshold). Every mean lands in exactly one class.
inline std::vector<ItemClass> classify_items(const std::vector<double>& means,
                                             double easy_threshold = 0.8,
                                             double hard_threshold = 0.4) {
  std::vector<ItemClass> out;
  out.reserve(means.size());
  for (double mean : means) {
    if (mean >= easy_threshold)
      out.push_back(ItemClass::Easy);
    else if (mean < hard_threshold)
      out.push_back(ItemClass::Hard);
    else
      out.push_back(ItemClass::Neither);
  }
  return out;
}

// Minimal view of one answered question, as needed for the aggregations
// below. The response log adapts its richer record type to this.
struct ScoredChoice {
  std::string student_id;
  std::string question_id;
  int chosen_index = -1;  // -1 when the response failed / was unparseable
  bool correct = false;
  ConditionTag condition;
  bool picked_confused = false;  // wrong AND chose a confused option
};

struct DistractorReport {
  std::map<std::string, std::vector<double>> option_frequency;  // question → per-option
  std::map<std::string, std::vector<char>> flagged;             // question → letters
};

// Frequency of every option per question over all answered responses; wrong
// options exceeding `threshold` are flagged by letter.
inline DistractorReport distractor_analysis(const std::vector<ScoredChoice>& responses,
                                            const std::vector<Question>& questions,
                                            double threshold = 0.25) {
  DistractorReport report;
  for (const auto& q : questions) {
    std::vector<std::size_t> counts(q.options.size(), 0);
    std::size_t total = 0;
    for (const auto& r : responses) {
      if (r.question_id != q.id || r.chosen_index < 0) continue;
      if (r.chosen_index >= static_cast<int>(q.options.size()))
        throw ValidationError("response for '" + q.id + "' picks option index " +
                              std::to_string(r.chosen_index) + " beyond the option list");
      ++counts[static_cast<std::size_t>(r.chosen_index)];
      ++total;
    }
    std::vector<double> freqs(q.options.size(), 0.0);
    std::vector<char> flags;
    for (std::size_t i = 0; i < q.options.size(); ++i) {
      freqs[i] = total == 0 ? 0.0 : static_cast<double>(counts[i]) / static_cast<double>(total);
      if (static_cast<int>(i) != q.correct_index && freqs[i] > threshold)
        flags.push_back(option_letter(static_cast<int>(i)));
    }
    report.option_frequency[q.id] = std::move(freqs);
    report.flagged[q.id] = std::move(flags);
  }
  return report;
}

// One cell of the accuracy-by-condition table.
struct ConditionCell {
  std::size_t n = 0;
  std::size_t n_correct = 0;
  std::size_t n_wrong = 0;
  std::size_t n_picked_confused = 0;  // among wrong responses

  double pct_correct() const {
    return n == 0 ? 0.0 : 100.0 * static_cast<double>(n_correct) / static_cast<double>(n);
  }
  // Share of wrong responses that chose a confused option.
  std::optional<double> pct_confused_among_wrong() const {
    if (n_wrong == 0) return std::nullopt;
    return 100.0 * static_cast<double>(n_picked_confused) / static_cast<double>(n_wrong);
  }
};

// Aggregates answered responses into (status × confused-distractor × focused)
// cells. Failed responses (chosen_index < 0) are not counted.
inline std::map<ConditionKey, ConditionCell> condition_accuracy_table(
    const std::vector<ScoredChoice>& responses) {
  std::map<ConditionKey, ConditionCell> table;
  for (const auto& r : responses) {
    if (r.chosen_index < 0) continue;
    auto& cell = table[key_of(r.condition)];
    ++cell.n;
    if (r.correct) {
      ++cell.n_correct;
    } else {
      ++cell.n_wrong;
      if (r.picked_confused) ++cell.n_picked_confused;
    }
  }
  return table;
}

struct CohortComparison {
  std::vector<std::string> questions;
  std::vector<double> means_a;
  std::vector<double> means_b;
  double r = 0.0;
  std::optional<double> alpha_a;
  std::optional<double> alpha_b;
  std::vector<ItemClass> classes_a;
  std::vector<ItemClass> classes_b;
  std::size_t easy_overlap = 0;
  std::size_t hard_overlap = 0;
};

// Compares two cohorts over the same question set: per-item means, their
// Pearson correlation, per-cohort alpha (when computable), and the overlap
// of easy/hard classifications. Question order follows matrix `a`; matrix
// `b` may list the same questions in any order.
inline CohortComparison compare_cohorts(const ResponseMatrix& a, const ResponseMatrix& b,
                                        double easy_threshold = 0.8,
                                        double hard_threshold = 0.4) {
  if (a.n_questions() != b.n_questions())
    throw ValidationError("cohorts answer different question sets");
  std::vector<std::size_t> b_col(a.n_questions());
  for (std::size_t q = 0; q < a.n_questions(); ++q) {
    bool found = false;
    for (std::size_t p = 0; p < b.n_questions(); ++p)
      if (b.questions()[p] == a.questions()[q]) {
        b_col[q] = p;
        found = true;
        break;
      }
    if (!found)
      throw ValidationError("question '" + a.questions()[q] + "' missing from second cohort");
  }

  CohortComparison cmp;
  cmp.questions = a.questions();
  cmp.means_a = item_means(a);
  const auto raw_b = item_means(b);
  cmp.means_b.reserve(raw_b.size());
  for (std::size_t q = 0; q < a.n_questions(); ++q) cmp.means_b.push_back(raw_b[b_col[q]]);
  cmp.r = pearson_r(cmp.means_a, cmp.means_b);

  auto try_alpha = [](const ResponseMatrix& m) -> std::optional<double> {
    try {
      return cronbach_alpha(m.complete_cases());
    } catch (const ValidationError&) {
      return std::nullopt;
    }
  };
  cmp.alpha_a = try_alpha(a);
  cmp.alpha_b = try_alpha(b);

  cmp.classes_a = classify_items(cmp.means_a, easy_threshold, hard_threshold);
  cmp.classes_b = classify_items(cmp.means_b, easy_threshold, hard_threshold);
  for (std::size_t q = 0; q < cmp.questions.size(); ++q) {
    if (cmp.classes_a[q] == ItemClass::Easy && cmp.classes_b[q] == ItemClass::Easy)
      ++cmp.easy_overlap;
    if (cmp.classes_a[q] == ItemClass::Hard && cmp.classes_b[q] == ItemClass::Hard)
      ++cmp.hard_overlap;
  }
  return cmp;
}

}  // namespace quizsim
