#pragma once

// Item-analysis report over one or more cohorts: per-question means with
// easy/hard markers, internal-consistency alpha where a full matrix exists,
// pairwise mean correlations, flagged distractors for hard questions, and
// the accuracy-by-condition table. The report is built once as a value;
// machine-readable (JSON) and human-readable renderings are generated from
// that value and carry identical numbers (every figure is rounded to four
// decimals when the report is built). Rendering is deterministic:
// re-rendering the same report yields byte-identical output.

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "quizsim/bank_io.hpp"
#include "quizsim/calibration.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"
#include "quizsim/psychometrics.hpp"

namespace quizsim {

namespace detail {

inline double round4(double x) { return std::round(x * 10000.0) / 10000.0; }

inline std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace detail

// One cohort's input to the report: its per-question means in display order,
// plus optional richer data enabling more sections.
struct ReportCohortInput {
  std::string name;
  std::vector<std::string> question_ids;
  std::vector<double> means;
  std::optional<ResponseMatrix> matrix;   // enables alpha
  std::vector<ScoredChoice> choices;      // enables distractor/condition sections
  std::vector<Question> questions;        // required for the distractor section
};

inline ReportCohortInput report_input_from_matrix(std::string name, ResponseMatrix matrix) {
  ReportCohortInput input;
  input.name = std::move(name);
  input.question_ids = matrix.questions();
  input.means = item_means(matrix);
  input.matrix = std::move(matrix);
  return input;
}

inline ReportCohortInput report_input_from_means(std::string name, ItemMeans means) {
  ReportCohortInput input;
  input.name = std::move(name);
  input.question_ids = std::move(means.question_ids);
  input.means = std::move(means.means);
  return input;
}

struct ReportItemRow {
  std::string question_id;
  double mean = 0.0;
  ItemClass item_class = ItemClass::Neither;
};

struct ReportDistractorRow {
  std::string question_id;
  std::vector<char> flagged;
  std::vector<double> option_frequency;
};

struct ReportConditionRow {
  std::string condition;
  std::size_t n = 0;
  double pct_correct = 0.0;
  std::optional<double> pct_confused_among_wrong;
};

struct ReportCohortSection {
  std::string name;
  std::size_t n_students = 0;  // 0 for means-only cohorts
  std::optional<double> alpha;
  std::size_t alpha_complete_cases = 0;
  std::vector<ReportItemRow> items;
  std::vector<ReportDistractorRow> hard_distractors;
  std::vector<ReportConditionRow> condition_rows;
  std::size_t n_failed = 0;
};

struct ReportPairRow {
  std::string name_a;
  std::string name_b;
  double r = 0.0;
  std::size_t n_common = 0;
  std::size_t easy_overlap = 0;
  std::size_t hard_overlap = 0;
};

struct Report {
  std::vector<ReportCohortSection> cohorts;
  std::vector<ReportPairRow> pairs;  // empty when fewer than two cohorts
};

inline Report build_report(const std::vector<ReportCohortInput>& inputs,
                           double easy_threshold = 0.8, double hard_threshold = 0.4) {
  if (inputs.empty()) throw ValidationError("report needs at least one cohort");

  Report report;
  for (const auto& input : inputs) {
    if (input.question_ids.size() != input.means.size())
      throw ValidationError("cohort '" + input.name +
                            "': question list and mean list differ in length");
    ReportCohortSection section;
    section.name = input.name;

    const auto classes = classify_items(input.means, easy_threshold, hard_threshold);
    for (std::size_t i = 0; i < input.means.size(); ++i)
      section.items.push_back(
          {input.question_ids[i], detail::round4(input.means[i]), classes[i]});

    if (input.matrix.has_value()) {
      section.n_students = input.matrix->n_students();
      ResponseMatrix complete = input.matrix->complete_cases();
      section.alpha_complete_cases = complete.n_students();
      try {
        section.alpha = detail::round4(cronbach_alpha(complete));
      } catch (const ValidationError&) {
        section.alpha = std::nullopt;  // degenerate matrix; the section says so
      }
    }

    if (!input.choices.empty()) {
      for (const auto& c : input.choices)
        if (c.chosen_index < 0) ++section.n_failed;

      if (!input.questions.empty()) {
        DistractorReport distractors =
            distractor_analysis(input.choices, input.questions);
        for (std::size_t i = 0; i < section.items.size(); ++i) {
          if (section.items[i].item_class != ItemClass::Hard) continue;
          const std::string& qid = section.items[i].question_id;
          auto flagged = distractors.flagged.find(qid);
          auto freq = distractors.option_frequency.find(qid);
          if (flagged == distractors.flagged.end()) continue;
          ReportDistractorRow row;
          row.question_id = qid;
          row.flagged = flagged->second;
          for (double f : freq->second) row.option_frequency.push_back(detail::round4(f));
          section.hard_distractors.push_back(std::move(row));
        }
      }

      for (const auto& [key, cell] : condition_accuracy_table(input.choices)) {
        ReportConditionRow row;
        row.condition = condition_name(key);
        row.n = cell.n;
        row.pct_correct = detail::round4(cell.pct_correct());
        if (auto pct = cell.pct_confused_among_wrong(); pct.has_value())
          row.pct_confused_among_wrong = detail::round4(*pct);
        section.condition_rows.push_back(std::move(row));
      }
    }

    report.cohorts.push_back(std::move(section));
  }

  // Pairwise comparisons over the questions both cohorts answered, in the
  // first cohort's display order.
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    for (std::size_t b = a + 1; b < inputs.size(); ++b) {
      std::vector<double> means_a, means_b;
      for (std::size_t i = 0; i < inputs[a].question_ids.size(); ++i) {
        for (std::size_t j = 0; j < inputs[b].question_ids.size(); ++j) {
          if (inputs[b].question_ids[j] == inputs[a].question_ids[i]) {
            means_a.push_back(inputs[a].means[i]);
            means_b.push_back(inputs[b].means[j]);
            break;
          }
        }
      }
      if (means_a.size() < 2)
        throw ValidationError("cohorts '" + inputs[a].name + "' and '" + inputs[b].name +
                              "' share fewer than two questions");
      ReportPairRow pair;
      pair.name_a = inputs[a].name;
      pair.name_b = inputs[b].name;
      pair.n_common = means_a.size();
      pair.r = detail::round4(pearson_r(means_a, means_b));
      const auto classes_a = classify_items(means_a, easy_threshold, hard_threshold);
      const auto classes_b = classify_items(means_b, easy_threshold, hard_threshold);
      for (std::size_t i = 0; i < classes_a.size(); ++i) {
        if (classes_a[i] == ItemClass::Easy && classes_b[i] == ItemClass::Easy)
          ++pair.easy_overlap;
        if (classes_a[i] == ItemClass::Hard && classes_b[i] == ItemClass::Hard)
          ++pair.hard_overlap;
      }
      report.pairs.push_back(std::move(pair));
    }
  }
  return report;
}

inline nlohmann::json report_to_json(const Report& report) {
  nlohmann::json cohorts = nlohmann::json::array();
  for (const auto& section : report.cohorts) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : section.items)
      items.push_back({{"question", item.question_id},
                       {"mean", item.mean},
                       {"class", to_string(item.item_class)}});
    nlohmann::json j = {{"name", section.name}, {"items", items}};
    if (section.n_students > 0) j["n_students"] = section.n_students;
    if (section.alpha.has_value()) {
      j["alpha"] = *section.alpha;
      j["alpha_complete_cases"] = section.alpha_complete_cases;
    }
    if (!section.hard_distractors.empty()) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : section.hard_distractors) {
        nlohmann::json flagged = nlohmann::json::array();
        for (char letter : row.flagged) flagged.push_back(std::string(1, letter));
        rows.push_back({{"question", row.question_id},
                        {"flagged", flagged},
                        {"option_frequency", row.option_frequency}});
      }
      j["hard_question_distractors"] = rows;
    }
    if (!section.condition_rows.empty()) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& row : section.condition_rows) {
        nlohmann::json cell = {{"condition", row.condition},
                               {"n", row.n},
                               {"pct_correct", row.pct_correct}};
        if (row.pct_confused_among_wrong.has_value())
          cell["pct_confused_among_wrong"] = *row.pct_confused_among_wrong;
        rows.push_back(std::move(cell));
      }
      j["condition_accuracy"] = rows;
    }
    if (section.n_failed > 0) j["n_failed"] = section.n_failed;
    cohorts.push_back(std::move(j));
  }

  nlohmann::json doc = {{"cohorts", cohorts}};
  if (!report.pairs.empty()) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pair : report.pairs)
      pairs.push_back({{"a", pair.name_a},
                       {"b", pair.name_b},
                       {"r", pair.r},
                       {"n_common", pair.n_common},
                       {"easy_overlap", pair.easy_overlap},
                       {"hard_overlap", pair.hard_overlap}});
    doc["pairs"] = pairs;
  }
  return doc;
}

inline std::string report_to_text(const Report& report) {
  std::ostringstream out;
  out << "ITEM ANALYSIS\n";
  for (const auto& section : report.cohorts) {
    out << "\ncohort " << section.name;
    if (section.n_students > 0) out << "  (" << section.n_students << " students)";
    out << "\n";
    if (section.alpha.has_value())
      out << "alpha " << detail::fixed4(*section.alpha) << "  ("
          << section.alpha_complete_cases << " complete cases)\n";
    if (section.n_failed > 0) out << "failed responses " << section.n_failed << "\n";

    out << "question  mean    class\n";
    for (const auto& item : section.items) {
      std::string marker;
      if (item.item_class == ItemClass::Easy) marker = "easy(+)";
      if (item.item_class == ItemClass::Hard) marker = "hard(-)";
      out << item.question_id;
      for (std::size_t pad = item.question_id.size(); pad < 10; ++pad) out << ' ';
      out << detail::fixed4(item.mean);
      if (!marker.empty()) out << "  " << marker;
      out << "\n";
    }

    if (!section.hard_distractors.empty()) {
      out << "flagged distractors on hard questions (wrong options over 25% of answers):\n";
      for (const auto& row : section.hard_distractors) {
        out << row.question_id << ":";
        if (row.flagged.empty()) {
          out << " none";
        } else {
          for (std::size_t i = 0; i < row.flagged.size(); ++i)
            out << (i == 0 ? " " : ", ") << row.flagged[i];
        }
        out << "  [";
        for (std::size_t i = 0; i < row.option_frequency.size(); ++i) {
          if (i > 0) out << " ";
          out << static_cast<char>('A' + static_cast<int>(i)) << "="
              << detail::fixed4(row.option_frequency[i]);
        }
        out << "]\n";
      }
    }

    if (!section.condition_rows.empty()) {
      out << "accuracy by condition:\n";
      for (const auto& row : section.condition_rows) {
        out << "  " << row.condition;
        for (std::size_t pad = row.condition.size(); pad < 40; ++pad) out << ' ';
        out << "n=" << row.n << "  correct%=" << detail::fixed4(row.pct_correct);
        if (row.pct_confused_among_wrong.has_value())
          out << "  confused-pick%=" << detail::fixed4(*row.pct_confused_among_wrong);
        out << "\n";
      }
    }
  }

  if (!report.pairs.empty()) {
    out << "\nCOHORT COMPARISON\n";
    for (const auto& pair : report.pairs)
      out << pair.name_a << " vs " << pair.name_b << ": r=" << detail::fixed4(pair.r)
          << "  common=" << pair.n_common << "  easy-overlap=" << pair.easy_overlap
          << "  hard-overlap=" << pair.hard_overlap << "\n";
  }
  return out.str();
}

}  // namespace quizsim
