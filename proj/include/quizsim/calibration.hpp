#pragma once

// Calibration table for the probabilistic simulator: per answer condition, a
// probability of answering correctly and — for cells where a confused option
// is among the distractors — the probability that a wrong answer picks such
// an option (the denominator is wrong responses, not all responses). The
// defaults reproduce the published per-condition accuracy of the LLM cohort;
// the whole table is a config file so users can recalibrate.

#include <map>
#include <string>
#include <vector>

#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"

namespace quizsim {

struct CalibrationCell {
  double p_correct = 0.0;
  // Probability a wrong answer picks a confused option. Only consulted when
  // the condition has a confused option among the distractors.
  double p_pick_confused_when_wrong = 0.0;
};

inline std::string condition_name(const ConditionKey& key) {
  std::string name = to_string(key.status);
  name += key.confusion_in_distractors ? ",confused-distractor" : ",clean-distractors";
  if (key.focused) name += ",focused";
  return name;
}

class CalibrationTable {
public:
  // The eight conditions: three answer statuses × distractor flag, plus the
  // focused variants of the two Confused cells. Focused profiles reuse the
  // base cells for their Mastered/Unknown answers, so no focused variants
  // exist for those.
  static const std::vector<ConditionKey>& required_cells() {
    static const std::vector<ConditionKey> cells = {
        {AnswerStatus::Mastered, false, false}, {AnswerStatus::Mastered, true, false},
        {AnswerStatus::Confused, false, false}, {AnswerStatus::Confused, true, false},
        {AnswerStatus::Unknown, false, false},  {AnswerStatus::Unknown, true, false},
        {AnswerStatus::Confused, false, true},  {AnswerStatus::Confused, true, true},
    };
    return cells;
  }

  static CalibrationTable defaults() {
    CalibrationTable t;
    t.set({AnswerStatus::Mastered, false, false}, {0.852, 0.0});
    t.set({AnswerStatus::Mastered, true, false}, {0.724, 0.594});
    t.set({AnswerStatus::Confused, false, false}, {0.356, 0.0});
    t.set({AnswerStatus::Confused, true, false}, {0.110, 0.822});
    t.set({AnswerStatus::Unknown, false, false}, {0.521, 0.0});
    t.set({AnswerStatus::Unknown, true, false}, {0.345, 0.462});
    t.set({AnswerStatus::Confused, false, true}, {0.615, 0.0});
    t.set({AnswerStatus::Confused, true, true}, {0.409, 1.0});
    return t;
  }

  void set(const ConditionKey& key, const CalibrationCell& cell) {
    if (key.focused && key.status != AnswerStatus::Confused)
      throw ValidationError("calibration cell '" + condition_name(key) +
                            "': focused applies only to confused answers");
    for (double p : {cell.p_correct, cell.p_pick_confused_when_wrong})
      if (p < 0.0 || p > 1.0)
        throw ValidationError("calibration cell '" + condition_name(key) +
                              "' has a probability outside [0,1]");
    cells_[key] = cell;
  }

  const CalibrationCell& cell(const ConditionTag& tag) const {
    auto it = cells_.find(key_of(tag));
    if (it == cells_.end())
      throw ValidationError("calibration table lacks cell '" + condition_name(key_of(tag)) +
                            "'");
    return it->second;
  }

  bool has(const ConditionKey& key) const { return cells_.count(key) != 0; }

  // Throws unless every required condition is present.
  void validate_complete() const {
    for (const auto& key : required_cells())
      if (!cells_.count(key))
        throw ValidationError("calibration table lacks cell '" + condition_name(key) + "'");
  }

  const std::map<ConditionKey, CalibrationCell>& cells() const { return cells_; }

private:
  std::map<ConditionKey, CalibrationCell> cells_;
};

}  // namespace quizsim
