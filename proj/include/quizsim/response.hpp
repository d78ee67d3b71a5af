#pragma once

// Response record: one simulated student's answer to one question, with the
// condition annotation the analyses key on. Failed backend calls produce a
// failed record carrying the error instead of a fabricated answer.

#include <string>

#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"

namespace quizsim {

struct Response {
  std::string student_id;
  std::string question_id;
  int chosen_index = -1;  // -1 when failed
  bool correct = false;
  std::string rationale;
  std::string backend_id;
  ConditionTag condition;
  bool picked_confused = false;  // wrong answer on a confused option
  bool failed = false;
  std::string error;      // failure reason when failed
  std::string raw_reply;  // verbatim model output (LLM backend only)
};

// Builds a successful Response from a chosen option, deriving correctness,
// the condition tag, and whether a confused option was picked.
inline Response finalize_response(const StudentProfile& profile, const Question& question,
                                  int chosen_index, std::string rationale,
                                  std::string backend_id, std::string raw_reply = "") {
  if (chosen_index < 0 || chosen_index >= static_cast<int>(question.options.size()))
    throw ValidationError("chosen option " + std::to_string(chosen_index) +
                          " out of range for question '" + question.id + "'");
  Response r;
  r.student_id = profile.id;
  r.question_id = question.id;
  r.chosen_index = chosen_index;
  r.correct = chosen_index == question.correct_index;
  r.rationale = std::move(rationale);
  r.backend_id = std::move(backend_id);
  r.condition = classify_condition(profile, question);
  if (!r.correct) {
    for (int idx : confused_distractor_indices(profile, question))
      if (idx == chosen_index) r.picked_confused = true;
  }
  r.raw_reply = std::move(raw_reply);
  return r;
}

inline Response failed_response(const StudentProfile& profile, const Question& question,
                                std::string backend_id, std::string error,
                                std::string raw_reply = "") {
  Response r;
  r.student_id = profile.id;
  r.question_id = question.id;
  r.backend_id = std::move(backend_id);
  r.condition = classify_condition(profile, question);
  r.failed = true;
  r.error = std::move(error);
  r.raw_reply = std::move(raw_reply);
  return r;
}

}  // namespace quizsim
