#pragma once

// Run artifacts: the response log (one JSON record per line, preceded by a
// manifest line), the score matrix as a comma-separated table, and the run
// manifest itself. The manifest stores the backend configuration with the
// API key redacted — keys live in the environment and never reach disk.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "quizsim/backends.hpp"
#include "quizsim/bank_io.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/psychometrics.hpp"
#include "quizsim/response.hpp"
#include "quizsim/rng.hpp"

namespace quizsim {

namespace detail {

inline std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

}  // namespace detail

// Stable content fingerprints: hash of the canonical JSON serialization.
inline std::string question_bank_hash(const QuestionBankFile& bank) {
  return detail::hex64(fnv1a64(question_bank_to_json(bank).dump()));
}

inline std::string profiles_hash(const std::vector<StudentProfile>& profiles) {
  return detail::hex64(fnv1a64(profiles_to_json(profiles).dump()));
}

struct RunManifest {
  std::string run_id;
  std::string timestamp;  // ISO 8601 UTC
  std::string backend;    // "sim", "random", or "llm:<model>"
  std::string endpoint;   // llm backend only; "" otherwise
  std::string model;      // llm backend only; "" otherwise
  std::string api_key_env;  // name of the env var consulted; never the key
  int parallel = 1;
  std::uint64_t seed = 0;
  double p_correct = 0.0;  // random backend only
  std::string profiles_hash;
  std::string bank_hash;
  int n_students = 0;
  int n_questions = 0;
  int n_responses = 0;
  int n_failed = 0;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  return {{"type", "manifest"},
          {"run_id", m.run_id},
          {"timestamp", m.timestamp},
          {"backend", m.backend},
          {"endpoint", m.endpoint},
          {"model", m.model},
          {"api_key_env", m.api_key_env},
          {"parallel", m.parallel},
          {"seed", m.seed},
          {"p_correct", m.p_correct},
          {"profiles_hash", m.profiles_hash},
          {"bank_hash", m.bank_hash},
          {"n_students", m.n_students},
          {"n_questions", m.n_questions},
          {"n_responses", m.n_responses},
          {"n_failed", m.n_failed}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = detail::field<std::string>(j, "run_id", "manifest");
  m.timestamp = detail::field<std::string>(j, "timestamp", "manifest");
  m.backend = detail::field<std::string>(j, "backend", "manifest");
  m.endpoint = detail::field_or<std::string>(j, "endpoint", "");
  m.model = detail::field_or<std::string>(j, "model", "");
  m.api_key_env = detail::field_or<std::string>(j, "api_key_env", "");
  m.parallel = detail::field_or<int>(j, "parallel", 1);
  m.seed = detail::field<std::uint64_t>(j, "seed", "manifest");
  m.p_correct = detail::field_or<double>(j, "p_correct", 0.0);
  m.profiles_hash = detail::field_or<std::string>(j, "profiles_hash", "");
  m.bank_hash = detail::field_or<std::string>(j, "bank_hash", "");
  m.n_students = detail::field_or<int>(j, "n_students", 0);
  m.n_questions = detail::field_or<int>(j, "n_questions", 0);
  m.n_responses = detail::field_or<int>(j, "n_responses", 0);
  m.n_failed = detail::field_or<int>(j, "n_failed", 0);
  return m;
}

inline nlohmann::json condition_to_json(const ConditionTag& tag) {
  return {{"status", to_string(tag.answer_status)},
          {"confused_distractor", tag.confusion_in_distractors},
          {"focused", tag.focused}};
}

inline ConditionTag condition_from_json(const nlohmann::json& j) {
  ConditionTag tag;
  tag.answer_status =
      answer_status_from(detail::field<std::string>(j, "status", "condition"));
  tag.confusion_in_distractors =
      detail::field<bool>(j, "confused_distractor", "condition");
  tag.focused = detail::field_or<bool>(j, "focused", false);
  return tag;
}

inline nlohmann::json response_to_json(const Response& r, const std::string& run_id) {
  nlohmann::json j = {{"type", "response"},
                      {"run", run_id},
                      {"student", r.student_id},
                      {"question", r.question_id},
                      {"chosen_index", r.chosen_index},
                      {"correct", r.correct},
                      {"backend", r.backend_id},
                      {"condition", condition_to_json(r.condition)},
                      {"picked_confused", r.picked_confused},
                      {"failed", r.failed}};
  if (!r.rationale.empty()) j["rationale"] = r.rationale;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.raw_reply.empty()) j["raw_reply"] = r.raw_reply;
  return j;
}

inline Response response_from_json(const nlohmann::json& j) {
  Response r;
  r.student_id = detail::field<std::string>(j, "student", "response");
  r.question_id = detail::field<std::string>(j, "question", "response");
  r.chosen_index = detail::field<int>(j, "chosen_index", "response");
  r.correct = detail::field<bool>(j, "correct", "response");
  r.rationale = detail::field_or<std::string>(j, "rationale", "");
  r.backend_id = detail::field<std::string>(j, "backend", "response");
  r.condition = condition_from_json(detail::field<nlohmann::json>(j, "condition", "response"));
  r.picked_confused = detail::field<bool>(j, "picked_confused", "response");
  r.failed = detail::field<bool>(j, "failed", "response");
  r.error = detail::field_or<std::string>(j, "error", "");
  r.raw_reply = detail::field_or<std::string>(j, "raw_reply", "");
  return r;
}

struct ResponseLog {
  RunManifest manifest;
  std::vector<Response> responses;
};

// One line per record: the manifest first, then every response tagged with
// the manifest's run id.
inline std::string response_log_to_text(const ResponseLog& log) {
  std::ostringstream out;
  out << manifest_to_json(log.manifest).dump() << "\n";
  for (const auto& r : log.responses)
    out << response_to_json(r, log.manifest.run_id).dump() << "\n";
  return out.str();
}

inline ResponseLog response_log_from_text(const std::string& text,
                                          const std::string& origin) {
  ResponseLog log;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_manifest = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const std::string where = origin + ":" + std::to_string(line_no);
    nlohmann::json j = detail::parse_json(line, where);
    const std::string type = detail::field_or<std::string>(j, "type", "");
    if (type == "manifest") {
      if (have_manifest) throw ParseError(where + ": second manifest line");
      log.manifest = manifest_from_json(j);
      have_manifest = true;
    } else if (type == "response") {
      if (!have_manifest)
        throw ParseError(where + ": response before the manifest line");
      if (detail::field_or<std::string>(j, "run", "") != log.manifest.run_id)
        throw ValidationError(where + ": response references a different run id");
      log.responses.push_back(response_from_json(j));
    } else {
      throw ParseError(where + ": unknown record type '" + type + "'");
    }
  }
  if (!have_manifest) throw ParseError(origin + ": no manifest line");
  return log;
}

inline void save_response_log(const std::string& path, const ResponseLog& log) {
  detail::write_text_file(path, response_log_to_text(log));
}

inline ResponseLog load_response_log(const std::string& path) {
  return response_log_from_text(detail::read_text_file(path), path);
}

// ---------------------------------------------------------------------------
// Score matrix

// Orders responses into a students × questions matrix. Row/column order
// follows the id lists; failed responses become missing cells.
inline ResponseMatrix matrix_from_responses(const std::vector<Response>& responses,
                                            std::vector<std::string> student_ids,
                                            std::vector<std::string> question_ids) {
  ResponseMatrix matrix(std::move(student_ids), std::move(question_ids));
  auto index_in = [](const std::vector<std::string>& ids, const std::string& id) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return static_cast<int>(i);
    return -1;
  };
  for (const auto& r : responses) {
    int row = index_in(matrix.students(), r.student_id);
    int col = index_in(matrix.questions(), r.question_id);
    if (row < 0)
      throw ValidationError("response from unknown student '" + r.student_id + "'");
    if (col < 0)
      throw ValidationError("response to unknown question '" + r.question_id + "'");
    if (r.failed)
      matrix.set_missing(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    else
      matrix.set(static_cast<std::size_t>(row), static_cast<std::size_t>(col), r.correct);
  }
  return matrix;
}

// CSV with a header row; missing cells are empty fields.
inline std::string score_matrix_to_csv(const ResponseMatrix& matrix) {
  std::ostringstream out;
  out << "student";
  for (const auto& qid : matrix.questions()) out << "," << qid;
  out << "\n";
  for (std::size_t i = 0; i < matrix.n_students(); ++i) {
    out << matrix.students()[i];
    for (std::size_t j = 0; j < matrix.n_questions(); ++j) {
      out << ",";
      if (matrix.has(i, j)) out << matrix.score(i, j);
    }
    out << "\n";
  }
  return out.str();
}

inline ResponseMatrix score_matrix_from_csv(const std::string& text,
                                            const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(origin + ": empty score table");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = s.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(s.substr(start));
        break;
      }
      cells.push_back(s.substr(start, comma - start));
      start = comma + 1;
    }
    return cells;
  };

  auto header = split(line);
  if (header.size() < 2 || header[0] != "student")
    throw ParseError(origin + ": header must be 'student,<question ids...>'");
  std::vector<std::string> question_ids(header.begin() + 1, header.end());

  std::vector<std::string> student_ids;
  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw ParseError(origin + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    student_ids.push_back(cells[0]);
    rows.push_back(std::move(cells));
  }

  ResponseMatrix matrix(student_ids, question_ids);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < question_ids.size(); ++j) {
      const std::string& cell = rows[i][j + 1];
      if (cell.empty()) {
        matrix.set_missing(i, j);
      } else if (cell == "0" || cell == "1") {
        matrix.set(i, j, cell == "1");
      } else {
        throw ParseError(origin + ": row '" + student_ids[i] + "' has non-binary score '" +
                         cell + "'");
      }
    }
  }
  return matrix;
}

inline void save_score_matrix(const std::string& path, const ResponseMatrix& matrix) {
  detail::write_text_file(path, score_matrix_to_csv(matrix));
}

inline ResponseMatrix load_score_matrix(const std::string& path) {
  return score_matrix_from_csv(detail::read_text_file(path), path);
}

// Scored choices for distractor and condition analyses, reconstructed from
// a persisted log.
inline std::vector<ScoredChoice> scored_choices_from_responses(
    const std::vector<Response>& responses) {
  std::vector<ScoredChoice> choices;
  choices.reserve(responses.size());
  for (const auto& r : responses) {
    ScoredChoice c;
    c.student_id = r.student_id;
    c.question_id = r.question_id;
    c.chosen_index = r.failed ? -1 : r.chosen_index;
    c.correct = r.correct;
    c.condition = r.condition;
    c.picked_confused = r.picked_confused;
    choices.push_back(std::move(c));
  }
  return choices;
}

}  // namespace quizsim
