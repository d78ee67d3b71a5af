#pragma once

// File formats for the input artifacts: question bank (KC universe +
// questions + optional exemplars), cohort table, profile lists, calibration
// tables, crossover designs, version aggregates, and per-student quiz
// responses. Everything is JSON; loads validate as they parse and name the
// offending item, saves round-trip losslessly.

#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "quizsim/calibration.hpp"
#include "quizsim/cohort.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/experiment.hpp"
#include "quizsim/knowledge.hpp"
#include "quizsim/prompt.hpp"

namespace quizsim {

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) throw IoError("read failed on '" + path + "'");
  return out.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out.good()) throw IoError("write failed on '" + path + "'");
}

// Parses JSON; the error message carries nlohmann's line/column context.
inline nlohmann::json parse_json(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(origin + ": " + e.what());
  }
}

// Typed field access that names the owner on failure.
template <typename T>
T field(const nlohmann::json& obj, const std::string& key, const std::string& owner) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(owner + " lacks required field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(owner + " field '" + key + "' has the wrong type");
  }
}

template <typename T>
T field_or(const nlohmann::json& obj, const std::string& key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    return fallback;
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Question bank

struct QuestionBankFile {
  KcUniverse universe;
  std::vector<Question> questions;
  ExemplarBank exemplars;  // empty maps when the file has none

  bool has_exemplars() const {
    return !exemplars.mastery.empty() || !exemplars.confusion.empty() ||
           !exemplars.focused_extras.empty();
  }

  const Question& question_by_id(const std::string& id) const {
    for (const auto& q : questions)
      if (q.id == id) return q;
    throw ValidationError("bank has no question '" + id + "'");
  }
};

namespace detail {

inline nlohmann::json question_to_json(const Question& q) {
  nlohmann::json options = nlohmann::json::array();
  for (const auto& opt : q.options) options.push_back({{"text", opt.text}, {"kc", opt.kc}});
  return {{"id", q.id}, {"stem", q.stem}, {"options", options},
          {"correct_index", q.correct_index}};
}

inline Question question_from_json(const nlohmann::json& j, const std::string& owner) {
  Question q;
  q.id = field<std::string>(j, "id", owner);
  const std::string self = owner + " question '" + q.id + "'";
  q.stem = field<std::string>(j, "stem", self);
  q.correct_index = field<int>(j, "correct_index", self);
  auto options = field<nlohmann::json>(j, "options", self);
  if (!options.is_array()) throw ParseError(self + " field 'options' must be an array");
  for (const auto& o : options) {
    QuestionOption opt;
    opt.text = field<std::string>(o, "text", self + " option");
    opt.kc = field<std::string>(o, "kc", self + " option");
    q.options.push_back(std::move(opt));
  }
  return q;
}

inline nlohmann::json exemplar_to_json(const Exemplar& ex) {
  return {{"question", question_to_json(ex.question)}, {"chosen_index", ex.chosen_index}};
}

inline Exemplar exemplar_from_json(const nlohmann::json& j, const std::string& owner) {
  Exemplar ex;
  ex.question = question_from_json(field<nlohmann::json>(j, "question", owner), owner);
  ex.chosen_index = field<int>(j, "chosen_index", owner);
  return ex;
}

}  // namespace detail

inline nlohmann::json question_bank_to_json(const QuestionBankFile& bank) {
  nlohmann::json kcs = nlohmann::json::array();
  for (const auto& kc : bank.universe.items())
    kcs.push_back({{"id", kc.id}, {"label", kc.label}});

  nlohmann::json questions = nlohmann::json::array();
  for (const auto& q : bank.questions) questions.push_back(detail::question_to_json(q));

  nlohmann::json doc = {{"kcs", kcs}, {"questions", questions}};

  if (bank.has_exemplars()) {
    nlohmann::json mastery = nlohmann::json::array();
    for (const auto& [kc, ex] : bank.exemplars.mastery) {
      nlohmann::json entry = detail::exemplar_to_json(ex);
      entry["kc"] = kc;
      mastery.push_back(std::move(entry));
    }
    auto pair_entries = [](const std::map<PairKey, std::array<Exemplar, 2>>& table) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& [key, examples] : table) {
        nlohmann::json entry = {{"pair", {key.first, key.second}},
                                {"examples",
                                 {detail::exemplar_to_json(examples[0]),
                                  detail::exemplar_to_json(examples[1])}}};
        out.push_back(std::move(entry));
      }
      return out;
    };
    doc["exemplars"] = {{"mastery", mastery},
                        {"confusion", pair_entries(bank.exemplars.confusion)},
                        {"focused_extras", pair_entries(bank.exemplars.focused_extras)}};
  }
  return doc;
}

inline QuestionBankFile question_bank_from_json(const nlohmann::json& doc) {
  QuestionBankFile bank;

  std::vector<KnowledgeComponent> kcs;
  for (const auto& j : detail::field<nlohmann::json>(doc, "kcs", "bank")) {
    KnowledgeComponent kc;
    kc.id = detail::field<std::string>(j, "id", "bank KC");
    kc.label = detail::field<std::string>(j, "label", "bank KC '" + kc.id + "'");
    kcs.push_back(std::move(kc));
  }
  bank.universe = KcUniverse(std::move(kcs));

  for (const auto& j : detail::field<nlohmann::json>(doc, "questions", "bank")) {
    Question q = detail::question_from_json(j, "bank");
    for (const auto& existing : bank.questions)
      if (existing.id == q.id)
        throw ValidationError("duplicate question id '" + q.id + "'");
    validate_question(q, bank.universe);
    bank.questions.push_back(std::move(q));
  }

  if (doc.contains("exemplars")) {
    const nlohmann::json& ex = doc.at("exemplars");
    for (const auto& j : detail::field_or<nlohmann::json>(ex, "mastery",
                                                          nlohmann::json::array())) {
      const std::string kc = detail::field<std::string>(j, "kc", "mastery exemplar");
      bank.exemplars.mastery[kc] =
          detail::exemplar_from_json(j, "mastery exemplar for '" + kc + "'");
    }
    auto read_pairs = [&ex](const std::string& section) {
      std::map<PairKey, std::array<Exemplar, 2>> table;
      for (const auto& j :
           detail::field_or<nlohmann::json>(ex, section, nlohmann::json::array())) {
        auto pair = detail::field<std::vector<std::string>>(j, "pair", section + " entry");
        if (pair.size() != 2)
          throw ParseError(section + " entry 'pair' must list exactly two KC ids");
        const PairKey key = pair_key(pair[0], pair[1]);
        const std::string owner = section + " for " + pair_label(key);
        auto examples = detail::field<nlohmann::json>(j, "examples", owner);
        if (!examples.is_array() || examples.size() != 2)
          throw ParseError(owner + " must carry exactly two examples");
        table[key] = {detail::exemplar_from_json(examples[0], owner),
                      detail::exemplar_from_json(examples[1], owner)};
      }
      return table;
    };
    bank.exemplars.confusion = read_pairs("confusion");
    bank.exemplars.focused_extras = read_pairs("focused_extras");
    validate_bank(bank.exemplars, bank.universe);
  }
  return bank;
}

inline QuestionBankFile load_question_bank(const std::string& path) {
  return question_bank_from_json(
      detail::parse_json(detail::read_text_file(path), path));
}

inline void save_question_bank(const std::string& path, const QuestionBankFile& bank) {
  detail::write_text_file(path, question_bank_to_json(bank).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Cohort table (rows + candidate confusion pairs)

struct CohortTableFile {
  CohortSpec spec;
  std::vector<ConfusionPair> candidate_pairs;
};

inline nlohmann::json cohort_table_to_json(const CohortTableFile& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.spec.rows)
    rows.push_back({{"n_mastered", row.n_mastered},
                    {"n_confused_kcs", row.n_confused_kcs},
                    {"n_unknown", row.n_unknown},
                    {"focused", row.focused},
                    {"n_students", row.n_students}});
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : table.candidate_pairs) pairs.push_back({p.kc_a, p.kc_b});
  return {{"rows", rows}, {"candidate_pairs", pairs}};
}

inline CohortTableFile cohort_table_from_json(const nlohmann::json& doc) {
  CohortTableFile table;
  for (const auto& j : detail::field<nlohmann::json>(doc, "rows", "cohort table")) {
    CohortRow row;
    row.n_mastered = detail::field<int>(j, "n_mastered", "cohort row");
    row.n_confused_kcs = detail::field<int>(j, "n_confused_kcs", "cohort row");
    row.n_unknown = detail::field<int>(j, "n_unknown", "cohort row");
    row.focused = detail::field_or<bool>(j, "focused", false);
    row.n_students = detail::field<int>(j, "n_students", "cohort row");
    table.spec.rows.push_back(row);
  }
  for (const auto& j :
       detail::field<nlohmann::json>(doc, "candidate_pairs", "cohort table")) {
    auto pair = j.get<std::vector<std::string>>();
    if (pair.size() != 2)
      throw ParseError("cohort table candidate pair must list exactly two KC ids");
    table.candidate_pairs.push_back({pair[0], pair[1], false});
  }
  return table;
}

inline CohortTableFile load_cohort_table(const std::string& path) {
  return cohort_table_from_json(detail::parse_json(detail::read_text_file(path), path));
}

inline void save_cohort_table(const std::string& path, const CohortTableFile& table) {
  detail::write_text_file(path, cohort_table_to_json(table).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Student profiles

inline nlohmann::json profiles_to_json(const std::vector<StudentProfile>& profiles) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : profiles) {
    nlohmann::json confusions = nlohmann::json::array();
    for (const auto& c : p.confusions)
      confusions.push_back({{"kc_a", c.kc_a}, {"kc_b", c.kc_b}, {"focused", c.focused}});
    out.push_back({{"id", p.id}, {"mastered", p.mastered}, {"confusions", confusions}});
  }
  return {{"profiles", out}};
}

inline std::vector<StudentProfile> profiles_from_json(const nlohmann::json& doc) {
  std::vector<StudentProfile> profiles;
  for (const auto& j : detail::field<nlohmann::json>(doc, "profiles", "profile file")) {
    StudentProfile p;
    p.id = detail::field<std::string>(j, "id", "profile");
    const std::string self = "profile '" + p.id + "'";
    p.mastered = detail::field<std::vector<std::string>>(j, "mastered", self);
    for (const auto& c : detail::field_or<nlohmann::json>(j, "confusions",
                                                          nlohmann::json::array())) {
      ConfusionPair pair;
      pair.kc_a = detail::field<std::string>(c, "kc_a", self + " confusion");
      pair.kc_b = detail::field<std::string>(c, "kc_b", self + " confusion");
      pair.focused = detail::field_or<bool>(c, "focused", false);
      p.confusions.push_back(std::move(pair));
    }
    for (const auto& existing : profiles)
      if (existing.id == p.id) throw ValidationError("duplicate profile id '" + p.id + "'");
    profiles.push_back(std::move(p));
  }
  return profiles;
}

// Loads and validates against the universe; issues aggregate into one error.
inline std::vector<StudentProfile> load_profiles(const std::string& path,
                                                 const KcUniverse& universe) {
  auto profiles = profiles_from_json(detail::parse_json(detail::read_text_file(path), path));
  std::vector<std::string> issues;
  for (const auto& p : profiles) {
    ValidationResult check = validate_profile(p, universe);
    for (const auto& issue : check.issues) issues.push_back(issue);
  }
  if (!issues.empty()) {
    std::string msg = "profile file '" + path + "' is invalid:";
    for (const auto& issue : issues) msg += "\n  - " + issue;
    throw ValidationError(msg);
  }
  return profiles;
}

inline void save_profiles(const std::string& path,
                          const std::vector<StudentProfile>& profiles) {
  detail::write_text_file(path, profiles_to_json(profiles).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Calibration table

inline const char* answer_status_name(AnswerStatus s) { return to_string(s); }

inline AnswerStatus answer_status_from(const std::string& name) {
  if (name == "mastered") return AnswerStatus::Mastered;
  if (name == "confused") return AnswerStatus::Confused;
  if (name == "unknown") return AnswerStatus::Unknown;
  throw ParseError("unknown answer status '" + name + "'");
}

inline nlohmann::json calibration_to_json(const CalibrationTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, cell] : table.cells())
    cells.push_back({{"status", answer_status_name(key.status)},
                     {"confused_distractor", key.confusion_in_distractors},
                     {"focused", key.focused},
                     {"p_correct", cell.p_correct},
                     {"p_pick_confused_when_wrong", cell.p_pick_confused_when_wrong}});
  return {{"cells", cells}};
}

inline CalibrationTable calibration_from_json(const nlohmann::json& doc) {
  CalibrationTable table;
  for (const auto& j : detail::field<nlohmann::json>(doc, "cells", "calibration file")) {
    ConditionKey key;
    key.status = answer_status_from(
        detail::field<std::string>(j, "status", "calibration cell"));
    key.confusion_in_distractors =
        detail::field<bool>(j, "confused_distractor", "calibration cell");
    key.focused = detail::field_or<bool>(j, "focused", false);
    CalibrationCell cell;
    cell.p_correct = detail::field<double>(j, "p_correct", "calibration cell");
    cell.p_pick_confused_when_wrong =
        detail::field_or<double>(j, "p_pick_confused_when_wrong", 0.0);
    table.set(key, cell);
  }
  return table;
}

inline CalibrationTable load_calibration(const std::string& path) {
  return calibration_from_json(detail::parse_json(detail::read_text_file(path), path));
}

inline void save_calibration(const std::string& path, const CalibrationTable& table) {
  detail::write_text_file(path, calibration_to_json(table).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Crossover design, aggregates, per-student quiz responses

inline QuestionForm question_form_from(const std::string& name) {
  if (name == "original") return QuestionForm::Original;
  if (name == "revised") return QuestionForm::Revised;
  throw ParseError("unknown question form '" + name + "'");
}

inline nlohmann::json design_to_json(const CrossoverDesign& d) {
  auto forms = [](const std::map<std::string, QuestionForm>& table) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [qid, form] : table) out[qid] = to_string(form);
    return out;
  };
  return {{"version_a", d.version_a}, {"version_b", d.version_b},
          {"shared", d.shared},       {"revised", d.revised},
          {"form_in_a", forms(d.form_in_a)}, {"form_in_b", forms(d.form_in_b)}};
}

inline CrossoverDesign design_from_json(const nlohmann::json& doc) {
  CrossoverDesign d;
  d.version_a = detail::field<std::vector<std::string>>(doc, "version_a", "design");
  d.version_b = detail::field<std::vector<std::string>>(doc, "version_b", "design");
  d.shared = detail::field<std::vector<std::string>>(doc, "shared", "design");
  d.revised = detail::field<std::vector<std::string>>(doc, "revised", "design");
  auto read_forms = [&doc](const std::string& key) {
    std::map<std::string, QuestionForm> table;
    const nlohmann::json forms =
        detail::field_or<nlohmann::json>(doc, key, nlohmann::json::object());
    for (const auto& [qid, name] : forms.items())
      table[qid] = question_form_from(name.get<std::string>());
    return table;
  };
  d.form_in_a = read_forms("form_in_a");
  d.form_in_b = read_forms("form_in_b");
  return d;
}

inline CrossoverDesign load_design(const std::string& path) {
  return design_from_json(detail::parse_json(detail::read_text_file(path), path));
}

inline void save_design(const std::string& path, const CrossoverDesign& d) {
  detail::write_text_file(path, design_to_json(d).dump(2) + "\n");
}

inline nlohmann::json aggregates_to_json(const VersionAggregates& agg) {
  return {{"n_a", agg.n_a}, {"n_b", agg.n_b}, {"mean_a", agg.mean_a},
          {"mean_b", agg.mean_b}};
}

inline VersionAggregates aggregates_from_json(const nlohmann::json& doc) {
  VersionAggregates agg;
  agg.n_a = detail::field<std::size_t>(doc, "n_a", "aggregates");
  agg.n_b = detail::field<std::size_t>(doc, "n_b", "aggregates");
  agg.mean_a = detail::field<std::map<std::string, double>>(doc, "mean_a", "aggregates");
  agg.mean_b = detail::field<std::map<std::string, double>>(doc, "mean_b", "aggregates");
  return agg;
}

inline VersionAggregates load_aggregates(const std::string& path) {
  return aggregates_from_json(detail::parse_json(detail::read_text_file(path), path));
}

inline void save_aggregates(const std::string& path, const VersionAggregates& agg) {
  detail::write_text_file(path, aggregates_to_json(agg).dump(2) + "\n");
}

inline nlohmann::json quiz_responses_to_json(const QuizResponses& responses) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : responses)
    out.push_back({{"id", r.student_id}, {"version", r.version}, {"scores", r.scores}});
  return {{"students", out}};
}

inline QuizResponses quiz_responses_from_json(const nlohmann::json& doc) {
  QuizResponses responses;
  for (const auto& j : detail::field<nlohmann::json>(doc, "students", "quiz responses")) {
    StudentQuizRecord r;
    r.student_id = detail::field<std::string>(j, "id", "quiz response");
    r.version = detail::field<std::string>(j, "version",
                                           "quiz response '" + r.student_id + "'");
    r.scores = detail::field<std::map<std::string, int>>(
        j, "scores", "quiz response '" + r.student_id + "'");
    responses.push_back(std::move(r));
  }
  return responses;
}

inline QuizResponses load_quiz_responses(const std::string& path) {
  return quiz_responses_from_json(detail::parse_json(detail::read_text_file(path), path));
}

inline void save_quiz_responses(const std::string& path, const QuizResponses& responses) {
  detail::write_text_file(path, quiz_responses_to_json(responses).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Item-means table (CSV: question_id,mean) for means-only cohorts

struct ItemMeans {
  std::vector<std::string> question_ids;
  std::vector<double> means;
};

inline ItemMeans load_item_means_csv(const std::string& path) {
  const std::string text = detail::read_text_file(path);
  std::istringstream in(text);
  std::string line;
  ItemMeans out;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'question_id,mean'");
    const std::string qid = line.substr(0, comma);
    const std::string value = line.substr(comma + 1);
    if (first) {
      first = false;
      if (qid == "question_id") continue;  // header row is optional
    }
    try {
      std::size_t used = 0;
      double mean = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      out.question_ids.push_back(qid);
      out.means.push_back(mean);
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": bad mean value '" + value +
                       "'");
    }
  }
  if (out.question_ids.empty()) throw ValidationError(path + ": no item means found");
  return out;
}

inline void save_item_means_csv(const std::string& path, const ItemMeans& means) {
  std::ostringstream out;
  out << "question_id,mean\n";
  out.precision(17);
  for (std::size_t i = 0; i < means.question_ids.size(); ++i)
    out << means.question_ids[i] << "," << means.means[i] << "\n";
  detail::write_text_file(path, out.str());
}

}  // namespace quizsim
