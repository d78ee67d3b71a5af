#pragma once

// Knowledge model: knowledge components (KCs), confusion pairs, student
// profiles, and the condition classifier that tags every (profile, question)
// pair by the status of the correct answer and the presence of confused
// KCs among the distractors.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quizsim/errors.hpp"

namespace quizsim {

struct KnowledgeComponent {
  std::string id;     // short stable identifier, e.g. "H1"
  std::string label;  // human-readable name
};

// Ordered universe of KCs. Order is the declaration order of the bank and is
// used wherever a deterministic KC ordering is needed.
class KcUniverse {
public:
  KcUniverse() = default;
  explicit KcUniverse(std::vector<KnowledgeComponent> kcs) : kcs_(std::move(kcs)) {
    for (std::size_t i = 0; i < kcs_.size(); ++i) {
      if (kcs_[i].label.empty())
        throw ValidationError("KC '" + kcs_[i].id + "' has an empty label");
      for (std::size_t j = 0; j < i; ++j)
        if (kcs_[j].id == kcs_[i].id)
          throw ValidationError("duplicate KC id '" + kcs_[i].id + "'");
    }
  }

  const std::vector<KnowledgeComponent>& items() const { return kcs_; }
  std::size_t size() const { return kcs_.size(); }

  bool contains(const std::string& id) const { return index_of(id).has_value(); }

  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < kcs_.size(); ++i)
      if (kcs_[i].id == id) return i;
    return std::nullopt;
  }

  const std::string& label_of(const std::string& id) const {
    auto idx = index_of(id);
    if (!idx) throw ValidationError("unknown KC id '" + id + "'");
    return kcs_[*idx].label;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(kcs_.size());
    for (const auto& kc : kcs_) out.push_back(kc.id);
    return out;
  }

private:
  std::vector<KnowledgeComponent> kcs_;
};

// Unordered pair of confusable KCs; {a,b} == {b,a}.
struct ConfusionPair {
  std::string kc_a;
  std::string kc_b;
  bool focused = false;  // focused-confusion variant (easy items answered correctly)

  bool involves(const std::string& kc) const { return kc == kc_a || kc == kc_b; }

  const std::string& partner_of(const std::string& kc) const {
    if (kc == kc_a) return kc_b;
    if (kc == kc_b) return kc_a;
    throw ValidationError("KC '" + kc + "' is not in pair {" + kc_a + "," + kc_b + "}");
  }

  bool same_pair(const ConfusionPair& other) const {
    return (kc_a == other.kc_a && kc_b == other.kc_b) ||
           (kc_a == other.kc_b && kc_b == other.kc_a);
  }
};

struct StudentProfile {
  std::string id;
  std::vector<std::string> mastered;
  std::vector<ConfusionPair> confusions;

  std::vector<std::string> confused_kcs() const {
    std::vector<std::string> out;
    for (const auto& p : confusions) {
      out.push_back(p.kc_a);
      out.push_back(p.kc_b);
    }
    return out;
  }

  // Derived: universe minus mastered minus confusion members, in universe order.
  std::vector<std::string> unknown(const KcUniverse& universe) const {
    std::vector<std::string> out;
    for (const auto& kc : universe.items()) {
      if (std::find(mastered.begin(), mastered.end(), kc.id) != mastered.end()) continue;
      bool in_pair = false;
      for (const auto& p : confusions)
        if (p.involves(kc.id)) { in_pair = true; break; }
      if (!in_pair) out.push_back(kc.id);
    }
    return out;
  }

  bool has_mastered(const std::string& kc) const {
    return std::find(mastered.begin(), mastered.end(), kc) != mastered.end();
  }

  const ConfusionPair* pair_containing(const std::string& kc) const {
    for (const auto& p : confusions)
      if (p.involves(kc)) return &p;
    return nullptr;
  }
};

struct QuestionOption {
  std::string text;
  std::string kc;  // KC tag; required, distinct per question
};

struct Question {
  std::string id;
  std::string stem;
  std::vector<QuestionOption> options;
  int correct_index = 0;

  const std::string& correct_kc() const { return options.at(correct_index).kc; }
};

inline char option_letter(int index) { return static_cast<char>('A' + index); }

// Throws ValidationError describing the first problem found.
inline void validate_question(const Question& q, const KcUniverse& universe) {
  if (q.options.size() < 2)
    throw ValidationError("question '" + q.id + "' has fewer than 2 options");
  if (q.correct_index < 0 || q.correct_index >= static_cast<int>(q.options.size()))
    throw ValidationError("question '" + q.id + "' correct_index out of bounds");
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    const auto& opt = q.options[i];
    if (!universe.contains(opt.kc))
      throw ValidationError("question '" + q.id + "' option " +
                            std::string(1, option_letter(static_cast<int>(i))) +
                            " references unknown KC '" + opt.kc + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (q.options[j].kc == opt.kc)
        throw ValidationError("question '" + q.id + "' has duplicate option KC tag '" +
                              opt.kc + "'");
  }
}

struct ValidationResult {
  bool ok = true;
  std::vector<std::string> issues;

  void add(const std::string& issue) {
    ok = false;
    issues.push_back(issue);
  }
};

// Checks the profile partition against the universe: every referenced KC
// exists, no KC sits in two buckets or two pairs, and (when the caller has an
// explicitly declared unknown set, e.g. from a file) the declared set matches
// the derived one.
inline ValidationResult validate_profile(
    const StudentProfile& profile, const KcUniverse& universe,
    const std::optional<std::vector<std::string>>& declared_unknown = std::nullopt) {
  ValidationResult result;

  std::set<std::string> seen_mastered;
  for (const auto& kc : profile.mastered) {
    if (!universe.contains(kc))
      result.add("profile '" + profile.id + "': mastered KC '" + kc + "' is not in the universe");
    if (!seen_mastered.insert(kc).second)
      result.add("profile '" + profile.id + "': KC '" + kc + "' listed as mastered twice");
  }

  std::set<std::string> seen_confused;
  for (const auto& pair : profile.confusions) {
    if (pair.kc_a == pair.kc_b)
      result.add("profile '" + profile.id + "': degenerate confusion pair {" + pair.kc_a + "," +
                 pair.kc_b + "}");
    for (const auto& kc : {pair.kc_a, pair.kc_b}) {
      if (!universe.contains(kc))
        result.add("profile '" + profile.id + "': confused KC '" + kc +
                   "' is not in the universe");
      if (seen_mastered.count(kc))
        result.add("profile '" + profile.id + "': KC '" + kc + "' is both mastered and confused");
      if (!seen_confused.insert(kc).second)
        result.add("profile '" + profile.id + "': KC '" + kc +
                   "' appears in more than one confusion pair");
    }
  }

  if (declared_unknown) {
    auto derived = profile.unknown(universe);
    std::set<std::string> derived_set(derived.begin(), derived.end());
    std::set<std::string> declared_set(declared_unknown->begin(), declared_unknown->end());
    for (const auto& kc : declared_set)
      if (!derived_set.count(kc))
        result.add("profile '" + profile.id + "': KC '" + kc +
                   "' declared unknown but assigned elsewhere");
    for (const auto& kc : derived_set)
      if (!declared_set.count(kc))
        result.add("profile '" + profile.id + "': KC '" + kc +
                   "' is not covered by mastered/confused and missing from declared unknowns");
  }

  return result;
}

enum class AnswerStatus { Mastered, Confused, Unknown };

inline const char* to_string(AnswerStatus s) {
  switch (s) {
    case AnswerStatus::Mastered: return "mastered";
    case AnswerStatus::Confused: return "confused";
    case AnswerStatus::Unknown: return "unknown";
  }
  return "unknown";
}

// Classification of one (profile, question) pair. `focused` is meaningful only
// when answer_status is Confused: it mirrors the focused flag of the pair that
// contains the correct answer's KC.
struct ConditionTag {
  AnswerStatus answer_status = AnswerStatus::Unknown;
  bool confusion_in_distractors = false;
  bool focused = false;

  bool operator==(const ConditionTag&) const = default;
};

// Ordering-capable form of ConditionTag for use as a table key. `focused` is
// normalized: it can only be set on Confused cells.
struct ConditionKey {
  AnswerStatus status = AnswerStatus::Unknown;
  bool confusion_in_distractors = false;
  bool focused = false;

  bool operator<(const ConditionKey& o) const {
    if (status != o.status) return static_cast<int>(status) < static_cast<int>(o.status);
    if (confusion_in_distractors != o.confusion_in_distractors)
      return !confusion_in_distractors;
    return !focused && o.focused;
  }
  bool operator==(const ConditionKey&) const = default;
};

inline ConditionKey key_of(const ConditionTag& tag) {
  return ConditionKey{tag.answer_status, tag.confusion_in_distractors,
                      tag.answer_status == AnswerStatus::Confused && tag.focused};
}

// Total and pure: every (profile, question) maps to exactly one tag.
//
// answer_status follows the status of the correct option's KC. The distractor
// column is pair-specific for Confused rows (is the partner of the relevant
// pair among the distractors?) and profile-wide otherwise (is any member of
// any of the profile's confusion pairs among the distractors?).
inline ConditionTag classify_condition(const StudentProfile& profile, const Question& question) {
  ConditionTag tag;
  const std::string& correct_kc = question.correct_kc();

  const ConfusionPair* pair = profile.pair_containing(correct_kc);
  if (pair != nullptr) {
    tag.answer_status = AnswerStatus::Confused;
    tag.focused = pair->focused;
  } else if (profile.has_mastered(correct_kc)) {
    tag.answer_status = AnswerStatus::Mastered;
  } else {
    tag.answer_status = AnswerStatus::Unknown;
  }

  for (std::size_t i = 0; i < question.options.size(); ++i) {
    if (static_cast<int>(i) == question.correct_index) continue;
    const std::string& kc = question.options[i].kc;
    if (pair != nullptr) {
      if (kc == pair->partner_of(correct_kc)) {
        tag.confusion_in_distractors = true;
        break;
      }
    } else if (profile.pair_containing(kc) != nullptr) {
      tag.confusion_in_distractors = true;
      break;
    }
  }
  return tag;
}

// Distractor indices the simulated student is drawn toward when answering
// incorrectly: for Confused conditions the partner of the relevant pair, for
// Mastered/Unknown conditions any distractor belonging to one of the
// profile's confusion pairs. Empty when the condition's distractor flag is
// false.
inline std::vector<int> confused_distractor_indices(const StudentProfile& profile,
                                                    const Question& question) {
  std::vector<int> out;
  const std::string& correct_kc = question.correct_kc();
  const ConfusionPair* pair = profile.pair_containing(correct_kc);
  for (std::size_t i = 0; i < question.options.size(); ++i) {
    if (static_cast<int>(i) == question.correct_index) continue;
    const std::string& kc = question.options[i].kc;
    if (pair != nullptr) {
      if (kc == pair->partner_of(correct_kc)) out.push_back(static_cast<int>(i));
    } else if (profile.pair_containing(kc) != nullptr) {
      out.push_back(static_cast<int>(i));
    }
  }
  return out;
}

}  // namespace quizsim
