#pragma once

// Prompt assembly. A prompt has three parts: a role-play introduction, one
// segment per mastered KC and per confusion pair of the profile (unknown KCs
// are deliberately never mentioned), and the target question with a reply
// format instruction. Wording lives in a template asset with named blocks;
// this module fills placeholders and records a structural manifest so tests
// can assert on composition without golden text.

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"

namespace quizsim {

// One illustrated choice: a question plus the option the simulated student
// is shown to have picked.
struct Exemplar {
  Question question;
  int chosen_index = 0;

  char chosen_letter() const { return option_letter(chosen_index); }
  const std::string& chosen_text() const { return question.options.at(chosen_index).text; }
};

// Normalized unordered pair key: (lexicographically smaller id first).
using PairKey = std::pair<std::string, std::string>;

inline PairKey pair_key(const std::string& a, const std::string& b) {
  return a < b ? PairKey{a, b} : PairKey{b, a};
}

inline PairKey pair_key(const ConfusionPair& p) { return pair_key(p.kc_a, p.kc_b); }

inline std::string pair_label(const PairKey& key) { return key.first + "+" + key.second; }

// Exemplar storage. Confusion entries hold exactly two wrong-answer examples,
// canonically ordered: [0] has the pair's first (normalized) KC as the
// correct answer, [1] the second. Focused extras hold two correctly answered
// easy questions per pair, same ordering.
struct ExemplarBank {
  std::map<std::string, Exemplar> mastery;
  std::map<PairKey, std::array<Exemplar, 2>> confusion;
  std::map<PairKey, std::array<Exemplar, 2>> focused_extras;
};

// Structural invariants: mastery examples show the correct answer to a
// question about that KC; confusion examples show the partner KC being
// chosen over the correct one, one mistake per direction; focused extras
// show correct answers within the pair.
inline void validate_bank(const ExemplarBank& bank, const KcUniverse& universe) {
  for (const auto& [kc, ex] : bank.mastery) {
    if (!universe.contains(kc))
      throw ValidationError("mastery exemplar for unknown KC '" + kc + "'");
    validate_question(ex.question, universe);
    if (ex.chosen_index != ex.question.correct_index)
      throw ValidationError("mastery exemplar for '" + kc + "' shows a wrong answer");
    if (ex.question.correct_kc() != kc)
      throw ValidationError("mastery exemplar for '" + kc + "' asks about '" +
                            ex.question.correct_kc() + "'");
  }

  for (const auto& [key, examples] : bank.confusion) {
    const std::string label = pair_label(key);
    for (const auto& kc : {key.first, key.second})
      if (!universe.contains(kc))
        throw ValidationError("confusion exemplars for " + label + " reference unknown KC '" +
                              kc + "'");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& ex = examples[i];
      validate_question(ex.question, universe);
      const std::string& expected_correct = i == 0 ? key.first : key.second;
      const std::string& expected_chosen = i == 0 ? key.second : key.first;
      if (ex.question.correct_kc() != expected_correct)
        throw ValidationError("confusion exemplar " + std::to_string(i + 1) + " for " + label +
                              " must have '" + expected_correct + "' as the correct answer");
      if (ex.chosen_index < 0 || ex.chosen_index >= static_cast<int>(ex.question.options.size()))
        throw ValidationError("confusion exemplar for " + label + " has chosen_index out of range");
      if (ex.chosen_index == ex.question.correct_index)
        throw ValidationError("confusion exemplar for " + label +
                              " must show a mistake, not the correct answer");
      if (ex.question.options[ex.chosen_index].kc != expected_chosen)
        throw ValidationError("confusion exemplar for " + label + " must show '" +
                              expected_chosen + "' being chosen");
    }
  }

  for (const auto& [key, examples] : bank.focused_extras) {
    const std::string label = pair_label(key);
    if (!bank.confusion.count(key))
      throw ValidationError("focused extras for " + label + " lack confusion exemplars");
    for (std::size_t i = 0; i < 2; ++i) {
      const auto& ex = examples[i];
      validate_question(ex.question, universe);
      if (ex.chosen_index != ex.question.correct_index)
        throw ValidationError("focused extra for " + label + " must show a correct answer");
      const std::string& expected_correct = i == 0 ? key.first : key.second;
      if (ex.question.correct_kc() != expected_correct)
        throw ValidationError("focused extra " + std::to_string(i + 1) + " for " + label +
                              " must ask about '" + expected_correct + "'");
    }
  }
}

// Question rendered as a stem plus lettered options, in option order.
inline std::string render_question(const Question& q) {
  std::string out = q.stem;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    out += "\n";
    out += option_letter(static_cast<int>(i));
    out += ") ";
    out += q.options[i].text;
  }
  return out;
}

// Named-block template asset. Blocks start with a line "@@ <name>"; content
// runs to the next block marker. One trailing newline per block is trimmed.
class PromptTemplate {
public:
  static PromptTemplate parse(const std::string& text) {
    PromptTemplate tpl;
    std::string current_name;
    std::string current_body;
    auto flush = [&]() {
      if (current_name.empty()) return;
      if (!current_body.empty() && current_body.back() == '\n') current_body.pop_back();
      tpl.blocks_[current_name] = current_body;
      current_body.clear();
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      const bool last = eol == std::string::npos;
      std::string line = text.substr(pos, last ? std::string::npos : eol - pos);
      if (line.rfind("@@ ", 0) == 0) {
        flush();
        current_name = line.substr(3);
        while (!current_name.empty() && current_name.back() == ' ') current_name.pop_back();
        if (current_name.empty()) throw ParseError("template block marker with empty name");
        if (tpl.blocks_.count(current_name))
          throw ParseError("duplicate template block '" + current_name + "'");
      } else if (!current_name.empty()) {
        current_body += line;
        current_body += '\n';
      } else if (!line.empty()) {
        throw ParseError("template content before the first '@@ <name>' marker");
      }
      if (last) break;
      pos = eol + 1;
    }
    flush();

    static const char* required[] = {"intro",        "mastery_example", "confusion_header",
                                     "confusion_example", "focused_note", "focused_example",
                                     "target"};
    std::string missing;
    for (const char* name : required)
      if (!tpl.blocks_.count(name)) missing += missing.empty() ? name : std::string(", ") + name;
    if (!missing.empty())
      throw ParseError("template is missing required blocks: " + missing);
    return tpl;
  }

  const std::string& block(const std::string& name) const {
    auto it = blocks_.find(name);
    if (it == blocks_.end()) throw ParseError("unknown template block '" + name + "'");
    return it->second;
  }

  // Single-pass placeholder substitution: each {name} present in `values` is
  // replaced by its value verbatim; inserted values are never re-scanned, and
  // unknown placeholders are left untouched.
  static std::string fill(const std::string& text,
                          const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t open = text.find('{', pos);
      if (open == std::string::npos) {
        out.append(text, pos, std::string::npos);
        break;
      }
      std::size_t close = text.find('}', open + 1);
      if (close == std::string::npos) {
        out.append(text, pos, std::string::npos);
        break;
      }
      out.append(text, pos, open - pos);
      const std::string name = text.substr(open + 1, close - open - 1);
      auto it = values.find(name);
      if (it != values.end()) {
        out += it->second;
        pos = close + 1;
      } else {
        out += '{';
        pos = open + 1;
      }
    }
    return out;
  }

private:
  std::map<std::string, std::string> blocks_;
};

enum class SegmentKind { Intro, Mastery, Confusion, Target };

struct PromptSegment {
  SegmentKind kind = SegmentKind::Intro;
  std::string ref;             // KC id, normalized pair label, or question id
  std::size_t n_examples = 0;  // example questions quoted in this segment
  bool focused = false;
};

struct PromptText {
  std::string text;
  std::vector<PromptSegment> manifest;
};

namespace detail {

inline std::map<std::string, std::string> exemplar_values(const Exemplar& ex) {
  return {{"question", render_question(ex.question)},
          {"chosen_letter", std::string(1, ex.chosen_letter())},
          {"chosen_text", ex.chosen_text()}};
}

}  // namespace detail

// One mastered-KC segment: the bank's example question answered correctly.
inline std::pair<std::string, PromptSegment> render_mastery_segment(
    const std::string& kc, const ExemplarBank& bank, const PromptTemplate& tpl,
    const KcUniverse& universe) {
  auto it = bank.mastery.find(kc);
  if (it == bank.mastery.end())
    throw ValidationError("no mastery exemplar for KC '" + kc + "'");
  const Exemplar& ex = it->second;
  std::map<std::string, std::string> values = detail::exemplar_values(ex);
  values["kc_id"] = kc;
  values["kc_label"] = universe.label_of(kc);
  values["answer_letter"] = std::string(1, ex.chosen_letter());
  values["answer_text"] = ex.chosen_text();
  PromptSegment seg{SegmentKind::Mastery, kc, 1, false};
  return {PromptTemplate::fill(tpl.block("mastery_example"), values), seg};
}

// One confusion-pair segment: header, the two wrong-direction examples, and
// (for focused pairs) a note plus two correctly answered easy examples.
inline std::pair<std::string, PromptSegment> render_confusion_segment(
    const ConfusionPair& pair, const ExemplarBank& bank, const PromptTemplate& tpl,
    const KcUniverse& universe) {
  const PairKey key = pair_key(pair);
  auto it = bank.confusion.find(key);
  if (it == bank.confusion.end())
    throw ValidationError("no confusion exemplars for pair " + pair_label(key));

  std::map<std::string, std::string> header_values = {
      {"kc_a_id", key.first},
      {"kc_b_id", key.second},
      {"kc_a_label", universe.label_of(key.first)},
      {"kc_b_label", universe.label_of(key.second)}};
  std::string text = PromptTemplate::fill(tpl.block("confusion_header"), header_values);
  std::size_t n_examples = 0;
  for (const Exemplar& ex : it->second) {
    text += "\n";
    text += PromptTemplate::fill(tpl.block("confusion_example"), detail::exemplar_values(ex));
    ++n_examples;
  }

  if (pair.focused) {
    auto extras = bank.focused_extras.find(key);
    if (extras == bank.focused_extras.end())
      throw ValidationError("no focused extras for pair " + pair_label(key));
    text += "\n";
    text += PromptTemplate::fill(tpl.block("focused_note"), header_values);
    for (const Exemplar& ex : extras->second) {
      text += "\n";
      text += PromptTemplate::fill(tpl.block("focused_example"), detail::exemplar_values(ex));
      ++n_examples;
    }
  }

  PromptSegment seg{SegmentKind::Confusion, pair_label(key), n_examples, pair.focused};
  return {text, seg};
}

// Full prompt: intro, one segment per mastered KC (profile order, which
// loaders and the generator keep aligned with the universe declaration
// order), one per confusion pair, then the target question. Unknown KCs
// contribute nothing anywhere.
inline PromptText build_prompt(const StudentProfile& profile, const ExemplarBank& bank,
                               const Question& target, const PromptTemplate& tpl,
                               const KcUniverse& universe) {
  PromptText prompt;
  auto append = [&prompt](const std::string& text, PromptSegment seg) {
    if (!prompt.text.empty()) prompt.text += "\n\n";
    prompt.text += text;
    prompt.manifest.push_back(std::move(seg));
  };

  append(tpl.block("intro"), PromptSegment{SegmentKind::Intro, "", 0, false});
  for (const auto& kc : profile.mastered) {
    auto [text, seg] = render_mastery_segment(kc, bank, tpl, universe);
    append(text, seg);
  }
  for (const auto& pair : profile.confusions) {
    auto [text, seg] = render_confusion_segment(pair, bank, tpl, universe);
    append(text, seg);
  }
  append(PromptTemplate::fill(tpl.block("target"), {{"question", render_question(target)}}),
         PromptSegment{SegmentKind::Target, target.id, 1, false});
  return prompt;
}

}  // namespace quizsim
