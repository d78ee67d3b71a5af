#pragma once

// Response backends: a calibrated probabilistic simulator, a Bernoulli
// random baseline, and the LLM endpoint path, all answering one (profile,
// question) pair per call behind a single dispatch function. Per-cell rng
// streams are derived from the master seed and both ids, so results do not
// depend on execution order or parallelism.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "quizsim/calibration.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/knowledge.hpp"
#include "quizsim/llm_client.hpp"
#include "quizsim/prompt.hpp"
#include "quizsim/response.hpp"
#include "quizsim/rng.hpp"

namespace quizsim {

enum class BackendKind { Llm, Sim, Random };

inline const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Llm: return "llm";
    case BackendKind::Sim: return "sim";
    case BackendKind::Random: return "random";
  }
  return "sim";
}

inline BackendKind backend_kind_from(const std::string& name) {
  if (name == "llm") return BackendKind::Llm;
  if (name == "sim") return BackendKind::Sim;
  if (name == "random") return BackendKind::Random;
  throw ValidationError("unknown backend '" + name + "'; expected llm, sim, or random");
}

struct BackendConfig {
  BackendKind kind = BackendKind::Sim;
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  double timeout_seconds = 60.0;
  int max_retries = 3;
  int parallel = 1;
  std::uint64_t seed = 42;
  double p_correct = 0.7;  // random baseline only
  std::string api_key_env = "OPENAI_API_KEY";
  int retry_backoff_ms = 500;

  void validate() const {
    if (max_retries < 0) throw ValidationError("max retries must be ≥ 0");
    if (parallel < 1) throw ValidationError("parallelism must be ≥ 1");
    if (p_correct < 0.0 || p_correct > 1.0)
      throw ValidationError("p-correct must lie in [0,1]");
    if (timeout_seconds <= 0.0) throw ValidationError("timeout must be positive");
  }
};

// Draws one answer from the per-condition calibration: correct with the
// cell's p_correct; otherwise, when a confused option is among the
// distractors, that option with p_pick_confused_when_wrong, else uniform
// over the remaining distractors.
inline Response simulate_answer(const StudentProfile& profile, const Question& question,
                                const CalibrationTable& calibration, Rng& rng) {
  const ConditionTag tag = classify_condition(profile, question);
  const CalibrationCell& cell = calibration.cell(tag);

  int chosen;
  if (rng.bernoulli(cell.p_correct)) {
    chosen = question.correct_index;
  } else {
    const auto confused = confused_distractor_indices(profile, question);
    std::vector<int> plain;
    for (int i = 0; i < static_cast<int>(question.options.size()); ++i) {
      if (i == question.correct_index) continue;
      bool is_confused = false;
      for (int c : confused) is_confused = is_confused || c == i;
      if (!is_confused) plain.push_back(i);
    }
    if (!confused.empty() && (plain.empty() || rng.bernoulli(cell.p_pick_confused_when_wrong)))
      chosen = confused[rng.below(static_cast<std::uint32_t>(confused.size()))];
    else if (!plain.empty())
      chosen = plain[rng.below(static_cast<std::uint32_t>(plain.size()))];
    else
      chosen = question.correct_index;  // single-option degenerate guard
  }
  return finalize_response(profile, question, chosen, "", "sim");
}

// Bernoulli baseline: correct with probability p, wrong answers uniform over
// distractors, no rationale. Condition annotation is left to the caller
// (the dispatcher), since this backend ignores the profile.
inline Response random_answer(const StudentProfile& profile, const Question& question, double p,
                              Rng& rng) {
  if (p < 0.0 || p > 1.0) throw ValidationError("p-correct must lie in [0,1]");
  int chosen;
  if (rng.bernoulli(p)) {
    chosen = question.correct_index;
  } else {
    std::vector<int> distractors;
    for (int i = 0; i < static_cast<int>(question.options.size()); ++i)
      if (i != question.correct_index) distractors.push_back(i);
    chosen = distractors.empty()
                 ? question.correct_index
                 : distractors[rng.below(static_cast<std::uint32_t>(distractors.size()))];
  }
  return finalize_response(profile, question, chosen, "", "random");
}

// Everything the dispatcher needs besides the per-call inputs. The LLM
// client pointer is only consulted for the llm backend.
struct RunContext {
  const KcUniverse* universe = nullptr;
  const ExemplarBank* bank = nullptr;
  const PromptTemplate* tpl = nullptr;
  CalibrationTable calibration = CalibrationTable::defaults();
  LlmClient* llm = nullptr;
};

// One Response per call, never an exception for a failed LLM exchange: those
// come back as failed records carrying the error and the raw reply, so runs
// keep going and the failure count is visible downstream.
inline Response answer(const StudentProfile& profile, const Question& question,
                       const RunContext& ctx, const BackendConfig& config) {
  config.validate();
  switch (config.kind) {
    case BackendKind::Sim: {
      Rng rng = rng_for(config.seed, profile.id, question.id);
      return simulate_answer(profile, question, ctx.calibration, rng);
    }
    case BackendKind::Random: {
      Rng rng = rng_for(config.seed, profile.id, question.id);
      return random_answer(profile, question, config.p_correct, rng);
    }
    case BackendKind::Llm: {
      if (ctx.llm == nullptr || ctx.universe == nullptr || ctx.bank == nullptr ||
          ctx.tpl == nullptr)
        throw ValidationError("llm backend needs a client, universe, bank, and template");
      const std::string backend_id = "llm:" + ctx.llm->config().model;
      std::string raw;
      try {
        PromptText prompt = build_prompt(profile, *ctx.bank, question, *ctx.tpl, *ctx.universe);
        raw = ctx.llm->complete(prompt.text);
        ParsedReply parsed = parse_llm_reply(raw, static_cast<int>(question.options.size()));
        return finalize_response(profile, question, parsed.chosen_index, parsed.rationale,
                                 backend_id, raw);
      } catch (const BackendError& e) {
        return failed_response(profile, question, backend_id, e.what(), raw);
      } catch (const ParseError& e) {
        return failed_response(profile, question, backend_id, e.what(), raw);
      }
    }
  }
  throw ValidationError("unhandled backend kind");
}

}  // namespace quizsim
