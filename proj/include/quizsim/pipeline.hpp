#pragma once

// End-to-end run orchestration: expand (profile × question), dispatch to the
// configured backend, aggregate into a response log, a score matrix, and a
// run manifest, and optionally persist all three. Only the LLM backend
// parallelizes (network-bound); results land in preassigned slots, so output
// order never depends on scheduling. The API key is read from the
// environment at run time, handed to the client in memory, and is not part
// of any artifact this module writes.

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "quizsim/backends.hpp"
#include "quizsim/bank_io.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/prompt.hpp"
#include "quizsim/response_log.hpp"

namespace quizsim {

struct PipelineResult {
  ResponseLog log;
  ResponseMatrix matrix;
  std::vector<std::string> warnings;
  std::string responses_path;  // set when artifacts were written
  std::string scores_path;
  std::string manifest_path;
};

namespace detail {

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm parts{};
#if defined(_WIN32)
  gmtime_s(&parts, &now);
#else
  gmtime_r(&now, &parts);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &parts);
  return buf;
}

}  // namespace detail

// Reads the key named by the config from the environment; empty when unset.
inline std::string api_key_from_env(const BackendConfig& config) {
  const char* value = std::getenv(config.api_key_env.c_str());
  return value == nullptr ? std::string() : std::string(value);
}

inline PipelineResult run_pipeline(const QuestionBankFile& bank,
                                   const std::vector<StudentProfile>& profiles,
                                   const BackendConfig& config, const std::string& out_dir,
                                   const PromptTemplate* tpl = nullptr,
                                   const CalibrationTable* calibration = nullptr,
                                   LlmClient* llm_override = nullptr) {
  config.validate();

  std::vector<std::string> issues;
  for (const auto& profile : profiles) {
    ValidationResult check = validate_profile(profile, bank.universe);
    for (const auto& issue : check.issues) issues.push_back(issue);
  }
  if (!issues.empty()) {
    std::string msg = "cohort is invalid:";
    for (const auto& issue : issues) msg += "\n  - " + issue;
    throw ValidationError(msg);
  }

  PipelineResult result;

  RunContext ctx;
  ctx.universe = &bank.universe;
  ctx.bank = &bank.exemplars;
  ctx.tpl = tpl;
  if (calibration != nullptr) ctx.calibration = *calibration;
  if (config.kind == BackendKind::Sim) ctx.calibration.validate_complete();

  std::unique_ptr<LlmClient> owned_client;
  if (config.kind == BackendKind::Llm) {
    if (tpl == nullptr)
      throw ValidationError("llm backend needs a prompt template");
    if (!bank.has_exemplars())
      throw ValidationError("llm backend needs exemplars in the question bank");
    if (llm_override != nullptr) {
      ctx.llm = llm_override;
    } else {
      LlmConfig llm_config;
      llm_config.endpoint = config.endpoint;
      llm_config.model = config.model;
      llm_config.timeout_seconds = config.timeout_seconds;
      llm_config.max_retries = config.max_retries;
      llm_config.retry_backoff_ms = config.retry_backoff_ms;
      llm_config.api_key = api_key_from_env(config);
      owned_client = std::make_unique<LlmClient>(llm_config);
      ctx.llm = owned_client.get();
    }
  }

  struct Task {
    const StudentProfile* profile;
    const Question* question;
  };
  std::vector<Task> tasks;
  tasks.reserve(profiles.size() * bank.questions.size());
  for (const auto& profile : profiles)
    for (const auto& question : bank.questions) tasks.push_back({&profile, &question});

  if (profiles.empty()) result.warnings.push_back("cohort is empty; no responses generated");
  if (bank.questions.empty())
    result.warnings.push_back("question bank is empty; no responses generated");

  std::vector<Response> responses(tasks.size());
  const int workers =
      config.kind == BackendKind::Llm
          ? std::min(config.parallel, static_cast<int>(std::max<std::size_t>(tasks.size(), 1)))
          : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      responses[i] = answer(*tasks[i].profile, *tasks[i].question, ctx, config);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          responses[i] = answer(*tasks[i].profile, *tasks[i].question, ctx, config);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  RunManifest manifest;
  manifest.timestamp = detail::utc_timestamp();
  manifest.backend = config.kind == BackendKind::Llm
                         ? "llm:" + config.model
                         : std::string(to_string(config.kind));
  if (config.kind == BackendKind::Llm) {
    manifest.endpoint = config.endpoint;
    manifest.model = config.model;
    manifest.api_key_env = config.api_key_env;
    manifest.parallel = config.parallel;
  }
  if (config.kind == BackendKind::Random) manifest.p_correct = config.p_correct;
  manifest.seed = config.seed;
  manifest.profiles_hash = profiles_hash(profiles);
  manifest.bank_hash = question_bank_hash(bank);
  manifest.n_students = static_cast<int>(profiles.size());
  manifest.n_questions = static_cast<int>(bank.questions.size());
  manifest.n_responses = static_cast<int>(responses.size());
  for (const auto& r : responses)
    if (r.failed) ++manifest.n_failed;
  manifest.run_id =
      detail::hex64(fnv1a64(manifest.timestamp + manifest.bank_hash +
                            manifest.profiles_hash + std::to_string(manifest.seed) +
                            manifest.backend));

  result.log.manifest = manifest;
  result.log.responses = std::move(responses);

  std::vector<std::string> student_ids;
  student_ids.reserve(profiles.size());
  for (const auto& profile : profiles) student_ids.push_back(profile.id);
  std::vector<std::string> question_ids;
  question_ids.reserve(bank.questions.size());
  for (const auto& question : bank.questions) question_ids.push_back(question.id);
  result.matrix = matrix_from_responses(result.log.responses, student_ids, question_ids);

  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
      throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
    result.responses_path = (std::filesystem::path(out_dir) / "responses.jsonl").string();
    result.scores_path = (std::filesystem::path(out_dir) / "scores.csv").string();
    result.manifest_path = (std::filesystem::path(out_dir) / "manifest.json").string();
    save_response_log(result.responses_path, result.log);
    save_score_matrix(result.scores_path, result.matrix);
    detail::write_text_file(result.manifest_path,
                            manifest_to_json(result.log.manifest).dump(2) + "\n");
  }
  return result;
}

}  // namespace quizsim
