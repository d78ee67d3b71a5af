// Command-line front end for the simulated-student quiz pipeline.
//
// Subcommands: cohort (generate profiles), run (answer every question with
// the chosen backend), analyze (item analysis of one run), compare (item
// analysis across cohorts), experiment (crossover form-effect analysis),
// calibrate (print or export the simulator's calibration table).
//
// Exit codes: 0 success, 1 invalid input or usage, 2 backend failure,
// 3 I/O failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "quizsim/bank_io.hpp"
#include "quizsim/cohort.hpp"
#include "quizsim/errors.hpp"
#include "quizsim/experiment.hpp"
#include "quizsim/pipeline.hpp"
#include "quizsim/report.hpp"
#include "quizsim/response_log.hpp"

namespace {

using namespace quizsim;

// "name=path" → {name, path}; bare paths are named after their file stem.
std::pair<std::string, std::string> split_named_path(const std::string& arg) {
  const std::size_t eq = arg.find('=');
  if (eq != std::string::npos && eq > 0)
    return {arg.substr(0, eq), arg.substr(eq + 1)};
  return {std::filesystem::path(arg).stem().string(), arg};
}

std::vector<std::string> unique_student_ids(const std::vector<Response>& responses) {
  std::vector<std::string> ids;
  for (const auto& r : responses)
    if (std::find(ids.begin(), ids.end(), r.student_id) == ids.end())
      ids.push_back(r.student_id);
  return ids;
}

std::vector<std::string> unique_question_ids(const std::vector<Response>& responses) {
  std::vector<std::string> ids;
  for (const auto& r : responses)
    if (std::find(ids.begin(), ids.end(), r.question_id) == ids.end())
      ids.push_back(r.question_id);
  return ids;
}

// A response log as report input: score matrix plus per-choice records, and
// — when a bank is supplied — the question definitions that unlock the
// distractor breakdown.
ReportCohortInput input_from_log(const std::string& name, const std::string& path,
                                 const QuestionBankFile* bank) {
  ResponseLog log = load_response_log(path);
  ReportCohortInput input = report_input_from_matrix(
      name, matrix_from_responses(log.responses, unique_student_ids(log.responses),
                                  unique_question_ids(log.responses)));
  input.choices = scored_choices_from_responses(log.responses);
  if (bank != nullptr) input.questions = bank->questions;
  return input;
}

void emit_report(const Report& report, const std::string& out_dir) {
  std::cout << report_to_text(report);
  if (out_dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + out_dir + "': " + ec.message());
  const std::string text_path = (std::filesystem::path(out_dir) / "report.txt").string();
  const std::string json_path = (std::filesystem::path(out_dir) / "report.json").string();
  detail::write_text_file(text_path, report_to_text(report));
  detail::write_text_file(json_path, report_to_json(report).dump(2) + "\n");
  std::cerr << "wrote " << text_path << "\n" << "wrote " << json_path << "\n";
}

nlohmann::json form_effect_to_json(const FormEffect& effect) {
  nlohmann::json questions = nlohmann::json::array();
  for (const auto& q : effect.questions)
    questions.push_back({{"question", q.question_id},
                         {"mean_original", detail::round4(q.mean_original)},
                         {"mean_revised", detail::round4(q.mean_revised)},
                         {"n_original", q.n_original},
                         {"n_revised", q.n_revised},
                         {"diff", detail::round4(q.diff)}});
  nlohmann::json doc = {{"questions", questions},
                        {"mean_improvement", detail::round4(effect.mean_improvement)}};
  if (effect.p_value.has_value()) {
    doc["p_value"] = detail::round4(*effect.p_value);
    doc["n_permutations"] = effect.n_permutations;
  }
  return doc;
}

std::string form_effect_to_text(const FormEffect& effect) {
  std::ostringstream out;
  out << "FORM EFFECT\n";
  out << "question  original  revised   diff\n";
  for (const auto& q : effect.questions) {
    out << q.question_id;
    for (std::size_t pad = q.question_id.size(); pad < 10; ++pad) out << ' ';
    const double diff = detail::round4(q.diff);
    out << detail::fixed4(detail::round4(q.mean_original)) << "    "
        << detail::fixed4(detail::round4(q.mean_revised)) << "   "
        << (diff < 0 ? "" : " ") << detail::fixed4(diff) << "\n";
  }
  out << "mean improvement " << detail::fixed4(detail::round4(effect.mean_improvement))
      << "\n";
  if (effect.p_value.has_value())
    out << "permutation test: p=" << detail::fixed4(detail::round4(*effect.p_value)) << "  ("
        << effect.n_permutations << " permutations)\n";
  else
    out << "aggregate input: no per-student responses, descriptives only\n";
  return out.str();
}

std::string calibration_to_text(const CalibrationTable& table) {
  std::ostringstream out;
  out << "CALIBRATION\n";
  out << "condition                                p_correct  p_pick_confused_when_wrong\n";
  for (const auto& [key, cell] : table.cells()) {
    const std::string name = condition_name(key);
    out << name;
    for (std::size_t pad = name.size(); pad < 41; ++pad) out << ' ';
    out << detail::fixed4(cell.p_correct) << "     ";
    if (key.confusion_in_distractors)
      out << detail::fixed4(cell.p_pick_confused_when_wrong);
    else
      out << "-";
    out << "\n";
  }
  return out.str();
}

struct CohortArgs {
  std::string bank;
  std::string table;
  std::uint64_t seed = 42;
  std::string prefix = "GS";
  std::string out;
};

void run_cohort_command(const CohortArgs& args) {
  QuestionBankFile bank = load_question_bank(args.bank);
  CohortTableFile table = load_cohort_table(args.table);
  auto profiles =
      generate_cohort(table.spec, bank.universe, table.candidate_pairs, args.seed, args.prefix);
  if (args.out.empty()) {
    std::cout << profiles_to_json(profiles).dump(2) << "\n";
  } else {
    save_profiles(args.out, profiles);
    std::cout << "generated " << profiles.size() << " profiles (seed " << args.seed << ")\n"
              << "wrote " << args.out << "\n";
  }
}

struct RunArgs {
  std::string bank;
  std::string profiles;
  std::string backend = "sim";
  std::uint64_t seed = 42;
  double p_correct = 0.7;
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4";
  int parallel = 1;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string calibration;
  std::string template_path;
  std::string out;
};

void run_run_command(const RunArgs& args) {
  QuestionBankFile bank = load_question_bank(args.bank);
  auto profiles = load_profiles(args.profiles, bank.universe);

  BackendConfig config;
  config.kind = backend_kind_from(args.backend);
  config.seed = args.seed;
  config.p_correct = args.p_correct;
  config.endpoint = args.endpoint;
  config.model = args.model;
  config.parallel = args.parallel;
  config.timeout_seconds = args.timeout_seconds;
  config.max_retries = args.max_retries;
  config.api_key_env = args.api_key_env;

  std::optional<CalibrationTable> calibration;
  if (!args.calibration.empty()) calibration = load_calibration(args.calibration);
  std::optional<PromptTemplate> tpl;
  if (!args.template_path.empty())
    tpl = PromptTemplate::parse(detail::read_text_file(args.template_path));

  PipelineResult result =
      run_pipeline(bank, profiles, config, args.out, tpl ? &*tpl : nullptr,
                   calibration ? &*calibration : nullptr);
  for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";

  const RunManifest& m = result.log.manifest;
  std::cout << "run " << m.run_id << ": " << m.n_responses << " responses from "
            << m.n_students << " students x " << m.n_questions << " questions";
  if (m.n_failed > 0) std::cout << "  (" << m.n_failed << " failed)";
  std::cout << "\n";
  for (const auto& path : {result.responses_path, result.scores_path, result.manifest_path})
    if (!path.empty()) std::cout << "wrote " << path << "\n";
}

struct AnalyzeArgs {
  std::string log;
  std::string bank;
  std::string name = "run";
  std::string out;
};

void run_analyze_command(const AnalyzeArgs& args) {
  std::optional<QuestionBankFile> bank;
  if (!args.bank.empty()) bank = load_question_bank(args.bank);
  Report report =
      build_report({input_from_log(args.name, args.log, bank ? &*bank : nullptr)});
  emit_report(report, args.out);
}

struct CompareArgs {
  std::vector<std::string> means;
  std::vector<std::string> logs;
  std::string bank;
  std::string out;
};

void run_compare_command(const CompareArgs& args) {
  if (args.means.size() + args.logs.size() < 2)
    throw ValidationError("compare needs at least two cohorts (--means/--log)");
  std::optional<QuestionBankFile> bank;
  if (!args.bank.empty()) bank = load_question_bank(args.bank);

  std::vector<ReportCohortInput> inputs;
  for (const auto& arg : args.means) {
    auto [name, path] = split_named_path(arg);
    inputs.push_back(report_input_from_means(name, load_item_means_csv(path)));
  }
  for (const auto& arg : args.logs) {
    auto [name, path] = split_named_path(arg);
    inputs.push_back(input_from_log(name, path, bank ? &*bank : nullptr));
  }
  emit_report(build_report(inputs), args.out);
}

struct ExperimentArgs {
  std::string design;
  std::string aggregates;
  std::string responses;
  std::uint64_t seed = 1;
  std::size_t permutations = 10000;
  std::string out;
};

void run_experiment_command(const ExperimentArgs& args) {
  if (args.aggregates.empty() == args.responses.empty())
    throw ValidationError("experiment needs exactly one of --aggregates or --responses");

  CrossoverDesign design = load_design(args.design);
  DesignCheck check = validate_design(design);
  for (const auto& warning : check.warnings) std::cerr << "warning: " << warning << "\n";
  if (!check.ok) {
    std::string msg = "design is invalid:";
    for (const auto& error : check.errors) msg += "\n  - " + error;
    throw ValidationError(msg);
  }

  FormEffect effect;
  if (!args.aggregates.empty()) {
    effect = form_effect_from_aggregates(load_aggregates(args.aggregates), design);
  } else {
    effect = form_effect(load_quiz_responses(args.responses), design, args.seed,
                         args.permutations);
  }

  std::cout << form_effect_to_text(effect);
  if (!args.out.empty()) {
    detail::write_text_file(args.out, form_effect_to_json(effect).dump(2) + "\n");
    std::cerr << "wrote " << args.out << "\n";
  }
}

struct CalibrateArgs {
  std::string calibration;
  std::string out;
};

void run_calibrate_command(const CalibrateArgs& args) {
  CalibrationTable table = args.calibration.empty() ? CalibrationTable::defaults()
                                                    : load_calibration(args.calibration);
  table.validate_complete();
  std::cout << calibration_to_text(table);
  if (!args.out.empty()) {
    save_calibration(args.out, table);
    std::cerr << "wrote " << args.out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulated-student quiz pipeline"};
  app.require_subcommand(1);

  CohortArgs cohort_args;
  CLI::App* cohort = app.add_subcommand("cohort", "generate student profiles from a cohort table");
  cohort->add_option("--bank", cohort_args.bank, "question bank (defines the KC universe)")
      ->required();
  cohort->add_option("--table", cohort_args.table, "cohort composition table")->required();
  cohort->add_option("--seed", cohort_args.seed, "generation seed");
  cohort->add_option("--prefix", cohort_args.prefix, "student id prefix");
  cohort->add_option("--out", cohort_args.out, "profile file to write (stdout if omitted)");
  cohort->callback([&] { run_cohort_command(cohort_args); });

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "answer every question with the chosen backend");
  run->add_option("--bank", run_args.bank, "question bank")->required();
  run->add_option("--profiles", run_args.profiles, "student profile file")->required();
  run->add_option("--backend", run_args.backend, "llm, sim, or random");
  run->add_option("--seed", run_args.seed, "backend seed");
  run->add_option("--p-correct", run_args.p_correct, "success probability (random backend)");
  run->add_option("--endpoint", run_args.endpoint, "chat-completion endpoint (llm backend)");
  run->add_option("--model", run_args.model, "model name (llm backend)");
  run->add_option("--parallel", run_args.parallel, "concurrent requests (llm backend)");
  run->add_option("--timeout", run_args.timeout_seconds, "request timeout in seconds");
  run->add_option("--retries", run_args.max_retries, "retries per request");
  run->add_option("--api-key-env", run_args.api_key_env,
                  "environment variable holding the API key");
  run->add_option("--calibration", run_args.calibration, "calibration table (sim backend)");
  run->add_option("--template", run_args.template_path, "prompt template (llm backend)");
  run->add_option("--out", run_args.out, "output directory for run artifacts")->required();
  run->callback([&] { run_run_command(run_args); });

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "item analysis of one response log");
  analyze->add_option("--log", analyze_args.log, "response log from a run")->required();
  analyze->add_option("--bank", analyze_args.bank,
                      "question bank (enables the distractor breakdown)");
  analyze->add_option("--name", analyze_args.name, "cohort label in the report");
  analyze->add_option("--out", analyze_args.out, "directory for report.txt/report.json");
  analyze->callback([&] { run_analyze_command(analyze_args); });

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "item analysis across cohorts");
  compare->add_option("--means", compare_args.means,
                      "item-means table, as name=path or path (repeatable)");
  compare->add_option("--log", compare_args.logs,
                      "response log, as name=path or path (repeatable)");
  compare->add_option("--bank", compare_args.bank,
                      "question bank (enables the distractor breakdown)");
  compare->add_option("--out", compare_args.out, "directory for report.txt/report.json");
  compare->callback([&] { run_compare_command(compare_args); });

  ExperimentArgs experiment_args;
  CLI::App* experiment =
      app.add_subcommand("experiment", "crossover form-effect analysis");
  experiment->add_option("--design", experiment_args.design, "crossover design file")
      ->required();
  experiment->add_option("--aggregates", experiment_args.aggregates,
                         "per-version mean table (descriptives only)");
  experiment->add_option("--responses", experiment_args.responses,
                         "per-student responses (enables the permutation test)");
  experiment->add_option("--seed", experiment_args.seed, "permutation seed");
  experiment->add_option("--permutations", experiment_args.permutations,
                         "number of label permutations");
  experiment->add_option("--out", experiment_args.out, "JSON summary file to write");
  experiment->callback([&] { run_experiment_command(experiment_args); });

  CalibrateArgs calibrate_args;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "print or export the simulator calibration table");
  calibrate->add_option("--calibration", calibrate_args.calibration,
                        "table to load (built-in defaults if omitted)");
  calibrate->add_option("--out", calibrate_args.out, "calibration file to write");
  calibrate->callback([&] { run_calibrate_command(calibrate_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
