#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lteval/util.hpp"

namespace lteval::cli {

/// Every flag of the command line. A JSON config file (--config) uses the
/// flag names without dashes as keys; flags given on the command line win.
struct RunConfig {
  // Inputs.
  std::filesystem::path corpus;
  std::filesystem::path stories;
  std::vector<std::filesystem::path> candidates;
  std::vector<std::filesystem::path> annotations;
  std::vector<std::filesystem::path> judge_annotations;
  std::filesystem::path rubric;
  std::filesystem::path shots;
  std::filesystem::path grade_shots;
  std::filesystem::path questions;
  std::filesystem::path scorecards;
  std::filesystem::path grades;
  std::filesystem::path manifest;
  std::filesystem::path baseline_csv;
  std::filesystem::path category_gold;

  // Judge.
  std::string backend = "mock";
  std::filesystem::path mock_script;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
  int max_retries = 3;
  int retry_backoff_ms = 1000;
  int timeout_s = 120;
  std::filesystem::path cache;
  bool no_cache = false;

  // Prompting.
  int k_shot = 0;
  bool cot = false;
  bool no_rubric = false;
  bool no_reference = false;
  std::size_t reference_index = 0;
  bool verse_reference = false;
  bool no_verse_summary = false;
  int verse_k_shot = 0;
  std::size_t n_questions = 10;
  std::string source_lang = "English";
  std::string target_lang = "Korean";

  // Run.
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::filesystem::path out = "out";
  std::string run_id = "run";

  // sample
  std::vector<std::string> sample_stories;
  std::size_t n_per_story = 20;
  std::size_t q_per_item = 0;

  // agree / report
  std::string alpha_level = "ordinal";
  std::string tau_variant = "b";
  std::string percent_mapping = "min-max";
  double radar_axis_min = 40.0;

  // translate
  std::string system_id;
  std::vector<std::string> shot_stories;
  std::size_t n_shots = 5;
  bool no_summary = false;
  std::string granularity = "paragraph";
  bool allow_unmixed_shots = false;

  json to_json() const;
  /// Hash of the settings that change judge outputs. Input and output paths,
  /// job count and run id are excluded so every subcommand of one run
  /// shares it.
  std::string fingerprint() const;
};

/// Parses argv and runs one subcommand. Returns the process exit status:
/// 0 on success (including runs with isolated per-item failures), 1 on a
/// module error, 2 on a usage error. Errors are written to `err` as one JSON
/// object {"error": <code>, "message": ...}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lteval::cli
