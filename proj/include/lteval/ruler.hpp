#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lteval/corpus.hpp"
#include "lteval/judge.hpp"

namespace lteval {

enum class Criterion { Honorifics, LexicalChoice, SyntaxGrammar, ContentAccuracy };

inline constexpr std::array<Criterion, 4> kCriteria = {Criterion::Honorifics, Criterion::LexicalChoice,
                                                       Criterion::SyntaxGrammar, Criterion::ContentAccuracy};

/// Short key ("honorifics", "lexical", "syntax", "content"); matches the
/// annotation channel names.
std::string_view criterion_key(Criterion c) noexcept;
/// Human-readable name used in prompts.
std::string_view criterion_title(Criterion c) noexcept;
Criterion parse_criterion(std::string_view key);
Channel to_channel(Criterion c) noexcept;

struct CriterionRubric {
  std::string preamble;
  std::array<std::string, 5> levels;  // levels[s - 1] describes score s
};

class RubricSet {
 public:
  RubricSet() = default;
  /// Throws InvalidConfig unless every criterion has all five levels.
  explicit RubricSet(std::array<std::optional<CriterionRubric>, 4> rubrics);

  const CriterionRubric& at(Criterion c) const { return *rubrics_[static_cast<std::size_t>(c)]; }
  /// Rubric section as it appears in the prompt.
  std::string render(Criterion c) const;
  std::string fingerprint() const;

 private:
  std::array<std::optional<CriterionRubric>, 4> rubrics_;
};

/// Rubric file: one record per line, {criterion, preamble, levels: {"1": ..., "5": ...}}.
RubricSet load_rubric(const std::filesystem::path& path);
RubricSet parse_rubric(std::string_view jsonl);

struct PromptOptions {
  bool use_cot = false;
  int k_shot = 0;  // one of 0, 5, 10, 15, 20
  bool include_reference = true;
  bool include_rubric = true;
  std::size_t reference_index = 0;
  std::string source_language = "English";
  std::string target_language = "Korean";

  json to_json() const;
  std::string fingerprint() const;
  void validate() const;
};

/// One worked example for few-shot prompting.
struct ShotExample {
  std::string story_id;
  Criterion criterion = Criterion::Honorifics;
  std::string source_text;
  std::string reference_text;
  std::string candidate_text;
  int score = 0;
  std::string rationale;
};

/// Few-shot bank file: {story_id, criterion, source_text, reference_text?,
/// candidate_text, score, rationale?} per line.
class ShotBank {
 public:
  ShotBank() = default;
  explicit ShotBank(std::vector<ShotExample> examples) : examples_(std::move(examples)) {}

  /// First k examples for `criterion` in bank order, skipping `exclude_story`.
  /// Throws InsufficientShots when fewer are available.
  std::vector<const ShotExample*> select(Criterion criterion, std::size_t k,
                                         const std::string& exclude_story) const;
  const std::vector<ShotExample>& examples() const { return examples_; }

 private:
  std::vector<ShotExample> examples_;
};

ShotBank load_shot_bank(const std::filesystem::path& path);
ShotBank parse_shot_bank(std::string_view jsonl);

/// System message shared by every rubric prompt.
extern const char* const kRulerSystemText;

/// Assembles one per-criterion rubric prompt. Sections, in order: task
/// framing, rubric, story summary, worked examples, source, reference,
/// candidate, output format. Each toggle in `options` affects only its own
/// section.
JudgeRequest build_ruler_prompt(Criterion criterion, const ParagraphPair& pair, const std::string& candidate_text,
                                const RubricSet& rubric, const std::string& summary,
                                const PromptOptions& options, const ShotBank& shots);

/// Reads the score from the last line of the form "Score: N". Without CoT a
/// bare integer reply is also accepted. Throws Unparsable or OutOfRange.
int parse_final_score(const std::string& response_text, int min_score, int max_score, bool use_cot);
int parse_likert_score(const std::string& response_text, bool use_cot);

/// Text preceding the final score line, trimmed.
std::string extract_rationale(const std::string& response_text);

struct RubricScorecard {
  std::string system_id;
  ItemKey key;
  std::array<int, 4> scores{};
  std::array<std::string, 4> rationales;  // empty unless use_cot
  std::array<std::string, 4> raw_responses;

  int score(Criterion c) const { return scores[static_cast<std::size_t>(c)]; }
};

struct ItemFailure {
  std::string system_id;
  ItemKey key;
  std::string error_code;
  std::string message;
};

struct RulerRun {
  std::vector<RubricScorecard> scorecards;  // corpus order, successes only
  std::vector<ItemFailure> failures;
  std::size_t attempted = 0;
};

/// Scores every pair the candidate set covers, four judge calls per pair.
/// Per-item errors are recorded as failures and the run continues.
RulerRun score_candidate(const Corpus& corpus, const CandidateSet& candidates, const RubricSet& rubric,
                         const PromptOptions& options, Judge& judge, const ShotBank& shots = {},
                         std::size_t jobs = 1);

/// Paragraphs tagged has_dialogue=false whose honorifics score is not 5.
struct HonorificsAuditEntry {
  std::string system_id;
  ItemKey key;
  int honorifics_score = 0;
};
struct HonorificsAudit {
  std::size_t checked = 0;   // scorecards on paragraphs tagged non-dialogue
  std::size_t untagged = 0;  // scorecards on paragraphs without the tag
  std::vector<HonorificsAuditEntry> violations;

  json to_json() const;
};
HonorificsAudit audit_honorifics(const Corpus& corpus, const std::vector<RubricScorecard>& scorecards);

/// Scorecard file record; see the CLI for the surrounding fields.
json scorecard_to_json(const RubricScorecard& card, bool include_rationale);
RubricScorecard scorecard_from_json(const json& record);

}  // namespace lteval
