#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "lteval/corpus.hpp"
#include "lteval/judge.hpp"
#include "lteval/ruler.hpp"

namespace lteval {

/// The nine question categories, in reporting order.
enum class Category {
  HistoricalCultural,
  Imagery,
  CharacterVoice,
  InterpersonalHierarchy,
  IdiomaticNaturalness,
  NuancedInterpretation,
  NarrativePacing,
  AffectiveStylistic,
  OverallConsistency,
};

inline constexpr std::size_t kCategoryCount = 9;
inline constexpr std::array<Category, kCategoryCount> kCategories = {
    Category::HistoricalCultural,     Category::Imagery,
    Category::CharacterVoice,         Category::InterpersonalHierarchy,
    Category::IdiomaticNaturalness,   Category::NuancedInterpretation,
    Category::NarrativePacing,        Category::AffectiveStylistic,
    Category::OverallConsistency,
};

/// Full label, e.g. "Narrative Pacing and Rhythm".
std::string_view category_label(Category c) noexcept;
/// Abridged label for plots and table headers, e.g. "Pace".
std::string_view category_short(Category c) noexcept;
/// Case-insensitive exact match on the full label.
std::optional<Category> match_category(std::string_view text);

struct VerseQuestion {
  std::string question_id;
  ItemKey key;
  std::string text;
  std::optional<Category> category;
};

struct VerseGrade {
  std::string question_id;
  std::string system_id;
  int score = 0;  // 1 not satisfied, 2 partially, 3 fully
  std::string rationale;
  std::string raw_response;
};

struct GenerationResult {
  std::vector<VerseQuestion> questions;
  std::size_t parsed = 0;  // list items before the cap was applied
};

/// Splits a numbered list ("1. ...", "2) ...") into items. Continuation lines
/// are joined to the preceding item; blank items are dropped.
std::vector<std::string> parse_numbered_list(const std::string& text);

JudgeRequest build_generation_prompt(const ParagraphPair& pair, const std::string& summary, std::size_t n_target,
                                     const std::string& source_language = "English");

/// Asks the judge for about `n_target` verification questions and keeps at
/// most n_target + 5. Question ids are "<story>-<index>-q<NN>".
GenerationResult generate_questions(const ParagraphPair& pair, const std::string& summary, std::size_t n_target,
                                    Judge& judge, const std::string& source_language = "English");

JudgeRequest build_classification_prompt(const VerseQuestion& question);
JudgeRequest build_classification_reprompt(const VerseQuestion& question, const std::string& previous_answer);

/// Zero-shot top-1 classification with one reprompt on an unmappable answer.
Category classify_question(const VerseQuestion& question, Judge& judge);

struct GradeOptions {
  bool include_reference = false;
  bool include_summary = true;
  bool use_cot = false;
  int k_shot = 0;
  std::size_t reference_index = 0;
  std::string source_language = "English";
  std::string target_language = "Korean";

  json to_json() const;
  std::string fingerprint() const;
};

/// Worked grading example: {story_id, question, candidate_text, score, rationale?}.
struct GradeShot {
  std::string story_id;
  std::string question;
  std::string source_text;
  std::string candidate_text;
  int score = 0;
  std::string rationale;
};
std::vector<GradeShot> parse_grade_shots(std::string_view jsonl);

JudgeRequest build_grading_prompt(const VerseQuestion& question, const ParagraphPair& pair,
                                  const std::string& candidate_text, const std::string& summary,
                                  const GradeOptions& options, const std::vector<GradeShot>& shots = {});

VerseGrade grade_question(const VerseQuestion& question, const ParagraphPair& pair, const std::string& candidate_text,
                          const std::string& system_id, const std::string& summary, const GradeOptions& options,
                          Judge& judge, const std::vector<GradeShot>& shots = {});

struct CategoryAggregate {
  Category category = Category::HistoricalCultural;
  std::size_t n_questions = 0;
  std::size_t n_grades = 0;
  double question_share = 0.0;                 // percent of all questions
  std::optional<double> mean_score_percent;    // nullopt when no grades
};

/// Per-category question share and mean grade (as percent on the 1..3
/// scale, linear min-max). Throws UnclassifiedQuestion when a grade points at
/// a question with no category, UnknownItem when it points nowhere.
std::array<CategoryAggregate, kCategoryCount> aggregate_categories(const std::vector<VerseQuestion>& questions,
                                                                   const std::vector<VerseGrade>& grades);

// Record formats.
json question_to_json(const VerseQuestion& q);
VerseQuestion question_from_json(const json& record);
json grade_to_json(const VerseGrade& g, bool include_rationale);
VerseGrade grade_from_json(const json& record);

}  // namespace lteval
