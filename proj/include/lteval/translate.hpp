#pragma once

#include <string>
#include <vector>

#include "lteval/corpus.hpp"
#include "lteval/judge.hpp"

namespace lteval {

enum class Granularity { Paragraph, Sentence };

struct TranslationPromptSpec {
  std::size_t n_shots = 5;
  bool include_summary = true;
  Granularity granularity = Granularity::Paragraph;
  std::vector<std::string> bank_story_ids;
  /// Require both dialogue and narrative paragraphs among the examples.
  bool require_dialogue_mix = true;
  std::string source_language = "English";
  std::string target_language = "Korean";

  json to_json() const;
  std::string fingerprint() const;
};

struct TranslationExample {
  std::string story_id;
  std::string source_text;
  std::string target_text;
  std::optional<bool> has_dialogue;
};

/// Source/first-reference pairs from the designated stories, corpus order.
std::vector<TranslationExample> build_translation_bank(const Corpus& corpus,
                                                       const std::vector<std::string>& story_ids);

/// Picks `spec.n_shots` examples outside `exclude_story`, alternating
/// dialogue and narrative paragraphs while both remain. Throws
/// InsufficientBank when too few examples exist or, with
/// require_dialogue_mix, when one kind is missing.
std::vector<const TranslationExample*> select_translation_examples(const std::vector<TranslationExample>& bank,
                                                                   const TranslationPromptSpec& spec,
                                                                   const std::string& exclude_story);

JudgeRequest build_translation_prompt(const std::string& source_text, const std::string& summary,
                                      const std::vector<const TranslationExample*>& examples,
                                      const TranslationPromptSpec& spec);

/// Naive split after '.', '!' or '?' (plus closing quotes) followed by
/// whitespace.
std::vector<std::string> split_sentences(const std::string& text);

struct TranslationRun {
  CandidateSet candidates;
  std::vector<std::pair<ItemKey, std::string>> failures;  // key, message
};

/// One candidate per paragraph. Requests carry no temperature unless the
/// judge config sets one, so backends sample at their default.
TranslationRun translate_corpus(const Corpus& corpus, const TranslationPromptSpec& spec, Judge& judge,
                                const std::string& system_id, std::size_t jobs = 1);

}  // namespace lteval
