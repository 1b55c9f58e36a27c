#include "lteval/translate.hpp"

#include <regex>

#include "lteval/error.hpp"

namespace lteval {

json TranslationPromptSpec::to_json() const {
  return json{{"n_shots", n_shots},
              {"include_summary", include_summary},
              {"granularity", granularity == Granularity::Paragraph ? "paragraph" : "sentence"},
              {"bank_story_ids", bank_story_ids},
              {"require_dialogue_mix", require_dialogue_mix},
              {"source_language", source_language},
              {"target_language", target_language}};
}

std::string TranslationPromptSpec::fingerprint() const { return lteval::fingerprint(to_json()); }

std::vector<TranslationExample> build_translation_bank(const Corpus& corpus,
                                                       const std::vector<std::string>& story_ids) {
  std::vector<TranslationExample> bank;
  for (const auto& id : story_ids) {
    const auto* story = corpus.find_story(id);
    if (!story) throw Error(ErrorCode::InsufficientBank, "example story '" + id + "' is not in the corpus");
    for (const auto& p : story->paragraphs) {
      bank.push_back({p.story_id, p.source_text, p.references.front(), p.has_dialogue});
    }
  }
  return bank;
}

std::vector<const TranslationExample*> select_translation_examples(const std::vector<TranslationExample>& bank,
                                                                   const TranslationPromptSpec& spec,
                                                                   const std::string& exclude_story) {
  std::vector<const TranslationExample*> dialogue, narrative, untagged;
  for (const auto& ex : bank) {
    if (ex.story_id == exclude_story) continue;
    if (!ex.has_dialogue) {
      untagged.push_back(&ex);
    } else if (*ex.has_dialogue) {
      dialogue.push_back(&ex);
    } else {
      narrative.push_back(&ex);
    }
  }
  if (spec.n_shots == 0) return {};
  if (spec.require_dialogue_mix && spec.n_shots >= 2 && (dialogue.empty() || narrative.empty())) {
    throw Error(ErrorCode::InsufficientBank,
                std::string("example bank lacks ") + (dialogue.empty() ? "dialogue" : "narrative") +
                    "-tagged paragraphs outside story '" + exclude_story + "'");
  }
  std::vector<const TranslationExample*> out;
  std::size_t d = 0, r = 0, u = 0;
  bool want_dialogue = true;
  while (out.size() < spec.n_shots) {
    const bool have_d = d < dialogue.size();
    const bool have_r = r < narrative.size();
    if (have_d && (want_dialogue || !have_r)) {
      out.push_back(dialogue[d++]);
    } else if (have_r) {
      out.push_back(narrative[r++]);
    } else if (u < untagged.size()) {
      out.push_back(untagged[u++]);
    } else {
      throw Error(ErrorCode::InsufficientBank, "example bank has " + std::to_string(out.size()) +
                                                   " usable paragraphs outside story '" + exclude_story +
                                                   "', need " + std::to_string(spec.n_shots));
    }
    want_dialogue = !want_dialogue;
  }
  return out;
}

JudgeRequest build_translation_prompt(const std::string& source_text, const std::string& summary,
                                      const std::vector<const TranslationExample*>& examples,
                                      const TranslationPromptSpec& spec) {
  const auto& src = spec.source_language;
  const auto& tgt = spec.target_language;
  std::string user;
  if (spec.include_summary && !trim(summary).empty()) {
    user += "Summary of the story:\n" + summary + "\n\n";
  }
  if (!examples.empty()) {
    user += "Here are example translations from " + src + " to " + tgt + ":\n\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
      user += "Example " + std::to_string(i + 1) + "\n" + src + ": " + examples[i]->source_text + "\n" + tgt +
              ": " + examples[i]->target_text + "\n\n";
    }
  }
  user += "Translate the following " + src + " text into " + tgt +
          ". Output only the translation.\n\n" + src + ": " + source_text + "\n" + tgt + ":";
  return JudgeRequest{"You are a skilled literary translator from " + src + " to " + tgt + ".", std::move(user),
                      std::nullopt};
}

std::vector<std::string> split_sentences(const std::string& text) {
  static const std::regex boundary(R"(([.!?](?:["')]|”|’)*)\s+)");
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::sregex_iterator it(text.begin(), text.end(), boundary), end; it != end; ++it) {
    const auto stop = static_cast<std::size_t>(it->position(0) + it->length(1));
    auto piece = trim(std::string_view(text).substr(start, stop - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    start = static_cast<std::size_t>(it->position(0) + it->length(0));
  }
  auto tail = trim(std::string_view(text).substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

TranslationRun translate_corpus(const Corpus& corpus, const TranslationPromptSpec& spec, Judge& judge,
                                const std::string& system_id, std::size_t jobs) {
  const auto bank = build_translation_bank(corpus, spec.bank_story_ids);
  const auto items = corpus.pairs();

  std::vector<std::optional<std::string>> texts(items.size());
  std::vector<std::optional<std::string>> errors(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& pair = *items[i];
    const auto& summary = corpus.find_story(pair.story_id)->summary;
    // Bank problems are configuration errors and abort the run.
    auto examples = select_translation_examples(bank, spec, pair.story_id);
    try {
      if (spec.granularity == Granularity::Paragraph) {
        texts[i] = trim(judge.complete(build_translation_prompt(pair.source_text, summary, examples, spec)).text);
      } else {
        std::string joined;
        for (const auto& sentence : split_sentences(pair.source_text)) {
          auto part = trim(judge.complete(build_translation_prompt(sentence, summary, examples, spec)).text);
          joined += (joined.empty() ? "" : " ") + part;
        }
        texts[i] = std::move(joined);
      }
    } catch (const Error& e) {
      errors[i] = std::string(to_string(e.code())) + ": " + e.what();
    }
  });

  TranslationRun run;
  run.candidates.system_id = system_id;
  run.candidates.provenance = json{{"model", judge.model_id()},
                                   {"temperature", judge.config().temperature ? json(*judge.config().temperature)
                                                                              : json("backend-default")},
                                   {"spec", spec.to_json()},
                                   {"spec_fingerprint", spec.fingerprint()}};
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (texts[i] && !texts[i]->empty()) {
      run.candidates.translations.emplace(items[i]->key(), std::move(*texts[i]));
    } else {
      run.failures.emplace_back(items[i]->key(), errors[i].value_or("EmptyText: empty translation"));
    }
  }
  return run;
}

}  // namespace lteval
