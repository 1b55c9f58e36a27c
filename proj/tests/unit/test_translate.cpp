#include <gtest/gtest.h>

#include "lteval/error.hpp"
#include "lteval/translate.hpp"
#include "support.hpp"

using namespace lteval;

namespace {

std::vector<TranslationExample> bank_of(const std::string& story, const std::vector<std::optional<bool>>& tags) {
  std::vector<TranslationExample> out;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    out.push_back({story, story + "-src-" + std::to_string(i), story + "-tgt-" + std::to_string(i), tags[i]});
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::Io;
}

}  // namespace

TEST(TranslationShots, AlternateDialogueAndNarrative) {
  auto bank = bank_of("a", {true, true, true, false, false, std::nullopt});
  TranslationPromptSpec spec;
  spec.n_shots = 5;
  const auto picked = select_translation_examples(bank, spec, "other");
  ASSERT_EQ(picked.size(), 5u);
  std::vector<std::optional<bool>> tags;
  for (const auto* p : picked) tags.push_back(p->has_dialogue);
  EXPECT_EQ(tags, (std::vector<std::optional<bool>>{true, false, true, false, true}));

  spec.n_shots = 6;
  const auto all = select_translation_examples(bank, spec, "other");
  EXPECT_EQ(all.back()->has_dialogue, std::nullopt);
  spec.n_shots = 7;
  EXPECT_EQ(code_of([&] { select_translation_examples(bank, spec, "other"); }), ErrorCode::InsufficientBank);
}

TEST(TranslationShots, ExcludesOwnStoryAndNeedsMix) {
  auto bank = bank_of("a", {true, false, true, false});
  auto more = bank_of("b", {true, false, true, false, true});
  bank.insert(bank.end(), more.begin(), more.end());
  TranslationPromptSpec spec;
  spec.n_shots = 5;
  for (const auto* p : select_translation_examples(bank, spec, "a")) EXPECT_EQ(p->story_id, "b");
  EXPECT_EQ(code_of([&] { select_translation_examples(bank, spec, "b"); }), ErrorCode::InsufficientBank);

  const auto talk_only = bank_of("c", {true, true, true, true, true});
  EXPECT_EQ(code_of([&] { select_translation_examples(talk_only, spec, "x"); }), ErrorCode::InsufficientBank);
  spec.require_dialogue_mix = false;
  EXPECT_EQ(select_translation_examples(talk_only, spec, "x").size(), 5u);
  spec.n_shots = 0;
  EXPECT_TRUE(select_translation_examples(bank, spec, "b").empty());
}

TEST(TranslationShots, BankFromCorpus) {
  const auto corpus = support::synthetic_corpus(3, 4);
  const auto bank = build_translation_bank(corpus, {"s2", "s0"});
  ASSERT_EQ(bank.size(), 8u);
  EXPECT_EQ(bank[0].story_id, "s2");
  EXPECT_EQ(bank[0].target_text, corpus.at({"s2", 0}).references[0]);
  EXPECT_EQ(code_of([&] { build_translation_bank(corpus, {"missing"}); }), ErrorCode::InsufficientBank);
}

TEST(TranslationPrompt, Content) {
  auto bank = bank_of("a", {true, false});
  TranslationPromptSpec spec;
  const auto req = build_translation_prompt("Hello there.", "A summary.", {&bank[0], &bank[1]}, spec);
  EXPECT_FALSE(req.temperature.has_value());
  EXPECT_NE(req.user_text.find("A summary."), std::string::npos);
  EXPECT_NE(req.user_text.find("English: a-src-0\nKorean: a-tgt-0"), std::string::npos);
  EXPECT_TRUE(req.user_text.ends_with("English: Hello there.\nKorean:"));
  spec.include_summary = false;
  EXPECT_EQ(build_translation_prompt("x", "A summary.", {}, spec).user_text.find("A summary."), std::string::npos);
}

TEST(Sentences, Split) {
  EXPECT_EQ(split_sentences("One. Two! Three? Four"),
            (std::vector<std::string>{"One.", "Two!", "Three?", "Four"}));
  EXPECT_EQ(split_sentences("“Go.” She left.  "), (std::vector<std::string>{"“Go.”", "She left."}));
  EXPECT_EQ(split_sentences("He said \"no.\" Then 3.5 apples."),
            (std::vector<std::string>{"He said \"no.\"", "Then 3.5 apples."}));
  EXPECT_TRUE(split_sentences("   ").empty());
}

TEST(TranslateCorpus, ProvenanceAndFailures) {
  const auto corpus = support::synthetic_corpus(3, 2);
  JudgeConfig cfg;
  cfg.temperature = std::nullopt;
  auto script = json::parse(R"({"model_id":"mt","rules":[
      {"contains":["English: Source s1 paragraph 1.\nKorean:"],"response":"   "}],
      "fallback":"번역"})");
  Judge judge(cfg, std::make_unique<MockScriptBackend>(script));
  TranslationPromptSpec spec;
  spec.n_shots = 2;
  spec.bank_story_ids = {"s0", "s2"};
  const auto run = translate_corpus(corpus, spec, judge, "mt-sys", 2);
  EXPECT_EQ(run.candidates.system_id, "mt-sys");
  EXPECT_EQ(run.candidates.translations.size(), 5u);
  ASSERT_EQ(run.failures.size(), 1u);
  EXPECT_EQ(run.failures[0].first, (ItemKey{"s1", 1}));
  EXPECT_EQ(run.candidates.provenance["temperature"], "backend-default");
  EXPECT_EQ(run.candidates.provenance["model"], "mt");
  EXPECT_EQ(run.candidates.translations.at({"s0", 0}), "번역");
  EXPECT_FALSE(judge.resolve(build_translation_prompt("x", "", {}, spec)).temperature.has_value());

  JudgeConfig warm;
  warm.temperature = 0.7;
  Judge judge2(warm, std::make_unique<MockScriptBackend>(script));
  EXPECT_EQ(translate_corpus(corpus, spec, judge2, "x").candidates.provenance["temperature"], 0.7);
}

TEST(TranslateCorpus, SentenceGranularityJoinsParts) {
  std::vector<Story> stories(1);
  stories[0].story_id = "t";
  ParagraphPair p;
  p.story_id = "t";
  p.source_text = "First one. Second one.";
  p.references = {"ref"};
  stories[0].paragraphs.push_back(p);
  Corpus corpus(stories);
  auto script = json::parse(R"({"model_id":"m","rules":[
      {"contains":["English: First one.\n"],"response":"하나."},
      {"contains":["English: Second one.\n"],"response":"둘."}]})");
  Judge judge(JudgeConfig{}, std::make_unique<MockScriptBackend>(script));
  TranslationPromptSpec spec;
  spec.n_shots = 0;
  spec.granularity = Granularity::Sentence;
  const auto run = translate_corpus(corpus, spec, judge, "sys");
  EXPECT_EQ(run.candidates.translations.at({"t", 0}), "하나. 둘.");
  EXPECT_EQ(judge.stats().backend_calls, 2u);
}
