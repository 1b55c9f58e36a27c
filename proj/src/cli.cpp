#include "lteval/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "lteval/corpus.hpp"
#include "lteval/error.hpp"
#include "lteval/judge.hpp"
#include "lteval/metrics.hpp"
#include "lteval/report.hpp"
#include "lteval/ruler.hpp"
#include "lteval/translate.hpp"
#include "lteval/verse.hpp"

#ifndef LTEVAL_DATA_DIR
#define LTEVAL_DATA_DIR "data"
#endif

namespace fs = std::filesystem;

namespace lteval::cli {

namespace {

/// Reads a flat JSON object as CLI11 config items. Keys may use '_' or '-'.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 && opt->get_items_expected_max() <= 1 ? json(res.front()) : json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      j = json::parse(input);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      if (value.is_null()) continue;
      CLI::ConfigItem item;
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else if (value.is_object()) {
        throw CLI::ConversionError("config key '" + key + "' must not be an object");
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

std::string error_json(std::string_view code, std::string_view message) {
  return json{{"error", code}, {"message", message}}.dump();
}

std::string file_sha(const fs::path& path) {
  if (path.empty()) return "";
  std::error_code ec;
  if (!fs::exists(path, ec)) return "missing";
  return sha256_hex(read_file(path)).substr(0, 16);
}

fs::path default_rubric() { return fs::path(LTEVAL_DATA_DIR) / "rubric_en.jsonl"; }

fs::path rubric_path(const RunConfig& c) { return c.rubric.empty() ? default_rubric() : c.rubric; }

PromptOptions prompt_options(const RunConfig& c) {
  PromptOptions o;
  o.use_cot = c.cot;
  o.k_shot = c.k_shot;
  o.include_reference = !c.no_reference;
  o.include_rubric = !c.no_rubric;
  o.reference_index = c.reference_index;
  o.source_language = c.source_lang;
  o.target_language = c.target_lang;
  return o;
}

GradeOptions grade_options(const RunConfig& c) {
  GradeOptions o;
  o.include_reference = c.verse_reference;
  o.include_summary = !c.no_verse_summary;
  o.use_cot = c.cot;
  o.k_shot = c.verse_k_shot;
  o.reference_index = c.reference_index;
  o.source_language = c.source_lang;
  o.target_language = c.target_lang;
  return o;
}

std::optional<double> evaluation_temperature(const RunConfig& c) { return c.temperature.value_or(0.0); }

json paths_json(const std::vector<fs::path>& paths) {
  json j = json::array();
  for (const auto& p : paths) j.push_back(p.string());
  return j;
}

// --- Run context -------------------------------------------------------------

struct Context {
  RunConfig cfg;
  std::string command;
  std::ostream& out;
  std::unique_ptr<Judge> judge;
  json summary = json::object();

  fs::path output(const std::string& suffix) const { return cfg.out / (cfg.run_id + "." + suffix); }

  void write(const std::string& suffix, std::string_view content) const {
    fs::create_directories(cfg.out);
    atomic_write_file(output(suffix), content);
  }

  Judge& make_judge(bool evaluation) {
    JudgeConfig jc;
    if (cfg.backend == "live") {
      if (cfg.endpoint.empty() || cfg.model.empty()) {
        throw Error(ErrorCode::InvalidConfig, "--backend live needs --endpoint and --model");
      }
      jc.backend = LiveBackend{cfg.endpoint, cfg.model, cfg.api_key_env};
    } else {
      if (cfg.mock_script.empty()) throw Error(ErrorCode::InvalidConfig, "--backend mock needs --mock-script");
      jc.backend = MockBackend{cfg.mock_script};
    }
    jc.temperature = evaluation ? evaluation_temperature(cfg) : cfg.temperature;
    jc.max_retries = cfg.max_retries;
    jc.retry_backoff = std::chrono::milliseconds(cfg.retry_backoff_ms);
    jc.timeout = std::chrono::seconds(cfg.timeout_s);
    if (!cfg.no_cache) jc.cache_dir = cfg.cache.empty() ? cfg.out / "cache" : cfg.cache;
    jc.concurrency_limit = std::max<std::size_t>(cfg.jobs, 1);
    judge = std::make_unique<Judge>(std::move(jc));
    return *judge;
  }

  void write_summary(const std::string& status) {
    summary["subcommand"] = command;
    summary["run_id"] = cfg.run_id;
    summary["status"] = status;
    summary["config_fingerprint"] = cfg.fingerprint();
    if (judge) {
      summary["model_id"] = judge->model_id();
      summary["backend_calls"] = judge->stats().backend_calls;
      summary["cache_hits"] = judge->stats().cache_hits;
    }
    std::string name = command;
    std::replace(name.begin(), name.end(), ' ', '_');
    write(name + ".summary.json", summary.dump(2) + "\n");
  }

  json stamp(json record) const {
    record["config_fingerprint"] = cfg.fingerprint();
    if (judge) record["model_id"] = judge->model_id();
    return record;
  }
};

Corpus require_corpus(const RunConfig& c) {
  if (c.corpus.empty()) throw Error(ErrorCode::InvalidConfig, "--corpus is required");
  return load_corpus(c.corpus, c.stories.empty() ? std::nullopt : std::optional<fs::path>(c.stories));
}

std::vector<CandidateSet> load_all_candidates(const RunConfig& c, const Corpus& corpus) {
  std::vector<CandidateSet> all;
  for (const auto& path : c.candidates) {
    for (auto& set : load_candidates(path, corpus)) {
      auto same = std::find_if(all.begin(), all.end(),
                               [&](const CandidateSet& s) { return s.system_id == set.system_id; });
      if (same != all.end()) {
        throw Error(ErrorCode::DuplicateItem, "system '" + set.system_id + "' appears in more than one file");
      }
      all.push_back(std::move(set));
    }
  }
  return all;
}

struct LoadedQuestions {
  std::vector<VerseQuestion> questions;
  std::set<std::string> fingerprints;
};

LoadedQuestions load_questions(const fs::path& path, const Corpus* corpus) {
  LoadedQuestions out;
  std::set<std::string> ids;
  for_each_jsonl(path, [&](std::size_t line, const json& rec) {
    auto q = question_from_json(rec);
    if (!ids.insert(q.question_id).second) {
      throw Error(ErrorCode::DuplicateItem,
                  path.filename().string() + ":" + std::to_string(line) + ": duplicate question " + q.question_id);
    }
    if (corpus && !corpus->find(q.key)) {
      throw Error(ErrorCode::UnknownItem, path.filename().string() + ":" + std::to_string(line) +
                                              ": question on unknown item " + q.key.str());
    }
    if (auto f = rec.find("config_fingerprint"); f != rec.end() && f->is_string()) {
      out.fingerprints.insert(f->get<std::string>());
    }
    out.questions.push_back(std::move(q));
  });
  return out;
}

QuestionIndex index_questions(const std::vector<VerseQuestion>& questions) {
  QuestionIndex index;
  for (const auto& q : questions) index.emplace(q.question_id, q.key);
  return index;
}

fs::path questions_path(const Context& ctx) {
  return ctx.cfg.questions.empty() ? ctx.output("questions.jsonl") : ctx.cfg.questions;
}

/// Items selected by a sample manifest.
struct Selection {
  std::map<ItemKey, std::optional<std::string>> items;  // key -> system restriction
  std::set<std::string> question_ids;

  bool allows(const ItemKey& key, const std::string& system) const {
    auto it = items.find(key);
    return it != items.end() && (!it->second || *it->second == system);
  }
};

std::optional<Selection> load_selection(const RunConfig& c) {
  if (c.manifest.empty()) return std::nullopt;
  Selection sel;
  json j;
  try {
    j = json::parse(read_file(c.manifest));
    for (const auto& item : j.at("items")) {
      ItemKey key{item.at("story_id").get<std::string>(), item.at("index").get<std::size_t>()};
      std::optional<std::string> system;
      if (auto s = item.find("system_id"); s != item.end() && s->is_string()) system = s->get<std::string>();
      sel.items[key] = system;
      if (auto q = item.find("question_ids"); q != item.end()) {
        for (const auto& id : *q) sel.question_ids.insert(id.get<std::string>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, c.manifest.filename().string() + ": " + e.what());
  }
  return sel;
}

std::vector<CandidateSet> restrict_candidates(std::vector<CandidateSet> sets, const std::optional<Selection>& sel) {
  if (!sel) return sets;
  for (auto& set : sets) {
    std::erase_if(set.translations, [&](const auto& kv) { return !sel->allows(kv.first, set.system_id); });
  }
  return sets;
}

json failure_json(const std::string& system_id, const ItemKey& key, const std::string& code,
                  const std::string& message) {
  json j{{"story_id", key.story_id}, {"index", key.index}, {"error", code}, {"message", message}};
  if (!system_id.empty()) j["system_id"] = system_id;
  return j;
}

std::string stat_text(const Stat& s) { return s ? format_fixed(*s, 4) : "undefined"; }

// --- validate ------------------------------------------------------------------

void cmd_validate(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto systems = load_all_candidates(c, corpus);
  json report{{"stories", corpus.stories().size()}, {"paragraphs", corpus.paragraph_count()}};

  std::size_t untagged = 0;
  for (const auto* p : corpus.pairs()) untagged += p->has_dialogue ? 0 : 1;
  report["untagged_dialogue"] = untagged;

  json cands = json::array();
  for (const auto& s : systems) {
    cands.push_back({{"system_id", s.system_id},
                     {"translations", s.translations.size()},
                     {"coverage", format_fixed(s.coverage(corpus), 4)}});
  }
  report["candidates"] = std::move(cands);

  std::optional<LoadedQuestions> bank;
  if (!c.questions.empty()) {
    bank = load_questions(c.questions, &corpus);
    std::size_t classified = 0;
    for (const auto& q : bank->questions) classified += q.category ? 1 : 0;
    report["questions"] = {{"total", bank->questions.size()}, {"classified", classified}};
  }
  const auto index = bank ? index_questions(bank->questions) : QuestionIndex{};

  json ann = json::array();
  for (const auto& path : c.annotations) {
    auto records = load_annotations(path, corpus, systems, bank ? &index : nullptr);
    std::set<std::string> raters;
    for (const auto& r : records) raters.insert(r.rater_id);
    ann.push_back({{"file", path.filename().string()}, {"records", records.size()}, {"raters", raters}});
  }
  report["annotations"] = std::move(ann);

  const auto rubric = load_rubric(rubric_path(c));
  report["rubric_fingerprint"] = rubric.fingerprint();
  if (!c.shots.empty()) report["shots"] = load_shot_bank(c.shots).examples().size();
  if (!c.grade_shots.empty()) report["grade_shots"] = parse_grade_shots(read_file(c.grade_shots)).size();
  prompt_options(c).validate();

  ctx.summary["report"] = report;
  ctx.out << report.dump(2) << "\n";
}

// --- sample --------------------------------------------------------------------

void cmd_sample(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto systems = load_all_candidates(c, corpus);
  std::vector<std::string> stories = c.sample_stories;
  if (stories.empty()) {
    for (const auto& s : corpus.stories()) stories.push_back(s.story_id);
  }
  std::optional<QuestionIndex> index;
  if (!c.questions.empty()) index = index_questions(load_questions(c.questions, &corpus).questions);
  const auto manifest = sample_items(corpus, stories, c.n_per_story, c.q_per_item, c.seed,
                                     index ? &*index : nullptr, systems);
  ctx.write("manifest.json", manifest.to_json().dump(2) + "\n");
  ctx.summary["items"] = manifest.items.size();
  ctx.summary["questions"] = manifest.question_count();
}

// --- translate -----------------------------------------------------------------

std::vector<std::string> read_story_list(const fs::path& path) {
  std::vector<std::string> ids;
  for (auto& line : split_lines(read_file(path))) {
    auto t = trim(line);
    if (!t.empty() && t.front() != '#') ids.push_back(std::move(t));
  }
  return ids;
}

void cmd_translate(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  TranslationPromptSpec spec;
  spec.n_shots = c.n_shots;
  spec.include_summary = !c.no_summary;
  if (c.granularity == "sentence") {
    spec.granularity = Granularity::Sentence;
  } else if (c.granularity != "paragraph") {
    throw Error(ErrorCode::InvalidConfig, "--granularity must be paragraph or sentence");
  }
  spec.require_dialogue_mix = !c.allow_unmixed_shots;
  spec.source_language = c.source_lang;
  spec.target_language = c.target_lang;
  if (spec.n_shots > 0) {
    spec.bank_story_ids =
        c.shot_stories.empty() ? read_story_list(fs::path(LTEVAL_DATA_DIR) / "translation_shot_stories.txt")
                               : c.shot_stories;
  }
  auto& judge = ctx.make_judge(false);
  auto run = translate_corpus(corpus, spec, judge, c.system_id.empty() ? judge.model_id() : c.system_id, c.jobs);

  std::vector<json> failures;
  for (const auto& [key, message] : run.failures) {
    failures.push_back(ctx.stamp(failure_json(run.candidates.system_id, key, "TranslationFailed", message)));
  }
  ctx.write("candidates." + run.candidates.system_id + ".jsonl", serialize_candidates(run.candidates));
  ctx.write("translate_failures.jsonl", to_jsonl(failures));
  ctx.summary["system_id"] = run.candidates.system_id;
  ctx.summary["translated"] = run.candidates.translations.size();
  ctx.summary["failed"] = run.failures.size();
}

// --- ruler ---------------------------------------------------------------------

void cmd_ruler(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto selection = load_selection(c);
  const auto systems = restrict_candidates(load_all_candidates(c, corpus), selection);
  if (systems.empty()) throw Error(ErrorCode::InvalidConfig, "--candidates is required");
  const auto options = prompt_options(c);
  options.validate();
  const auto rubric = load_rubric(rubric_path(c));
  ShotBank shots;
  if (options.k_shot > 0) {
    if (c.shots.empty()) throw Error(ErrorCode::InsufficientShots, "--k-shot > 0 needs --shots");
    shots = load_shot_bank(c.shots);
  }
  auto& judge = ctx.make_judge(true);

  std::vector<RubricScorecard> cards;
  std::vector<json> records, failures;
  std::size_t attempted = 0;
  for (const auto& set : systems) {
    auto run = score_candidate(corpus, set, rubric, options, judge, shots, c.jobs);
    attempted += run.attempted;
    for (auto& card : run.scorecards) {
      records.push_back(ctx.stamp(scorecard_to_json(card, options.use_cot)));
      cards.push_back(std::move(card));
    }
    for (const auto& f : run.failures) {
      failures.push_back(ctx.stamp(failure_json(f.system_id, f.key, f.error_code, f.message)));
    }
  }
  const auto audit = audit_honorifics(corpus, cards);
  ctx.write("ruler.jsonl", to_jsonl(records));
  ctx.write("ruler_failures.jsonl", to_jsonl(failures));
  ctx.write("honorifics_audit.json", audit.to_json().dump(2) + "\n");
  ctx.summary["attempted"] = attempted;
  ctx.summary["scored"] = records.size();
  ctx.summary["failed"] = failures.size();
  ctx.summary["honorifics_violations"] = audit.violations.size();
  ctx.summary["options_fingerprint"] = options.fingerprint();
}

// --- verse ---------------------------------------------------------------------

std::vector<json> question_records(const Context& ctx, const std::vector<VerseQuestion>& questions) {
  std::vector<json> out;
  out.reserve(questions.size());
  for (const auto& q : questions) out.push_back(ctx.stamp(question_to_json(q)));
  return out;
}

void cmd_verse_gen(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto selection = load_selection(c);
  std::vector<const ParagraphPair*> pairs;
  for (const auto* p : corpus.pairs()) {
    if (!selection || selection->items.count(p->key())) pairs.push_back(p);
  }
  auto& judge = ctx.make_judge(true);

  std::vector<std::optional<GenerationResult>> results(pairs.size());
  std::vector<std::optional<std::pair<std::string, std::string>>> errors(pairs.size());
  parallel_for(pairs.size(), c.jobs, [&](std::size_t i) {
    try {
      const auto& summary = corpus.find_story(pairs[i]->story_id)->summary;
      results[i] = generate_questions(*pairs[i], summary, c.n_questions, judge, c.source_lang);
    } catch (const Error& e) {
      errors[i] = {std::string(to_string(e.code())), e.what()};
    }
  });

  std::vector<VerseQuestion> questions;
  std::vector<json> failures;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (results[i]) {
      for (auto& q : results[i]->questions) questions.push_back(std::move(q));
    } else {
      failures.push_back(ctx.stamp(failure_json("", pairs[i]->key(), errors[i]->first, errors[i]->second)));
    }
  }
  ctx.write("questions.jsonl", to_jsonl(question_records(ctx, questions)));
  ctx.write("gen_failures.jsonl", to_jsonl(failures));
  ctx.summary["paragraphs"] = pairs.size();
  ctx.summary["questions"] = questions.size();
  ctx.summary["failed"] = failures.size();
}

void cmd_verse_classify(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  auto loaded = load_questions(questions_path(ctx), &corpus);
  auto& questions = loaded.questions;
  auto& judge = ctx.make_judge(true);

  std::vector<std::optional<std::pair<std::string, std::string>>> errors(questions.size());
  parallel_for(questions.size(), c.jobs, [&](std::size_t i) {
    if (questions[i].category) return;
    try {
      questions[i].category = classify_question(questions[i], judge);
    } catch (const Error& e) {
      errors[i] = {std::string(to_string(e.code())), e.what()};
    }
  });

  std::vector<VerseQuestion> kept;
  std::vector<json> failures;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (questions[i].category) {
      kept.push_back(std::move(questions[i]));
    } else {
      auto f = failure_json("", questions[i].key, errors[i]->first, errors[i]->second);
      f["question_id"] = questions[i].question_id;
      f["text"] = questions[i].text;
      failures.push_back(ctx.stamp(std::move(f)));
    }
  }
  ctx.write("questions.jsonl", to_jsonl(question_records(ctx, kept)));
  ctx.write("classify_failures.jsonl", to_jsonl(failures));
  std::array<std::size_t, kCategoryCount> counts{};
  for (const auto& q : kept) ++counts[static_cast<std::size_t>(*q.category)];
  json by_cat = json::object();
  for (auto cat : kCategories) by_cat[std::string(category_label(cat))] = counts[static_cast<std::size_t>(cat)];
  ctx.summary["classified"] = kept.size();
  ctx.summary["failed"] = failures.size();
  ctx.summary["categories"] = std::move(by_cat);
}

void cmd_verse_grade(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto selection = load_selection(c);
  const auto systems = restrict_candidates(load_all_candidates(c, corpus), selection);
  if (systems.empty()) throw Error(ErrorCode::InvalidConfig, "--candidates is required");
  const auto loaded = load_questions(questions_path(ctx), &corpus);
  const auto options = grade_options(c);
  std::vector<GradeShot> shots;
  if (options.k_shot > 0) {
    if (c.grade_shots.empty()) throw Error(ErrorCode::InsufficientShots, "--verse-k-shot > 0 needs --grade-shots");
    shots = parse_grade_shots(read_file(c.grade_shots));
  }
  auto& judge = ctx.make_judge(true);

  struct Task {
    const CandidateSet* set;
    const VerseQuestion* question;
  };
  std::vector<Task> tasks;
  for (const auto& set : systems) {
    for (const auto& q : loaded.questions) {
      if (selection && !selection->question_ids.empty() && !selection->question_ids.count(q.question_id)) continue;
      if (set.find(q.key)) tasks.push_back({&set, &q});
    }
  }

  std::vector<std::optional<VerseGrade>> grades(tasks.size());
  std::vector<std::optional<std::pair<std::string, std::string>>> errors(tasks.size());
  parallel_for(tasks.size(), c.jobs, [&](std::size_t i) {
    const auto& [set, q] = tasks[i];
    try {
      const auto& pair = corpus.at(q->key);
      grades[i] = grade_question(*q, pair, *set->find(q->key), set->system_id,
                                 corpus.find_story(q->key.story_id)->summary, options, judge, shots);
    } catch (const Error& e) {
      errors[i] = {std::string(to_string(e.code())), e.what()};
    }
  });

  std::vector<json> records, failures;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (grades[i]) {
      records.push_back(ctx.stamp(grade_to_json(*grades[i], options.use_cot)));
    } else {
      auto f = failure_json(tasks[i].set->system_id, tasks[i].question->key, errors[i]->first, errors[i]->second);
      f["question_id"] = tasks[i].question->question_id;
      failures.push_back(ctx.stamp(std::move(f)));
    }
  }
  ctx.write("grades.jsonl", to_jsonl(records));
  ctx.write("grade_failures.jsonl", to_jsonl(failures));
  ctx.summary["attempted"] = tasks.size();
  ctx.summary["graded"] = records.size();
  ctx.summary["failed"] = failures.size();
  ctx.summary["options_fingerprint"] = options.fingerprint();
}

// --- agree ---------------------------------------------------------------------

struct ChannelRatings {
  std::vector<RatingVector> humans;
  std::vector<RatingVector> judges;
};

RatingVector& rater_slot(std::vector<RatingVector>& raters, const std::string& id) {
  auto it = std::find_if(raters.begin(), raters.end(), [&](const RatingVector& r) { return r.rater == id; });
  if (it != raters.end()) return *it;
  raters.push_back(RatingVector{id, {}, {}});
  return raters.back();
}

std::vector<int> label_set(Channel ch) {
  return ch == Channel::Verse ? std::vector<int>{1, 2, 3} : std::vector<int>{1, 2, 3, 4, 5};
}

struct LabelPairs {
  std::vector<int> gold, pred;
};

LabelPairs common_labels(const RatingVector& a, const RatingVector& b) {
  const auto common = common_items(a, b);
  LabelPairs out;
  for (std::size_t i = 0; i < common.ids.size(); ++i) {
    out.gold.push_back(static_cast<int>(common.a[i]));
    out.pred.push_back(static_cast<int>(common.b[i]));
  }
  return out;
}

/// Mean per-label F1 and accuracy over the given (gold, pred) rater pairs.
struct LabelSummary {
  std::vector<Stat> f1;
  Stat accuracy;
};

LabelSummary summarize_labels(const std::vector<std::pair<const RatingVector*, const RatingVector*>>& pairs,
                              const std::vector<int>& labels) {
  std::vector<double> f1_sum(labels.size(), 0.0), acc;
  std::vector<std::size_t> f1_n(labels.size(), 0);
  for (const auto& [g, p] : pairs) {
    const auto lp = common_labels(*g, *p);
    if (lp.gold.empty()) continue;
    const auto rep = per_label_prf(lp.gold, lp.pred, labels);
    acc.push_back(rep.accuracy);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (rep.per_label[i].f1_undefined) continue;
      f1_sum[i] += rep.per_label[i].f1;
      ++f1_n[i];
    }
  }
  LabelSummary s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s.f1.push_back(f1_n[i] ? Stat(f1_sum[i] / static_cast<double>(f1_n[i])) : std::nullopt);
  }
  if (!acc.empty()) {
    double sum = 0;
    for (double a : acc) sum += a;
    s.accuracy = sum / static_cast<double>(acc.size());
  }
  return s;
}

json stat_json(const Stat& s) { return s ? json(*s) : json("undefined"); }

void cmd_agree(Context& ctx) {
  const auto& c = ctx.cfg;
  const auto corpus = require_corpus(c);
  const auto systems = load_all_candidates(c, corpus);
  const auto level = parse_alpha_level(c.alpha_level);
  TauVariant tau;
  if (c.tau_variant == "b") {
    tau = TauVariant::B;
  } else if (c.tau_variant == "a") {
    tau = TauVariant::A;
  } else {
    throw Error(ErrorCode::InvalidConfig, "--tau-variant must be a or b");
  }
  if (c.annotations.empty()) throw Error(ErrorCode::InvalidConfig, "--annotations is required");

  std::optional<LoadedQuestions> bank;
  const fs::path qpath = questions_path(ctx);
  if (!c.questions.empty() || fs::exists(qpath)) bank = load_questions(qpath, &corpus);
  const auto index = bank ? index_questions(bank->questions) : QuestionIndex{};
  const QuestionIndex* qindex = bank ? &index : nullptr;

  std::map<Channel, ChannelRatings> channels;
  for (const auto& path : c.annotations) {
    for (const auto& r : load_annotations(path, corpus, systems, qindex)) {
      rater_slot(channels[r.channel].humans, r.rater_id).add(r.item_id(), r.score);
    }
  }
  for (const auto& path : c.judge_annotations) {
    for (const auto& r : load_annotations(path, corpus, systems, qindex)) {
      rater_slot(channels[r.channel].judges, r.rater_id).add(r.item_id(), r.score);
    }
  }
  if (!c.scorecards.empty()) {
    for_each_jsonl(c.scorecards, [&](std::size_t, const json& rec) {
      const auto card = scorecard_from_json(rec);
      const std::string rater = rec.value("model_id", std::string("judge"));
      AnnotationRecord probe;
      probe.story_id = card.key.story_id;
      probe.index = card.key.index;
      probe.system_id = card.system_id;
      for (auto crit : kCriteria) {
        rater_slot(channels[to_channel(crit)].judges, rater).add(probe.item_id(), card.score(crit));
      }
    });
  }
  if (!c.grades.empty()) {
    for_each_jsonl(c.grades, [&](std::size_t, const json& rec) {
      const auto g = grade_from_json(rec);
      const std::string rater = rec.value("model_id", std::string("judge"));
      rater_slot(channels[Channel::Verse].judges, rater).add(g.question_id + "|" + g.system_id, g.score);
    });
  }

  std::string agreement_csv = "channel,tau,rho,mse,alpha,n_items,n_raters,skipped_pairs\n";
  std::string judge_csv = "channel,judge,tau,rho,mse,n_pairs\n";
  std::string f1_csv = "channel,label,support,human_f1,judge_f1\n";
  std::string acc_csv = "channel,human_accuracy,judge_accuracy\n";
  json all = json::object();

  for (auto ch : kAllChannels) {
    auto it = channels.find(ch);
    if (it == channels.end() || it->second.humans.empty()) continue;
    const auto& [humans, judges] = it->second;
    const std::string name(to_string(ch));
    json channel_json{{"alpha_level", to_string(level)}, {"tau_variant", c.tau_variant}};

    if (humans.size() >= 2) {
      const auto rep = agreement_report(humans, level, tau);
      channel_json["human"] = rep.to_json();
      agreement_csv += name + "," + stat_text(rep.tau) + "," + stat_text(rep.rho) + "," + stat_text(rep.mse) + "," +
                       stat_text(rep.alpha) + "," + std::to_string(rep.n_items) + "," +
                       std::to_string(rep.n_raters) + "," + std::to_string(rep.skipped_pairs) + "\n";
    }

    const PairMetric tau_fn = [tau](std::span<const double> x, std::span<const double> y) {
      return tau == TauVariant::B ? kendall_tau_b(x, y) : kendall_tau_a(x, y);
    };
    const PairMetric rho_fn = [](std::span<const double> x, std::span<const double> y) { return spearman_rho(x, y); };
    const PairMetric mse_fn = [](std::span<const double> x, std::span<const double> y) -> Stat { return mse(x, y); };

    json judge_json = json::array();
    for (const auto& j : judges) {
      const std::vector<RatingVector> one{j};
      const auto t = cross_agreement(humans, one, tau_fn);
      const auto r = cross_agreement(humans, one, rho_fn);
      const auto m = cross_agreement(humans, one, mse_fn);
      judge_json.push_back({{"judge", j.rater},
                            {"tau", stat_json(t.mean)},
                            {"rho", stat_json(r.mean)},
                            {"mse", stat_json(m.mean)},
                            {"n_pairs", t.pairs.size()}});
      judge_csv += name + "," + csv_escape(j.rater) + "," + stat_text(t.mean) + "," + stat_text(r.mean) + "," +
                   stat_text(m.mean) + "," + std::to_string(t.pairs.size()) + "\n";
    }
    channel_json["judges"] = std::move(judge_json);

    const auto labels = label_set(ch);
    std::vector<std::pair<const RatingVector*, const RatingVector*>> human_pairs, judge_pairs;
    for (std::size_t a = 0; a < humans.size(); ++a) {
      for (std::size_t b = a + 1; b < humans.size(); ++b) human_pairs.emplace_back(&humans[a], &humans[b]);
      for (const auto& j : judges) judge_pairs.emplace_back(&humans[a], &j);
    }
    const auto hs = summarize_labels(human_pairs, labels);
    const auto js = summarize_labels(judge_pairs, labels);
    std::vector<double> support(labels.size(), 0.0);
    for (const auto& h : humans) {
      for (const auto& s : h.scores) {
        if (s) support[static_cast<std::size_t>(*s) - static_cast<std::size_t>(labels.front())] += 1.0;
      }
    }
    json label_json = json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double sup = support[i] / static_cast<double>(humans.size());
      label_json.push_back({{"label", labels[i]},
                            {"support", sup},
                            {"human_f1", stat_json(hs.f1[i])},
                            {"judge_f1", judges.empty() ? json(nullptr) : stat_json(js.f1[i])}});
      f1_csv += name + "," + std::to_string(labels[i]) + "," + format_fixed(sup, 2) + "," + stat_text(hs.f1[i]) +
                "," + (judges.empty() ? std::string() : stat_text(js.f1[i])) + "\n";
    }
    channel_json["labels"] = std::move(label_json);
    channel_json["human_accuracy"] = stat_json(hs.accuracy);
    channel_json["judge_accuracy"] = judges.empty() ? json(nullptr) : stat_json(js.accuracy);
    acc_csv += name + "," + stat_text(hs.accuracy) + "," + (judges.empty() ? std::string() : stat_text(js.accuracy)) +
               "\n";

    if (!judge_pairs.empty()) {
      LabelPairs pooled;
      for (const auto& [g, p] : judge_pairs) {
        auto lp = common_labels(*g, *p);
        pooled.gold.insert(pooled.gold.end(), lp.gold.begin(), lp.gold.end());
        pooled.pred.insert(pooled.pred.end(), lp.pred.begin(), lp.pred.end());
      }
      if (!pooled.gold.empty()) {
        const auto rep = per_label_prf(pooled.gold, pooled.pred, labels);
        ctx.write("confusion." + name + ".csv", confusion_csv(rep, true));
        channel_json["pooled_judge_vs_human"] = rep.to_json();
      }
    }
    ctx.write("agreement." + name + ".json", channel_json.dump(2) + "\n");
    all[name] = std::move(channel_json);
  }
  if (all.empty()) throw Error(ErrorCode::EmptyInput, "no human annotations to compare");

  if (!c.category_gold.empty()) {
    if (!bank) throw Error(ErrorCode::InvalidConfig, "--category-gold needs a question bank");
    std::map<std::string, const VerseQuestion*> by_id;
    for (const auto& q : bank->questions) by_id[q.question_id] = &q;
    std::vector<std::string> gold, pred, label_names;
    for (auto cat : kCategories) label_names.emplace_back(category_label(cat));
    for_each_jsonl(c.category_gold, [&](std::size_t line, const json& rec) {
      const auto id = rec.at("question_id").get<std::string>();
      const auto label = rec.at("category").get<std::string>();
      const auto g = match_category(label);
      if (!g) {
        throw Error(ErrorCode::UnmappableCategory, c.category_gold.filename().string() + ":" +
                                                       std::to_string(line) + ": unknown category '" + label + "'");
      }
      auto q = by_id.find(id);
      if (q == by_id.end()) throw Error(ErrorCode::UnknownItem, "gold label for unknown question " + id);
      if (!q->second->category) throw Error(ErrorCode::UnclassifiedQuestion, "question " + id + " is unclassified");
      gold.emplace_back(category_label(*g));
      pred.emplace_back(category_label(*q->second->category));
    });
    const auto rep = per_label_prf(gold, pred, label_names);
    ctx.write("category_classification.json", rep.to_json().dump(2) + "\n");
    ctx.write("confusion.category.csv", confusion_csv(rep, true));
    all["category_classification"] = rep.to_json();
  }

  ctx.write("agreement.csv", agreement_csv);
  ctx.write("judge_agreement.csv", judge_csv);
  ctx.write("label_f1.csv", f1_csv);
  ctx.write("label_accuracy.csv", acc_csv);
  ctx.summary["channels"] = all.size();
}

// --- report --------------------------------------------------------------------

fs::path existing_or(const fs::path& explicit_path, const fs::path& fallback) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::exists(fallback) ? fallback : fs::path();
}

std::map<std::string, std::size_t> count_failures(const fs::path& path, std::set<std::string>& fingerprints) {
  std::map<std::string, std::size_t> counts;
  if (path.empty() || !fs::exists(path)) return counts;
  for_each_jsonl(path, [&](std::size_t, const json& rec) {
    ++counts[rec.value("system_id", std::string())];
    if (auto f = rec.find("config_fingerprint"); f != rec.end()) fingerprints.insert(f->get<std::string>());
  });
  return counts;
}

std::vector<std::string> short_axes() {
  std::vector<std::string> axes;
  for (auto cat : kCategories) axes.emplace_back(category_short(cat));
  return axes;
}

void cmd_report(Context& ctx) {
  const auto& c = ctx.cfg;
  PercentMapping mapping;
  if (c.percent_mapping == "min-max") {
    mapping = PercentMapping::MinMax;
  } else if (c.percent_mapping == "over-max") {
    mapping = PercentMapping::OverMax;
  } else {
    throw Error(ErrorCode::InvalidConfig, "--percent-mapping must be min-max or over-max");
  }

  std::set<std::string> fingerprints;
  auto note = [&](const json& rec) {
    if (auto f = rec.find("config_fingerprint"); f != rec.end() && f->is_string()) {
      fingerprints.insert(f->get<std::string>());
    }
  };
  std::vector<RubricScorecard> cards;
  if (const auto p = existing_or(c.scorecards, ctx.output("ruler.jsonl")); !p.empty()) {
    for_each_jsonl(p, [&](std::size_t, const json& rec) {
      cards.push_back(scorecard_from_json(rec));
      note(rec);
    });
  }
  std::vector<VerseGrade> grades;
  if (const auto p = existing_or(c.grades, ctx.output("grades.jsonl")); !p.empty()) {
    for_each_jsonl(p, [&](std::size_t, const json& rec) {
      grades.push_back(grade_from_json(rec));
      note(rec);
    });
  }
  std::vector<VerseQuestion> questions;
  if (const auto p = existing_or(c.questions, ctx.output("questions.jsonl")); !p.empty()) {
    auto loaded = load_questions(p, nullptr);
    questions = std::move(loaded.questions);
    fingerprints.insert(loaded.fingerprints.begin(), loaded.fingerprints.end());
  }
  FailureCounts failures;
  failures.ruler = count_failures(ctx.output("ruler_failures.jsonl"), fingerprints);
  failures.verse = count_failures(ctx.output("grade_failures.jsonl"), fingerprints);
  if (fingerprints.size() > 1) {
    std::string list;
    for (const auto& f : fingerprints) list += (list.empty() ? "" : ", ") + f;
    throw Error(ErrorCode::MixedFingerprint, "inputs come from different configurations: " + list);
  }

  auto table = aggregate_table(cards, grades, questions, mapping, failures);
  if (!c.baseline_csv.empty()) attach_baselines(table, parse_baseline_csv(read_file(c.baseline_csv)));
  ctx.write("table.csv", table.to_csv());

  // Question shares per story and overall.
  std::vector<std::string> story_order;
  for (const auto& q : questions) {
    if (std::find(story_order.begin(), story_order.end(), q.key.story_id) == story_order.end()) {
      story_order.push_back(q.key.story_id);
    }
  }
  std::string shares_csv = "story_id,category,n_questions,share_percent\n";
  json shares = json::object();
  std::vector<RadarSeries> share_series;
  auto add_shares = [&](const std::string& label, const std::vector<VerseQuestion>& subset) {
    std::vector<VerseQuestion> classified;
    for (const auto& q : subset) {
      if (q.category) classified.push_back(q);
    }
    if (classified.empty()) return;
    const auto agg = aggregate_categories(classified, {});
    RadarSeries series{label, {}};
    json j = json::object();
    for (const auto& a : agg) {
      const std::string cat(category_label(a.category));
      shares_csv += csv_escape(label) + "," + csv_escape(cat) + "," + std::to_string(a.n_questions) + "," +
                    format_fixed(a.question_share, 2) + "\n";
      j[cat] = {{"n_questions", a.n_questions}, {"share_percent", a.question_share}};
      series.values.push_back(a.question_share);
    }
    shares[label] = std::move(j);
    share_series.push_back(std::move(series));
  };
  for (const auto& story : story_order) {
    std::vector<VerseQuestion> subset;
    for (const auto& q : questions) {
      if (q.key.story_id == story) subset.push_back(q);
    }
    add_shares(story, subset);
  }
  const auto per_story_series = share_series;
  add_shares("all", questions);
  ctx.write("category_shares.csv", shares_csv);

  json radar_warnings = json::array();
  auto emit_radar = [&](const std::string& suffix, const std::vector<RadarSeries>& series, const RadarOptions& opt) {
    if (series.empty()) return;
    const auto chart = radar_svg(short_axes(), series, opt);
    for (const auto& w : chart.warnings) {
      warn(suffix + ": " + w);
      radar_warnings.push_back(suffix + ": " + w);
    }
    ctx.write(suffix, chart.svg);
  };

  auto verse_series = [&](const AggregateTable& t, const std::string& label) {
    std::vector<RadarSeries> out;
    for (const auto& row : t.rows) {
      if (row.verse_mean.n == 0) continue;
      RadarSeries s{row.system_id, {}};
      for (std::size_t i = 0; i < kCategoryCount; ++i) {
        if (row.verse[i].percent) {
          s.values.push_back(*row.verse[i].percent);
        } else {
          s.values.push_back(c.radar_axis_min);
          radar_warnings.push_back(label + ": " + row.system_id + " has no grades for " +
                                   std::string(category_short(kCategories[i])));
        }
      }
      out.push_back(std::move(s));
    }
    return out;
  };

  if (!grades.empty()) {
    emit_radar("radar.verse.svg", verse_series(table, "all"),
               RadarOptions{"Verification score by category", c.radar_axis_min, 4});
    std::map<std::string, std::string> story_of;
    for (const auto& q : questions) story_of[q.question_id] = q.key.story_id;
    for (const auto& story : story_order) {
      std::vector<VerseGrade> subset;
      for (const auto& g : grades) {
        if (story_of[g.question_id] == story) subset.push_back(g);
      }
      if (subset.empty()) continue;
      const auto t = aggregate_table({}, subset, questions, mapping);
      emit_radar("radar.verse." + story + ".svg", verse_series(t, story),
                 RadarOptions{"Verification score by category: " + story, c.radar_axis_min, 4});
    }
  }
  emit_radar("radar.shares.svg", per_story_series, RadarOptions{"Question share by category", 0.0, 4});

  json bundle{{"config", c.to_json()},
              {"input_fingerprint", fingerprints.empty() ? json(nullptr) : json(*fingerprints.begin())},
              {"table", table.to_json()},
              {"category_shares", std::move(shares)},
              {"radar_warnings", radar_warnings},
              {"counts", {{"scorecards", cards.size()}, {"grades", grades.size()}, {"questions", questions.size()}}}};
  ctx.write("bundle.json", bundle.dump(2) + "\n");
  ctx.summary["systems"] = table.rows.size();
}

}  // namespace

// --- RunConfig -----------------------------------------------------------------

json RunConfig::to_json() const {
  return json{
      {"corpus", corpus.string()},
      {"stories", stories.string()},
      {"candidates", paths_json(candidates)},
      {"annotations", paths_json(annotations)},
      {"judge_annotations", paths_json(judge_annotations)},
      {"rubric", rubric_path(*this).string()},
      {"shots", shots.string()},
      {"grade_shots", grade_shots.string()},
      {"questions", questions.string()},
      {"scorecards", scorecards.string()},
      {"grades", grades.string()},
      {"manifest", manifest.string()},
      {"baseline_csv", baseline_csv.string()},
      {"category_gold", category_gold.string()},
      {"backend", backend},
      {"mock_script", mock_script.string()},
      {"endpoint", endpoint},
      {"model", model},
      {"api_key_env", api_key_env},
      {"temperature", temperature ? json(*temperature) : json(nullptr)},
      {"max_retries", max_retries},
      {"retry_backoff_ms", retry_backoff_ms},
      {"timeout", timeout_s},
      {"cache", cache.string()},
      {"no_cache", no_cache},
      {"k_shot", k_shot},
      {"cot", cot},
      {"no_rubric", no_rubric},
      {"no_reference", no_reference},
      {"reference_index", reference_index},
      {"verse_reference", verse_reference},
      {"no_verse_summary", no_verse_summary},
      {"verse_k_shot", verse_k_shot},
      {"n_questions", n_questions},
      {"source_lang", source_lang},
      {"target_lang", target_lang},
      {"seed", seed},
      {"jobs", jobs},
      {"out", out.string()},
      {"run_id", run_id},
      {"sample_stories", sample_stories},
      {"n_per_story", n_per_story},
      {"q_per_item", q_per_item},
      {"alpha_level", alpha_level},
      {"tau_variant", tau_variant},
      {"percent_mapping", percent_mapping},
      {"radar_axis_min", radar_axis_min},
      {"system_id", system_id},
      {"shot_stories", shot_stories},
      {"n_shots", n_shots},
      {"no_summary", no_summary},
      {"granularity", granularity},
      {"allow_unmixed_shots", allow_unmixed_shots},
  };
}

std::string RunConfig::fingerprint() const {
  return lteval::fingerprint(json{{"backend", backend},
                                  {"model", model},
                                  {"temperature", *evaluation_temperature(*this)},
                                  {"ruler", prompt_options(*this).to_json()},
                                  {"verse", grade_options(*this).to_json()},
                                  {"n_questions", n_questions},
                                  {"rubric", file_sha(rubric_path(*this))},
                                  {"shots", file_sha(shots)},
                                  {"grade_shots", file_sha(grade_shots)}});
}

// --- Entry point ---------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  double temperature = 0.0;

  CLI::App app{"Literary translation evaluation toolkit"};
  app.name("lteval");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with flag values; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  app.add_option("--corpus", cfg.corpus, "Paragraph-pair corpus (JSONL)");
  app.add_option("--stories", cfg.stories, "Story metadata (JSONL)");
  app.add_option("--candidates", cfg.candidates, "Candidate translation files (JSONL)");
  app.add_option("--annotations", cfg.annotations, "Human annotation files (JSONL)");
  app.add_option("--judge-annotations", cfg.judge_annotations, "Model ratings in annotation format");
  app.add_option("--rubric", cfg.rubric, "Rubric file (JSONL); defaults to the bundled English rubric");
  app.add_option("--shots", cfg.shots, "Few-shot bank for rubric scoring");
  app.add_option("--grade-shots", cfg.grade_shots, "Few-shot bank for question grading");
  app.add_option("--questions", cfg.questions, "Question bank; defaults to <out>/<run-id>.questions.jsonl");
  app.add_option("--scorecards", cfg.scorecards, "Rubric scorecards; defaults to <out>/<run-id>.ruler.jsonl");
  app.add_option("--grades", cfg.grades, "Question grades; defaults to <out>/<run-id>.grades.jsonl");
  app.add_option("--manifest", cfg.manifest, "Restrict evaluation to a sample manifest");
  app.add_option("--baseline-csv", cfg.baseline_csv, "Extra metric columns keyed by system_id");
  app.add_option("--category-gold", cfg.category_gold, "Gold question categories (JSONL)");

  app.add_option("--backend", cfg.backend, "Judge backend")->check(CLI::IsMember({"live", "mock"}));
  app.add_option("--mock-script", cfg.mock_script, "Mock backend script (JSON)");
  app.add_option("--endpoint", cfg.endpoint, "Chat-completions URL for the live backend");
  app.add_option("--model", cfg.model, "Model id for the live backend");
  app.add_option("--api-key-env", cfg.api_key_env, "Environment variable holding the API key");
  auto* temp_opt = app.add_option("--temperature", temperature,
                                  "Sampling temperature (evaluation default 0.0; translation default: backend's)");
  app.add_option("--max-retries", cfg.max_retries)->check(CLI::NonNegativeNumber);
  app.add_option("--retry-backoff-ms", cfg.retry_backoff_ms)->check(CLI::NonNegativeNumber);
  app.add_option("--timeout", cfg.timeout_s, "Request timeout in seconds")->check(CLI::PositiveNumber);
  app.add_option("--cache", cfg.cache, "Response cache directory; defaults to <out>/cache");
  app.add_flag("--no-cache", cfg.no_cache);

  app.add_option("--k-shot", cfg.k_shot, "Worked examples per rubric prompt")
      ->check(CLI::IsMember({0, 5, 10, 15, 20}));
  app.add_flag("--cot", cfg.cot, "Ask for a rationale before the score");
  app.add_flag("--no-rubric", cfg.no_rubric, "Omit the rubric section");
  app.add_flag("--no-reference", cfg.no_reference, "Omit the reference translation from rubric prompts");
  app.add_option("--reference-index", cfg.reference_index);
  app.add_flag("--verse-reference", cfg.verse_reference, "Show the reference when grading questions");
  app.add_flag("--no-verse-summary", cfg.no_verse_summary, "Omit the story summary when grading questions");
  app.add_option("--verse-k-shot", cfg.verse_k_shot, "Worked examples per grading prompt")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--n-questions", cfg.n_questions, "Questions requested per paragraph")->check(CLI::PositiveNumber);
  app.add_option("--source-lang", cfg.source_lang);
  app.add_option("--target-lang", cfg.target_lang);

  app.add_option("--seed", cfg.seed);
  app.add_option("--jobs", cfg.jobs, "Concurrent judge requests")->check(CLI::PositiveNumber);
  app.add_option("--out", cfg.out, "Output directory");
  app.add_option("--run-id", cfg.run_id, "Prefix of every output file");

  app.add_option("--sample-stories", cfg.sample_stories, "Stories to sample from (default: all)");
  app.add_option("--n-per-story", cfg.n_per_story);
  app.add_option("--q-per-item", cfg.q_per_item);

  app.add_option("--alpha-level", cfg.alpha_level)->check(CLI::IsMember({"nominal", "ordinal", "interval"}));
  app.add_option("--tau-variant", cfg.tau_variant)->check(CLI::IsMember({"a", "b"}));
  app.add_option("--percent-mapping", cfg.percent_mapping)->check(CLI::IsMember({"min-max", "over-max"}));
  app.add_option("--radar-axis-min", cfg.radar_axis_min)->check(CLI::Range(0.0, 99.0));

  app.add_option("--system-id", cfg.system_id, "System id for generated candidates");
  app.add_option("--shot-stories", cfg.shot_stories, "Stories that supply translation examples");
  app.add_option("--n-shots", cfg.n_shots, "Translation examples per prompt");
  app.add_flag("--no-summary", cfg.no_summary, "Omit the story summary from translation prompts");
  app.add_option("--granularity", cfg.granularity)->check(CLI::IsMember({"paragraph", "sentence"}));
  app.add_flag("--allow-unmixed-shots", cfg.allow_unmixed_shots);

  auto* validate = app.add_subcommand("validate", "Check every input file and print a summary");
  auto* sample = app.add_subcommand("sample", "Write a seeded sample manifest");
  auto* translate = app.add_subcommand("translate", "Generate candidate translations");
  auto* ruler = app.add_subcommand("ruler", "Score candidates against the rubric");
  auto* verse = app.add_subcommand("verse", "Question generation, classification and grading");
  auto* gen = verse->add_subcommand("gen", "Generate verification questions");
  auto* classify = verse->add_subcommand("classify", "Assign each question a category");
  auto* grade = verse->add_subcommand("grade", "Grade candidates against the questions");
  auto* agree = app.add_subcommand("agree", "Inter-annotator and judge-human agreement");
  auto* report = app.add_subcommand("report", "Aggregate tables and radar charts");
  verse->require_subcommand(1);
  for (auto* sub : {validate, sample, translate, ruler, verse, gen, classify, grade, agree, report}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_json("Usage", e.what()) << "\n";
    return 2;
  }
  if (temp_opt->count() > 0) cfg.temperature = temperature;

  Context ctx{cfg, "", out, nullptr};
  std::function<void(Context&)> action;
  const std::vector<std::pair<CLI::App*, std::pair<const char*, void (*)(Context&)>>> table = {
      {validate, {"validate", cmd_validate}}, {sample, {"sample", cmd_sample}},
      {translate, {"translate", cmd_translate}}, {ruler, {"ruler", cmd_ruler}},
      {gen, {"verse gen", cmd_verse_gen}},       {classify, {"verse classify", cmd_verse_classify}},
      {grade, {"verse grade", cmd_verse_grade}}, {agree, {"agree", cmd_agree}},
      {report, {"report", cmd_report}}};
  for (const auto& [sub, entry] : table) {
    if (sub->parsed()) {
      ctx.command = entry.first;
      action = entry.second;
    }
  }

  try {
    action(ctx);
    ctx.write_summary(ctx.summary.value("failed", std::size_t{0}) > 0 ? "partial" : "ok");
    return 0;
  } catch (const Error& e) {
    err << error_json(to_string(e.code()), e.what()) << "\n";
    ctx.summary["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    err << error_json("Internal", e.what()) << "\n";
    ctx.summary["error"] = {{"code", "Internal"}, {"message", e.what()}};
  }
  try {
    ctx.write_summary("failed");
  } catch (const std::exception&) {
  }
  return 1;
}

}  // namespace lteval::cli
