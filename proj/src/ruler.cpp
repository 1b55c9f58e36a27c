#include "lteval/ruler.hpp"

#include <regex>
#include <set>

#include "lteval/error.hpp"

namespace lteval {

std::string_view criterion_key(Criterion c) noexcept {
  switch (c) {
    case Criterion::Honorifics: return "honorifics";
    case Criterion::LexicalChoice: return "lexical";
    case Criterion::SyntaxGrammar: return "syntax";
    case Criterion::ContentAccuracy: return "content";
  }
  return "?";
}

std::string_view criterion_title(Criterion c) noexcept {
  switch (c) {
    case Criterion::Honorifics: return "Honorifics";
    case Criterion::LexicalChoice: return "Lexical Choice";
    case Criterion::SyntaxGrammar: return "Syntax and Grammar";
    case Criterion::ContentAccuracy: return "Content Accuracy";
  }
  return "?";
}

Criterion parse_criterion(std::string_view key) {
  for (auto c : kCriteria) {
    if (iequals(key, criterion_key(c)) || iequals(key, criterion_title(c))) return c;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown criterion '" + std::string(key) + "'");
}

Channel to_channel(Criterion c) noexcept {
  switch (c) {
    case Criterion::Honorifics: return Channel::Honorifics;
    case Criterion::LexicalChoice: return Channel::Lexical;
    case Criterion::SyntaxGrammar: return Channel::Syntax;
    case Criterion::ContentAccuracy: return Channel::Content;
  }
  return Channel::Honorifics;
}

// --- Rubric ------------------------------------------------------------------------

RubricSet::RubricSet(std::array<std::optional<CriterionRubric>, 4> rubrics) : rubrics_(std::move(rubrics)) {
  for (auto c : kCriteria) {
    const auto& r = rubrics_[static_cast<std::size_t>(c)];
    if (!r) throw Error(ErrorCode::InvalidConfig, "rubric missing criterion " + std::string(criterion_key(c)));
    for (std::size_t s = 0; s < 5; ++s) {
      if (trim(r->levels[s]).empty()) {
        throw Error(ErrorCode::InvalidConfig, "rubric for " + std::string(criterion_key(c)) +
                                                  " lacks a descriptor for score " + std::to_string(s + 1));
      }
    }
  }
}

std::string RubricSet::render(Criterion c) const {
  const auto& r = at(c);
  std::string out = "## Rubric\n";
  if (!r.preamble.empty()) out += r.preamble + "\n";
  for (int s = 1; s <= 5; ++s) out += std::to_string(s) + ": " + r.levels[s - 1] + "\n";
  out.pop_back();
  return out;
}

std::string RubricSet::fingerprint() const {
  json j = json::object();
  for (auto c : kCriteria) {
    const auto& r = at(c);
    j[std::string(criterion_key(c))] = {{"preamble", r.preamble}, {"levels", r.levels}};
  }
  return lteval::fingerprint(j);
}

RubricSet parse_rubric(std::string_view jsonl) {
  std::array<std::optional<CriterionRubric>, 4> rubrics;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto at = "rubric:" + std::to_string(line_no) + ": ";
    json rec;
    try {
      rec = json::parse(line);
      auto c = parse_criterion(rec.at("criterion").get<std::string>());
      auto& slot = rubrics[static_cast<std::size_t>(c)];
      if (slot) throw Error(ErrorCode::InvalidConfig, at + "criterion listed twice");
      CriterionRubric r;
      r.preamble = rec.value("preamble", "");
      const auto& levels = rec.at("levels");
      for (int s = 1; s <= 5; ++s) {
        auto it = levels.find(std::to_string(s));
        if (it == levels.end()) {
          throw Error(ErrorCode::InvalidConfig, at + "missing level " + std::to_string(s));
        }
        r.levels[s - 1] = it->get<std::string>();
      }
      slot = std::move(r);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, at + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidConfig && std::string(e.what()).rfind("rubric:", 0) != 0) {
        throw Error(e.code(), at + e.what());
      }
      throw;
    }
  }
  return RubricSet(std::move(rubrics));
}

RubricSet load_rubric(const std::filesystem::path& path) { return parse_rubric(read_file(path)); }

// --- Options and shots ---------------------------------------------------------------

json PromptOptions::to_json() const {
  return json{{"use_cot", use_cot},
              {"k_shot", k_shot},
              {"include_reference", include_reference},
              {"include_rubric", include_rubric},
              {"reference_index", reference_index},
              {"source_language", source_language},
              {"target_language", target_language}};
}

std::string PromptOptions::fingerprint() const { return lteval::fingerprint(to_json()); }

void PromptOptions::validate() const {
  static const std::set<int> allowed{0, 5, 10, 15, 20};
  if (!allowed.count(k_shot)) {
    throw Error(ErrorCode::InvalidConfig, "k_shot must be one of 0, 5, 10, 15, 20 (got " + std::to_string(k_shot) + ")");
  }
}

std::vector<const ShotExample*> ShotBank::select(Criterion criterion, std::size_t k,
                                                 const std::string& exclude_story) const {
  std::vector<const ShotExample*> out;
  for (const auto& ex : examples_) {
    if (out.size() == k) break;
    if (ex.criterion == criterion && ex.story_id != exclude_story) out.push_back(&ex);
  }
  if (out.size() < k) {
    throw Error(ErrorCode::InsufficientShots, "few-shot bank has " + std::to_string(out.size()) + " examples for " +
                                                  std::string(criterion_key(criterion)) + " outside story '" +
                                                  exclude_story + "', need " + std::to_string(k));
  }
  return out;
}

ShotBank parse_shot_bank(std::string_view jsonl) {
  std::vector<ShotExample> examples;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      ShotExample ex;
      ex.story_id = rec.at("story_id").get<std::string>();
      ex.criterion = parse_criterion(rec.at("criterion").get<std::string>());
      ex.source_text = rec.at("source_text").get<std::string>();
      ex.reference_text = rec.value("reference_text", "");
      ex.candidate_text = rec.at("candidate_text").get<std::string>();
      ex.score = rec.at("score").get<int>();
      ex.rationale = rec.value("rationale", "");
      if (ex.score < 1 || ex.score > 5) throw Error(ErrorCode::OutOfRange, "shot score outside 1..5");
      examples.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "shot bank:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return ShotBank(std::move(examples));
}

ShotBank load_shot_bank(const std::filesystem::path& path) { return parse_shot_bank(read_file(path)); }

// --- Prompt ----------------------------------------------------------------------------

const char* const kRulerSystemText =
    "You are an expert literary translator and translation critic. You grade translations strictly "
    "according to the criterion and rubric you are given.";

JudgeRequest build_ruler_prompt(Criterion criterion, const ParagraphPair& pair, const std::string& candidate_text,
                                const RubricSet& rubric, const std::string& summary,
                                const PromptOptions& options, const ShotBank& shots) {
  options.validate();
  if (trim(candidate_text).empty()) {
    throw Error(ErrorCode::EmptyCandidate, "empty candidate for " + pair.key().str());
  }
  const auto& src = options.source_language;
  const auto& tgt = options.target_language;
  std::vector<std::string> sections;

  std::string framing = "You will evaluate a " + tgt + " translation of one paragraph from a " + src +
                        " literary work.\nCriterion: " + std::string(criterion_title(criterion)) +
                        "\nRate the translation on a scale of 1 (worst) to 5 (best) for this criterion only.";
  if (criterion == Criterion::Honorifics) {
    framing +=
        "\nHonorifics apply only where the paragraph has dialogue or other marking of speech register. "
        "Output 5 when the paragraph contains no dialogue or register marking.";
  }
  sections.push_back(std::move(framing));

  if (options.include_rubric) sections.push_back(rubric.render(criterion));

  sections.push_back("## Story summary\n" + (trim(summary).empty() ? std::string("(none provided)") : summary));

  if (options.k_shot > 0) {
    auto selected = shots.select(criterion, static_cast<std::size_t>(options.k_shot), pair.story_id);
    std::string block = "## Examples";
    for (std::size_t i = 0; i < selected.size(); ++i) {
      const auto& ex = *selected[i];
      block += "\n### Example " + std::to_string(i + 1) + "\nSource:\n" + ex.source_text + "\nTranslation:\n" +
               ex.candidate_text + "\nEvaluation:\n";
      if (!ex.rationale.empty()) block += ex.rationale + "\n";
      block += "Score: " + std::to_string(ex.score);
    }
    sections.push_back(std::move(block));
  }

  sections.push_back("## Source (" + src + ")\n" + pair.source_text);

  if (options.include_reference) {
    if (options.reference_index >= pair.references.size()) {
      throw Error(ErrorCode::InvalidConfig, pair.key().str() + " has no reference #" +
                                                std::to_string(options.reference_index));
    }
    sections.push_back("## Reference translation (" + tgt + ")\n" + pair.references[options.reference_index]);
  }

  sections.push_back("## Translation to evaluate (" + tgt + ")\n" + candidate_text);

  if (options.use_cot) {
    sections.push_back(
        "## Output format\nFirst explain your reasoning step by step. Then give the score on the last line "
        "in the form \"Score: N\" where N is an integer from 1 to 5.");
  } else {
    sections.push_back(
        "## Output format\nRespond with only the score, on a single line in the form \"Score: N\" where N is "
        "an integer from 1 to 5. Do not explain.");
  }

  std::string user;
  for (const auto& s : sections) {
    if (!user.empty()) user += "\n\n";
    user += s;
  }
  return JudgeRequest{kRulerSystemText, std::move(user), std::nullopt};
}

// --- Parsing ---------------------------------------------------------------------------

namespace {

const std::regex& score_line_re() {
  static const std::regex re(R"(^score\s*[:=]\s*(-?\d+)\s*(?:/\s*\d+)?\.?$)", std::regex::icase);
  return re;
}

std::string strip_markup(const std::string& line) {
  std::string out;
  for (char ch : line) {
    if (ch != '*' && ch != '_' && ch != '`' && ch != '#') out.push_back(ch);
  }
  return trim(out);
}

/// Index of the last score line, or npos.
std::size_t find_score_line(const std::vector<std::string>& lines, int& value) {
  for (std::size_t i = lines.size(); i-- > 0;) {
    std::smatch m;
    auto line = strip_markup(lines[i]);
    if (std::regex_match(line, m, score_line_re())) {
      try {
        value = std::stoi(m[1].str());
      } catch (const std::out_of_range&) {
        value = std::numeric_limits<int>::max();
      }
      return i;
    }
  }
  return std::string::npos;
}

}  // namespace

int parse_final_score(const std::string& response_text, int min_score, int max_score, bool use_cot) {
  if (trim(response_text).empty()) throw Error(ErrorCode::Unparsable, "empty response");
  auto lines = split_lines(response_text);
  int value = 0;
  if (find_score_line(lines, value) == std::string::npos) {
    static const std::regex bare(R"(^(-?\d+)\.?$)");
    std::smatch m;
    auto whole = strip_markup(response_text);
    if (use_cot || !std::regex_match(whole, m, bare)) {
      throw Error(ErrorCode::Unparsable, "no \"Score: N\" line in response");
    }
    value = std::stoi(m[1].str());
  }
  if (value < min_score || value > max_score) {
    throw Error(ErrorCode::OutOfRange, "OutOfRange(" + std::to_string(value) + ")");
  }
  return value;
}

int parse_likert_score(const std::string& response_text, bool use_cot) {
  return parse_final_score(response_text, 1, 5, use_cot);
}

std::string extract_rationale(const std::string& response_text) {
  auto lines = split_lines(response_text);
  int value = 0;
  auto pos = find_score_line(lines, value);
  if (pos == std::string::npos) return trim(response_text);
  std::string out;
  for (std::size_t i = 0; i < pos; ++i) out += lines[i] + "\n";
  return trim(out);
}

// --- Scoring ---------------------------------------------------------------------------

RulerRun score_candidate(const Corpus& corpus, const CandidateSet& candidates, const RubricSet& rubric,
                         const PromptOptions& options, Judge& judge, const ShotBank& shots, std::size_t jobs) {
  options.validate();
  std::vector<const ParagraphPair*> items;
  for (const auto* p : corpus.pairs()) {
    if (candidates.find(p->key())) items.push_back(p);
  }

  std::vector<std::optional<RubricScorecard>> cards(items.size());
  std::vector<std::optional<ItemFailure>> failures(items.size());
  parallel_for(items.size(), jobs, [&](std::size_t i) {
    const auto& pair = *items[i];
    const auto& text = *candidates.find(pair.key());
    const auto* story = corpus.find_story(pair.story_id);
    RubricScorecard card;
    card.system_id = candidates.system_id;
    card.key = pair.key();
    try {
      for (auto c : kCriteria) {
        const auto idx = static_cast<std::size_t>(c);
        auto request = build_ruler_prompt(c, pair, text, rubric, story->summary, options, shots);
        auto response = judge.complete(request);
        card.raw_responses[idx] = response.text;
        card.scores[idx] = parse_likert_score(response.text, options.use_cot);
        if (options.use_cot) card.rationales[idx] = extract_rationale(response.text);
      }
      cards[i] = std::move(card);
    } catch (const Error& e) {
      failures[i] = ItemFailure{candidates.system_id, pair.key(), std::string(to_string(e.code())), e.what()};
    } catch (const std::exception& e) {
      failures[i] = ItemFailure{candidates.system_id, pair.key(), "Error", e.what()};
    }
  });

  RulerRun run;
  run.attempted = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (cards[i]) run.scorecards.push_back(std::move(*cards[i]));
    if (failures[i]) run.failures.push_back(std::move(*failures[i]));
  }
  return run;
}

// --- Audit and serialization ---------------------------------------------------------

json HonorificsAudit::to_json() const {
  json v = json::array();
  for (const auto& e : violations) {
    v.push_back({{"system_id", e.system_id},
                 {"story_id", e.key.story_id},
                 {"index", e.key.index},
                 {"honorifics", e.honorifics_score}});
  }
  return json{{"checked", checked},
              {"untagged", untagged},
              {"compliant", violations.empty()},
              {"violations", std::move(v)}};
}

HonorificsAudit audit_honorifics(const Corpus& corpus, const std::vector<RubricScorecard>& scorecards) {
  HonorificsAudit audit;
  for (const auto& card : scorecards) {
    const auto* pair = corpus.find(card.key);
    if (!pair || !pair->has_dialogue) {
      ++audit.untagged;
      continue;
    }
    if (*pair->has_dialogue) continue;
    ++audit.checked;
    if (card.score(Criterion::Honorifics) != 5) {
      audit.violations.push_back({card.system_id, card.key, card.score(Criterion::Honorifics)});
    }
  }
  return audit;
}

json scorecard_to_json(const RubricScorecard& card, bool include_rationale) {
  json scores = json::object();
  json rationales = json::object();
  for (auto c : kCriteria) {
    const auto idx = static_cast<std::size_t>(c);
    scores[std::string(criterion_key(c))] = card.scores[idx];
    if (include_rationale) rationales[std::string(criterion_key(c))] = card.rationales[idx];
  }
  json j{{"system_id", card.system_id},
         {"story_id", card.key.story_id},
         {"index", card.key.index},
         {"scores", std::move(scores)}};
  if (include_rationale) j["rationales"] = std::move(rationales);
  return j;
}

RubricScorecard scorecard_from_json(const json& record) {
  RubricScorecard card;
  try {
    card.system_id = record.at("system_id").get<std::string>();
    card.key = {record.at("story_id").get<std::string>(), record.at("index").get<std::size_t>()};
    const auto& scores = record.at("scores");
    for (auto c : kCriteria) {
      const auto idx = static_cast<std::size_t>(c);
      card.scores[idx] = scores.at(std::string(criterion_key(c))).get<int>();
      if (card.scores[idx] < 1 || card.scores[idx] > 5) {
        throw Error(ErrorCode::OutOfRange, "scorecard score outside 1..5 for " + card.key.str());
      }
      if (auto r = record.find("rationales"); r != record.end()) {
        card.rationales[idx] = r->value(std::string(criterion_key(c)), "");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("scorecard: ") + e.what());
  }
  return card;
}

}  // namespace lteval
