#include "lteval/verse.hpp"

#include <map>
#include <regex>

#include "lteval/error.hpp"
#include "lteval/scale.hpp"

namespace lteval {

std::string_view category_label(Category c) noexcept {
  switch (c) {
    case Category::HistoricalCultural: return "Historical and Cultural Context";
    case Category::Imagery: return "Imagery and Descriptive Quality";
    case Category::CharacterVoice: return "Character Voice, Tone, and Individuality";
    case Category::InterpersonalHierarchy: return "Interpersonal Communication and Hierarchy";
    case Category::IdiomaticNaturalness: return "Linguistic and Idiomatic Naturalness";
    case Category::NuancedInterpretation: return "Nuanced Interpretation including Subtle Implications";
    case Category::NarrativePacing: return "Narrative Pacing and Rhythm";
    case Category::AffectiveStylistic: return "Affective and Stylistic Resonance";
    case Category::OverallConsistency: return "Overall Consistency and Cohesion";
  }
  return "?";
}

std::string_view category_short(Category c) noexcept {
  switch (c) {
    case Category::HistoricalCultural: return "Hist.";
    case Category::Imagery: return "Img.";
    case Category::CharacterVoice: return "Char.";
    case Category::InterpersonalHierarchy: return "Comm.";
    case Category::IdiomaticNaturalness: return "Ling.";
    case Category::NuancedInterpretation: return "Nuance";
    case Category::NarrativePacing: return "Pace";
    case Category::AffectiveStylistic: return "Style";
    case Category::OverallConsistency: return "Cons.";
  }
  return "?";
}

namespace {

/// Strips markdown emphasis, list numbering, a "Category:" prefix,
/// surrounding quotes and a trailing period.
std::string normalize_answer(std::string_view raw) {
  std::string s;
  for (char ch : raw) {
    if (ch != '*' && ch != '`' && ch != '#') s.push_back(ch);
  }
  s = trim(s);
  static const std::regex numbering(R"(^(?:\d+[.)]|-)\s*)");
  s = std::regex_replace(s, numbering, "");
  if (to_lower(s).rfind("category:", 0) == 0) s = trim(s.substr(9));
  while (!s.empty() && (s.back() == '.' || s.back() == '"' || s.back() == '\'')) s.pop_back();
  while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.erase(0, 1);
  return trim(s);
}

std::string join_sections(const std::vector<std::string>& sections) {
  std::string out;
  for (const auto& s : sections) {
    if (!out.empty()) out += "\n\n";
    out += s;
  }
  return out;
}

std::string two_digits(std::size_t n) { return (n < 10 ? "0" : "") + std::to_string(n); }

}  // namespace

std::optional<Category> match_category(std::string_view text) {
  auto norm = normalize_answer(text);
  for (auto c : kCategories) {
    if (iequals(norm, category_label(c))) return c;
  }
  return std::nullopt;
}

// --- Generation -------------------------------------------------------------------

std::vector<std::string> parse_numbered_list(const std::string& text) {
  static const std::regex marker(R"(^\s*(?:\*\*)?\(?(\d+)[.):](?:\*\*)?(?:\s+(.*))?\s*$)");
  std::vector<std::string> items;
  bool in_list = false;
  bool last_blank = false;
  for (const auto& line : split_lines(text)) {
    std::smatch m;
    if (std::regex_match(line, m, marker)) {
      items.push_back(trim(m[2].str()));
      in_list = true;
      last_blank = false;
    } else if (in_list && !trim(line).empty()) {
      // A paragraph after a blank line ends the list.
      if (last_blank) break;
      auto& cur = items.back();
      cur += (cur.empty() ? "" : " ") + trim(line);
    } else if (trim(line).empty()) {
      last_blank = in_list;
    }
  }
  std::erase_if(items, [](const std::string& s) { return trim(s).empty(); });
  return items;
}

JudgeRequest build_generation_prompt(const ParagraphPair& pair, const std::string& summary, std::size_t n_target,
                                     const std::string& source_language) {
  std::vector<std::string> sections;
  sections.push_back("You will read one paragraph from a " + source_language +
                     " literary work, together with a brief summary of the story for context.");
  sections.push_back("## Story summary\n" + (trim(summary).empty() ? std::string("(none provided)") : summary));
  sections.push_back("## Paragraph\n" + pair.source_text);
  sections.push_back("Write about " + std::to_string(n_target) +
                     " verification questions that a successful translation of this paragraph must satisfy. "
                     "Focus on the literary aspects of the passage: what a translator has to preserve for the "
                     "paragraph to work as literature, not only its literal meaning. Each question must be "
                     "answerable by reading the translation of this paragraph.\n"
                     "Answer with a numbered list, one question per item, and nothing else.");
  return JudgeRequest{"You are an expert in literature and literary translation.", join_sections(sections),
                      std::nullopt};
}

GenerationResult generate_questions(const ParagraphPair& pair, const std::string& summary, std::size_t n_target,
                                    Judge& judge, const std::string& source_language) {
  if (n_target < 1) throw Error(ErrorCode::InvalidConfig, "n_target must be >= 1");
  if (trim(summary).empty()) warn("no story summary for " + pair.key().str());
  auto response = judge.complete(build_generation_prompt(pair, summary, n_target, source_language));
  auto items = parse_numbered_list(response.text);
  if (items.empty()) {
    throw Error(ErrorCode::NoQuestionsParsed, "no numbered questions in response for " + pair.key().str());
  }
  GenerationResult result;
  result.parsed = items.size();
  const std::size_t cap = n_target + 5;
  if (items.size() > cap) {
    warn(pair.key().str() + ": judge produced " + std::to_string(items.size()) + " questions, keeping " +
         std::to_string(cap));
    items.resize(cap);
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    VerseQuestion q;
    q.question_id = pair.story_id + "-" + std::to_string(pair.index) + "-q" + two_digits(i + 1);
    q.key = pair.key();
    q.text = std::move(items[i]);
    result.questions.push_back(std::move(q));
  }
  return result;
}

// --- Classification ----------------------------------------------------------------

namespace {
const char* const kClassifierSystemText =
    "You sort questions about literary translation into a fixed set of categories.";

std::string label_list() {
  std::string out;
  for (auto c : kCategories) out += "- " + std::string(category_label(c)) + "\n";
  out.pop_back();
  return out;
}
}  // namespace

JudgeRequest build_classification_prompt(const VerseQuestion& question) {
  std::string user = "Classify the following question into exactly one of these categories:\n" + label_list() +
                     "\n\nQuestion: " + question.text + "\n\nAnswer with the category name only.";
  return JudgeRequest{kClassifierSystemText, std::move(user), std::nullopt};
}

JudgeRequest build_classification_reprompt(const VerseQuestion& question, const std::string& previous_answer) {
  auto req = build_classification_prompt(question);
  req.user_text += "\n\nYour previous answer was: " + trim(previous_answer) +
                   "\nThat is not one of the categories. Reply with exactly one of the following labels, "
                   "copied verbatim:\n" +
                   label_list();
  return req;
}

Category classify_question(const VerseQuestion& question, Judge& judge) {
  if (trim(question.text).empty()) throw Error(ErrorCode::EmptyText, "empty question " + question.question_id);
  auto try_match = [](const std::string& answer) -> std::optional<Category> {
    if (auto c = match_category(answer)) return c;
    for (const auto& line : split_lines(answer)) {
      if (auto c = match_category(line)) return c;
    }
    return std::nullopt;
  };
  auto first = judge.complete(build_classification_prompt(question));
  if (auto c = try_match(first.text)) return *c;
  auto second = judge.complete(build_classification_reprompt(question, first.text));
  if (auto c = try_match(second.text)) return *c;
  throw Error(ErrorCode::UnmappableCategory, "question " + question.question_id + ": answers '" +
                                                 trim(first.text) + "' and '" + trim(second.text) +
                                                 "' match no category");
}

// --- Grading ---------------------------------------------------------------------

json GradeOptions::to_json() const {
  return json{{"include_reference", include_reference},
              {"include_summary", include_summary},
              {"use_cot", use_cot},
              {"k_shot", k_shot},
              {"reference_index", reference_index},
              {"source_language", source_language},
              {"target_language", target_language}};
}

std::string GradeOptions::fingerprint() const { return lteval::fingerprint(to_json()); }

std::vector<GradeShot> parse_grade_shots(std::string_view jsonl) {
  std::vector<GradeShot> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto rec = json::parse(line);
      GradeShot s;
      s.story_id = rec.at("story_id").get<std::string>();
      s.question = rec.at("question").get<std::string>();
      s.source_text = rec.value("source_text", "");
      s.candidate_text = rec.at("candidate_text").get<std::string>();
      s.score = rec.at("score").get<int>();
      s.rationale = rec.value("rationale", "");
      if (s.score < 1 || s.score > 3) throw Error(ErrorCode::OutOfRange, "grade shot score outside 1..3");
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "grade shots:" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

JudgeRequest build_grading_prompt(const VerseQuestion& question, const ParagraphPair& pair,
                                  const std::string& candidate_text, const std::string& summary,
                                  const GradeOptions& options, const std::vector<GradeShot>& shots) {
  if (trim(candidate_text).empty()) throw Error(ErrorCode::EmptyCandidate, "empty candidate for " + pair.key().str());
  const auto& src = options.source_language;
  const auto& tgt = options.target_language;
  std::vector<std::string> sections;
  sections.push_back("You will check whether a " + tgt + " translation of one paragraph from a " + src +
                     " literary work satisfies a verification question.\n"
                     "Grade 1 if the criterion in the question is not satisfied at all, 2 if it is partially "
                     "satisfied, and 3 if it is fully satisfied.");
  if (options.include_summary) {
    sections.push_back("## Story summary\n" + (trim(summary).empty() ? std::string("(none provided)") : summary));
  }
  if (options.k_shot > 0) {
    std::vector<const GradeShot*> picked;
    for (const auto& s : shots) {
      if (picked.size() == static_cast<std::size_t>(options.k_shot)) break;
      if (s.story_id != pair.story_id) picked.push_back(&s);
    }
    if (picked.size() < static_cast<std::size_t>(options.k_shot)) {
      throw Error(ErrorCode::InsufficientShots, "grading bank has " + std::to_string(picked.size()) +
                                                    " examples outside story '" + pair.story_id + "'");
    }
    std::string block = "## Examples";
    for (std::size_t i = 0; i < picked.size(); ++i) {
      const auto& s = *picked[i];
      block += "\n### Example " + std::to_string(i + 1) + "\n";
      if (!s.source_text.empty()) block += "Source:\n" + s.source_text + "\n";
      block += "Translation:\n" + s.candidate_text + "\nVerification question: " + s.question + "\nEvaluation:\n";
      if (!s.rationale.empty()) block += s.rationale + "\n";
      block += "Score: " + std::to_string(s.score);
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
  sections.push_back("## Verification question\n" + question.text);
  if (options.use_cot) {
    sections.push_back(
        "## Output format\nFirst explain your reasoning step by step. Then give the grade on the last line "
        "in the form \"Score: N\" where N is 1, 2 or 3.");
  } else {
    sections.push_back(
        "## Output format\nRespond with only the grade, on a single line in the form \"Score: N\" where N is "
        "1, 2 or 3. Do not explain.");
  }
  return JudgeRequest{"You are an expert literary translation critic.", join_sections(sections), std::nullopt};
}

VerseGrade grade_question(const VerseQuestion& question, const ParagraphPair& pair, const std::string& candidate_text,
                          const std::string& system_id, const std::string& summary, const GradeOptions& options,
                          Judge& judge, const std::vector<GradeShot>& shots) {
  auto response = judge.complete(build_grading_prompt(question, pair, candidate_text, summary, options, shots));
  VerseGrade g;
  g.question_id = question.question_id;
  g.system_id = system_id;
  g.score = parse_final_score(response.text, 1, 3, options.use_cot);
  if (options.use_cot) g.rationale = extract_rationale(response.text);
  g.raw_response = response.text;
  return g;
}

// --- Aggregation -------------------------------------------------------------------

std::array<CategoryAggregate, kCategoryCount> aggregate_categories(const std::vector<VerseQuestion>& questions,
                                                                   const std::vector<VerseGrade>& grades) {
  std::array<CategoryAggregate, kCategoryCount> out{};
  std::array<double, kCategoryCount> percent_sum{};
  std::map<std::string, const VerseQuestion*> by_id;
  std::size_t classified = 0;
  for (std::size_t i = 0; i < kCategoryCount; ++i) out[i].category = kCategories[i];
  for (const auto& q : questions) {
    by_id[q.question_id] = &q;
    if (q.category) {
      ++out[static_cast<std::size_t>(*q.category)].n_questions;
      ++classified;
    }
  }
  for (const auto& g : grades) {
    auto it = by_id.find(g.question_id);
    if (it == by_id.end()) throw Error(ErrorCode::UnknownItem, "grade for unknown question " + g.question_id);
    if (!it->second->category) {
      throw Error(ErrorCode::UnclassifiedQuestion, "grade references unclassified question " + g.question_id);
    }
    auto idx = static_cast<std::size_t>(*it->second->category);
    ++out[idx].n_grades;
    percent_sum[idx] += to_percentage(g.score, kVerseScale);
  }
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (classified > 0) {
      out[i].question_share = 100.0 * static_cast<double>(out[i].n_questions) / static_cast<double>(classified);
    }
    if (out[i].n_grades > 0) out[i].mean_score_percent = percent_sum[i] / static_cast<double>(out[i].n_grades);
  }
  return out;
}

// --- Records -------------------------------------------------------------------------

json question_to_json(const VerseQuestion& q) {
  return json{{"question_id", q.question_id},
              {"story_id", q.key.story_id},
              {"index", q.key.index},
              {"text", q.text},
              {"category", q.category ? json(std::string(category_label(*q.category))) : json(nullptr)}};
}

VerseQuestion question_from_json(const json& record) {
  VerseQuestion q;
  try {
    q.question_id = record.at("question_id").get<std::string>();
    q.key = {record.at("story_id").get<std::string>(), record.at("index").get<std::size_t>()};
    q.text = record.at("text").get<std::string>();
    if (auto c = record.find("category"); c != record.end() && !c->is_null()) {
      q.category = match_category(c->get<std::string>());
      if (!q.category) {
        throw Error(ErrorCode::UnmappableCategory, "question " + q.question_id + " has unknown category '" +
                                                       c->get<std::string>() + "'");
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("question record: ") + e.what());
  }
  if (trim(q.text).empty()) throw Error(ErrorCode::EmptyText, "empty question " + q.question_id);
  return q;
}

json grade_to_json(const VerseGrade& g, bool include_rationale) {
  json j{{"question_id", g.question_id}, {"system_id", g.system_id}, {"score", g.score}};
  if (include_rationale) j["rationale"] = g.rationale;
  return j;
}

VerseGrade grade_from_json(const json& record) {
  VerseGrade g;
  try {
    g.question_id = record.at("question_id").get<std::string>();
    g.system_id = record.at("system_id").get<std::string>();
    g.score = record.at("score").get<int>();
    g.rationale = record.value("rationale", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("grade record: ") + e.what());
  }
  if (g.score < 1 || g.score > 3) throw Error(ErrorCode::OutOfRange, "OutOfRange(" + std::to_string(g.score) + ")");
  return g;
}

}  // namespace lteval
