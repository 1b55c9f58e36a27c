#include "lteval/corpus.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "lteval/error.hpp"

namespace lteval {

namespace {

std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line) + ": ";
}

std::string required_string(const json& rec, const char* field, const std::string& at) {
  auto it = rec.find(field);
  if (it == rec.end() || !it->is_string()) {
    throw Error(ErrorCode::MalformedRecord, at + "missing string field '" + field + "'");
  }
  return it->get<std::string>();
}

std::size_t required_index(const json& rec, const std::string& at) {
  auto it = rec.find("index");
  if (it == rec.end() || !it->is_number_integer() || it->get<long long>() < 0) {
    throw Error(ErrorCode::MalformedRecord, at + "missing non-negative integer field 'index'");
  }
  return it->get<std::size_t>();
}

void parse_lines(std::string_view text, const std::string& source,
                 const std::function<void(std::size_t, const json&)>& fn) {
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord, where(source, line_no) + "invalid JSON (" + e.what() + ")");
    }
    if (!rec.is_object()) {
      throw Error(ErrorCode::MalformedRecord, where(source, line_no) + "record is not an object");
    }
    fn(line_no, rec);
  }
}

/// Uniform integer in [0, bound) from raw 64-bit draws, rejecting the biased
/// tail.
std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  for (;;) {
    std::uint64_t x = gen();
    if (x < limit) return x % bound;
  }
}

/// First k positions of a Fisher-Yates shuffle of [0, n), returned sorted.
std::vector<std::size_t> choose(std::mt19937_64& gen, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(bounded(gen, n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

// --- Corpus ----------------------------------------------------------------

Corpus::Corpus(std::vector<Story> stories) : stories_(std::move(stories)) {
  for (std::size_t s = 0; s < stories_.size(); ++s) {
    const auto& story = stories_[s];
    if (!story_pos_.emplace(story.story_id, s).second) {
      throw Error(ErrorCode::DuplicateItem, "duplicate story_id '" + story.story_id + "'");
    }
    for (std::size_t i = 0; i < story.paragraphs.size(); ++i) {
      const auto& p = story.paragraphs[i];
      if (p.story_id != story.story_id || p.index != i) {
        throw Error(ErrorCode::NonContiguousIndex,
                    "story '" + story.story_id + "': expected index " + std::to_string(i));
      }
      if (trim(p.source_text).empty()) {
        throw Error(ErrorCode::EmptyText, p.key().str() + ": empty source_text");
      }
      if (p.references.empty()) {
        throw Error(ErrorCode::EmptyText, p.key().str() + ": no reference translation");
      }
      for (const auto& r : p.references) {
        if (trim(r).empty()) throw Error(ErrorCode::EmptyText, p.key().str() + ": empty reference");
      }
    }
  }
}

std::size_t Corpus::paragraph_count() const {
  std::size_t n = 0;
  for (const auto& s : stories_) n += s.paragraphs.size();
  return n;
}

const Story* Corpus::find_story(const std::string& story_id) const {
  auto it = story_pos_.find(story_id);
  return it == story_pos_.end() ? nullptr : &stories_[it->second];
}

const ParagraphPair* Corpus::find(const ItemKey& key) const {
  const Story* s = find_story(key.story_id);
  if (!s || key.index >= s->paragraphs.size()) return nullptr;
  return &s->paragraphs[key.index];
}

const ParagraphPair& Corpus::at(const ItemKey& key) const {
  const auto* p = find(key);
  if (!p) throw Error(ErrorCode::UnknownItem, "unknown item " + key.str());
  return *p;
}

std::vector<const ParagraphPair*> Corpus::pairs() const {
  std::vector<const ParagraphPair*> out;
  for (const auto& s : stories_)
    for (const auto& p : s.paragraphs) out.push_back(&p);
  return out;
}

Corpus parse_corpus(std::string_view corpus_jsonl, std::string_view stories_jsonl) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, ParagraphPair>> by_story;

  parse_lines(corpus_jsonl, "corpus", [&](std::size_t line, const json& rec) {
    const auto at = where("corpus", line);
    ParagraphPair p;
    p.story_id = required_string(rec, "story_id", at);
    p.index = required_index(rec, at);
    p.source_text = required_string(rec, "source_text", at);
    auto refs = rec.find("references");
    if (refs == rec.end() || !refs->is_array()) {
      throw Error(ErrorCode::MalformedRecord, at + "missing array field 'references'");
    }
    for (const auto& r : *refs) {
      if (!r.is_string()) throw Error(ErrorCode::MalformedRecord, at + "non-string reference");
      p.references.push_back(r.get<std::string>());
    }
    if (auto d = rec.find("has_dialogue"); d != rec.end() && !d->is_null()) {
      if (!d->is_boolean()) throw Error(ErrorCode::MalformedRecord, at + "has_dialogue must be boolean");
      p.has_dialogue = d->get<bool>();
    }
    if (trim(p.source_text).empty()) throw Error(ErrorCode::EmptyText, at + "empty source_text");
    if (p.references.empty()) throw Error(ErrorCode::EmptyText, at + "references must be non-empty");
    for (const auto& r : p.references) {
      if (trim(r).empty()) throw Error(ErrorCode::EmptyText, at + "empty reference text");
    }
    auto [story_it, fresh] = by_story.try_emplace(p.story_id);
    if (fresh) order.push_back(p.story_id);
    auto key = p.key();
    if (!story_it->second.emplace(p.index, std::move(p)).second) {
      throw Error(ErrorCode::DuplicateItem, at + "duplicate (story_id, index) " + key.str());
    }
  });

  std::map<std::string, json> meta;
  parse_lines(stories_jsonl, "stories", [&](std::size_t line, const json& rec) {
    const auto at = where("stories", line);
    auto id = required_string(rec, "story_id", at);
    required_string(rec, "summary", at);
    if (!meta.emplace(id, rec).second) {
      throw Error(ErrorCode::DuplicateItem, at + "duplicate story metadata for '" + id + "'");
    }
  });

  std::vector<Story> stories;
  for (const auto& id : order) {
    Story story;
    story.story_id = id;
    if (auto m = meta.find(id); m != meta.end()) {
      story.title = m->second.value("title", "");
      story.author = m->second.value("author", "");
      story.summary = m->second.value("summary", "");
    }
    std::size_t expected = 0;
    for (auto& [index, pair] : by_story[id]) {
      if (index != expected) {
        throw Error(ErrorCode::NonContiguousIndex,
                    "story '" + id + "': expected index " + std::to_string(expected));
      }
      story.paragraphs.push_back(std::move(pair));
      ++expected;
    }
    stories.push_back(std::move(story));
  }
  for (const auto& [id, _] : meta) {
    if (!by_story.count(id)) warn("story metadata for '" + id + "' has no paragraphs");
  }
  return Corpus(std::move(stories));
}

Corpus load_corpus(const std::filesystem::path& corpus_path,
                   const std::optional<std::filesystem::path>& stories_path) {
  std::string stories;
  if (stories_path) stories = read_file(*stories_path);
  try {
    return parse_corpus(read_file(corpus_path), stories);
  } catch (const Error& e) {
    throw Error(e.code(), corpus_path.filename().string() + ": " + e.what());
  }
}

SerializedCorpus serialize_corpus(const Corpus& corpus) {
  SerializedCorpus out;
  for (const auto& story : corpus.stories()) {
    out.stories_jsonl += json{{"story_id", story.story_id},
                              {"title", story.title},
                              {"author", story.author},
                              {"summary", story.summary}}
                             .dump() +
                         "\n";
    for (const auto& p : story.paragraphs) {
      json rec{{"story_id", p.story_id},
               {"index", p.index},
               {"source_text", p.source_text},
               {"references", p.references}};
      if (p.has_dialogue) rec["has_dialogue"] = *p.has_dialogue;
      out.corpus_jsonl += rec.dump() + "\n";
    }
  }
  return out;
}

// --- Candidates --------------------------------------------------------------

const std::string* CandidateSet::find(const ItemKey& key) const {
  auto it = translations.find(key);
  return it == translations.end() ? nullptr : &it->second;
}

double CandidateSet::coverage(const Corpus& corpus) const {
  auto total = corpus.paragraph_count();
  if (total == 0) return 0.0;
  return static_cast<double>(translations.size()) / static_cast<double>(total);
}

std::vector<CandidateSet> parse_candidates(std::string_view jsonl, const Corpus& corpus,
                                           const std::string& source_name) {
  std::vector<CandidateSet> sets;
  std::map<std::string, std::size_t> pos;
  json provenance;
  parse_lines(jsonl, source_name, [&](std::size_t line, const json& rec) {
    const auto at = where(source_name, line);
    if (rec.contains("provenance") && !rec.contains("system_id")) {
      provenance = rec["provenance"];
      return;
    }
    auto system_id = required_string(rec, "system_id", at);
    ItemKey key{required_string(rec, "story_id", at), required_index(rec, at)};
    auto text = required_string(rec, "text", at);
    if (!corpus.find(key)) throw Error(ErrorCode::UnknownItem, at + "unknown item " + key.str());
    if (trim(text).empty()) throw Error(ErrorCode::EmptyText, at + "empty translation for " + key.str());
    auto [it, fresh] = pos.try_emplace(system_id, sets.size());
    if (fresh) {
      sets.emplace_back();
      sets.back().system_id = system_id;
    }
    if (!sets[it->second].translations.emplace(key, std::move(text)).second) {
      throw Error(ErrorCode::DuplicateItem, at + "second translation for " + key.str() +
                                                " in system '" + system_id + "'");
    }
  });
  for (auto& s : sets) s.provenance = provenance;
  return sets;
}

std::vector<CandidateSet> load_candidates(const std::filesystem::path& path, const Corpus& corpus) {
  return parse_candidates(read_file(path), corpus, path.filename().string());
}

std::string serialize_candidates(const CandidateSet& set) {
  std::string out;
  if (!set.provenance.is_null()) out += json{{"provenance", set.provenance}}.dump() + "\n";
  for (const auto& [key, text] : set.translations) {
    out += json{{"system_id", set.system_id}, {"story_id", key.story_id}, {"index", key.index}, {"text", text}}
               .dump() +
           "\n";
  }
  return out;
}

// --- Annotations ---------------------------------------------------------------

std::string_view to_string(Channel channel) noexcept {
  switch (channel) {
    case Channel::Honorifics: return "honorifics";
    case Channel::Lexical: return "lexical";
    case Channel::Syntax: return "syntax";
    case Channel::Content: return "content";
    case Channel::Verse: return "verse";
  }
  return "?";
}

Channel parse_channel(std::string_view name) {
  for (auto c : kAllChannels) {
    if (iequals(name, to_string(c))) return c;
  }
  throw Error(ErrorCode::MalformedRecord, "unknown channel '" + std::string(name) + "'");
}

std::string AnnotationRecord::item_id() const {
  if (question_id) return *question_id + "|" + system_id;
  return story_id + "#" + std::to_string(index) + "|" + system_id;
}

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl, const Corpus& corpus,
                                                std::span<const CandidateSet> systems,
                                                const QuestionIndex* questions,
                                                const std::string& source_name) {
  std::vector<AnnotationRecord> out;
  std::set<std::tuple<std::string, Channel, std::string>> seen;
  parse_lines(jsonl, source_name, [&](std::size_t line, const json& rec) {
    const auto at = where(source_name, line);
    AnnotationRecord a;
    a.rater_id = required_string(rec, "rater_id", at);
    try {
      a.channel = parse_channel(required_string(rec, "channel", at));
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRecord, at + e.what());
    }
    a.story_id = required_string(rec, "story_id", at);
    a.index = required_index(rec, at);
    a.system_id = required_string(rec, "system_id", at);
    if (auto q = rec.find("question_id"); q != rec.end() && !q->is_null()) {
      a.question_id = q->get<std::string>();
    }
    auto s = rec.find("score");
    if (s == rec.end() || !s->is_number_integer()) {
      throw Error(ErrorCode::MalformedRecord, at + "missing integer field 'score'");
    }
    a.score = s->get<int>();
    const bool verse = a.channel == Channel::Verse;
    const int hi = verse ? 3 : 5;
    if (a.score < 1 || a.score > hi) {
      throw Error(ErrorCode::AnnotationOutOfRange,
                  at + "score " + std::to_string(a.score) + " outside 1.." + std::to_string(hi));
    }
    ItemKey key{a.story_id, a.index};
    if (!corpus.find(key)) throw Error(ErrorCode::DanglingAnnotation, at + "unknown item " + key.str());
    if (verse && !a.question_id) {
      throw Error(ErrorCode::MalformedRecord, at + "verse annotation needs question_id");
    }
    if (!systems.empty()) {
      auto it = std::find_if(systems.begin(), systems.end(),
                             [&](const CandidateSet& c) { return c.system_id == a.system_id; });
      if (it == systems.end() || !it->find(key)) {
        throw Error(ErrorCode::DanglingAnnotation,
                    at + "system '" + a.system_id + "' has no candidate for " + key.str());
      }
    }
    if (questions && a.question_id) {
      auto q = questions->find(*a.question_id);
      if (q == questions->end() || q->second != key) {
        throw Error(ErrorCode::DanglingAnnotation, at + "unknown question '" + *a.question_id + "' for " + key.str());
      }
    }
    if (!seen.emplace(a.rater_id, a.channel, a.item_id()).second) {
      throw Error(ErrorCode::DuplicateItem, at + "rater '" + a.rater_id + "' rated " + a.item_id() + " twice");
    }
    out.push_back(std::move(a));
  });
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, const Corpus& corpus,
                                               std::span<const CandidateSet> systems,
                                               const QuestionIndex* questions) {
  return parse_annotations(read_file(path), corpus, systems, questions, path.filename().string());
}

// --- Sampling ----------------------------------------------------------------

std::size_t SampleManifest::question_count() const {
  std::size_t n = 0;
  for (const auto& it : items) n += it.question_ids.size();
  return n;
}

json SampleManifest::to_json() const {
  json items_json = json::array();
  for (const auto& it : items) {
    json j{{"story_id", it.key.story_id}, {"index", it.key.index}};
    if (it.system_id) j["system_id"] = *it.system_id;
    if (!it.question_ids.empty()) j["question_ids"] = it.question_ids;
    items_json.push_back(std::move(j));
  }
  return json{{"generator", "mt19937_64/rejection/fisher-yates"},
              {"seed", seed},
              {"n_per_story", n_per_story},
              {"q_per_item", q_per_item},
              {"n_items", items.size()},
              {"n_questions", question_count()},
              {"items", std::move(items_json)}};
}

SampleManifest sample_items(const Corpus& corpus, std::span<const std::string> story_ids,
                            std::size_t n_per_story, std::size_t q_per_item, std::uint64_t seed,
                            const QuestionIndex* questions, std::span<const CandidateSet> systems) {
  if (q_per_item > 0 && !questions) {
    throw Error(ErrorCode::InsufficientQuestions, "q_per_item > 0 needs a question bank");
  }
  std::map<ItemKey, std::vector<std::string>> per_item;
  if (questions) {
    for (const auto& [qid, key] : *questions) per_item[key].push_back(qid);
  }

  SampleManifest manifest;
  manifest.seed = seed;
  manifest.n_per_story = n_per_story;
  manifest.q_per_item = q_per_item;
  std::mt19937_64 gen(seed);

  for (const auto& id : story_ids) {
    const Story* story = corpus.find_story(id);
    if (!story) throw Error(ErrorCode::UnknownItem, "unknown story '" + id + "'");
    if (story->paragraphs.size() < n_per_story) {
      throw Error(ErrorCode::InsufficientParagraphs,
                  "story '" + id + "' has " + std::to_string(story->paragraphs.size()) +
                      " paragraphs, need " + std::to_string(n_per_story));
    }
    for (auto idx : choose(gen, story->paragraphs.size(), n_per_story)) {
      ManifestItem item;
      item.key = {id, idx};
      if (!systems.empty()) {
        std::vector<const CandidateSet*> covering;
        for (const auto& s : systems)
          if (s.find(item.key)) covering.push_back(&s);
        if (!covering.empty()) {
          item.system_id = covering[static_cast<std::size_t>(bounded(gen, covering.size()))]->system_id;
        }
      }
      if (q_per_item > 0) {
        const auto& qs = per_item[item.key];
        if (qs.size() < q_per_item) {
          throw Error(ErrorCode::InsufficientQuestions,
                      item.key.str() + " has " + std::to_string(qs.size()) + " questions, need " +
                          std::to_string(q_per_item));
        }
        for (auto qi : choose(gen, qs.size(), q_per_item)) item.question_ids.push_back(qs[qi]);
      }
      manifest.items.push_back(std::move(item));
    }
  }
  return manifest;
}

}  // namespace lteval
