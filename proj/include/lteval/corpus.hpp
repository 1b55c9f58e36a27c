#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lteval/util.hpp"

namespace lteval {

/// (story_id, paragraph index). The atomic evaluation unit's address.
struct ItemKey {
  std::string story_id;
  std::size_t index = 0;

  auto operator<=>(const ItemKey&) const = default;
  std::string str() const { return story_id + "#" + std::to_string(index); }
};

struct ParagraphPair {
  std::string story_id;
  std::size_t index = 0;
  std::string source_text;
  std::vector<std::string> references;  // at least one
  std::optional<bool> has_dialogue;

  ItemKey key() const { return {story_id, index}; }
  bool operator==(const ParagraphPair&) const = default;
};

struct Story {
  std::string story_id;
  std::string title;
  std::string author;
  std::string summary;  // may be empty
  std::vector<ParagraphPair> paragraphs;  // index i at position i

  bool operator==(const Story&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  /// Validates every invariant; throws Error on the first violation.
  explicit Corpus(std::vector<Story> stories);

  const std::vector<Story>& stories() const { return stories_; }
  std::size_t paragraph_count() const;

  const Story* find_story(const std::string& story_id) const;
  const ParagraphPair* find(const ItemKey& key) const;
  const ParagraphPair& at(const ItemKey& key) const;

  /// Every pair in corpus order (story order, then index).
  std::vector<const ParagraphPair*> pairs() const;

  bool operator==(const Corpus& other) const { return stories_ == other.stories_; }

 private:
  std::vector<Story> stories_;
  std::map<std::string, std::size_t> story_pos_;
};

struct CandidateSet {
  std::string system_id;
  std::map<ItemKey, std::string> translations;
  json provenance;  // null unless the file carried a provenance header

  const std::string* find(const ItemKey& key) const;
  double coverage(const Corpus& corpus) const;
};

enum class Channel { Honorifics, Lexical, Syntax, Content, Verse };

std::string_view to_string(Channel channel) noexcept;
Channel parse_channel(std::string_view name);
inline constexpr Channel kAllChannels[] = {Channel::Honorifics, Channel::Lexical, Channel::Syntax,
                                           Channel::Content, Channel::Verse};

struct AnnotationRecord {
  std::string rater_id;
  Channel channel = Channel::Honorifics;
  std::string story_id;
  std::size_t index = 0;
  std::string system_id;
  std::optional<std::string> question_id;  // verse channel only
  int score = 0;

  /// Identity of the rated object, shared across raters.
  std::string item_id() const;
};

/// Question ids per paragraph, used to validate verse annotations and to
/// sample questions. Keys are question ids.
using QuestionIndex = std::map<std::string, ItemKey>;

// --- Loading -----------------------------------------------------------------

/// Loads a line-delimited corpus file and, optionally, the story metadata
/// file. Stories appear in order of first occurrence in the corpus file.
Corpus load_corpus(const std::filesystem::path& corpus_path,
                   const std::optional<std::filesystem::path>& stories_path = std::nullopt);

Corpus parse_corpus(std::string_view corpus_jsonl, std::string_view stories_jsonl = {});

struct SerializedCorpus {
  std::string corpus_jsonl;
  std::string stories_jsonl;
};
SerializedCorpus serialize_corpus(const Corpus& corpus);

/// Loads candidate translations. A single file may hold several systems;
/// one CandidateSet is returned per system_id in order of first occurrence.
std::vector<CandidateSet> load_candidates(const std::filesystem::path& path, const Corpus& corpus);
std::vector<CandidateSet> parse_candidates(std::string_view jsonl, const Corpus& corpus,
                                           const std::string& source_name = "<memory>");
std::string serialize_candidates(const CandidateSet& set);

/// Annotation records are rejected (not dropped) when they dangle. When
/// `systems` is non-empty the system must exist and cover the item; when
/// `questions` is given, verse records must name a known question of the
/// same paragraph.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path, const Corpus& corpus,
                                               std::span<const CandidateSet> systems = {},
                                               const QuestionIndex* questions = nullptr);
std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl, const Corpus& corpus,
                                                std::span<const CandidateSet> systems = {},
                                                const QuestionIndex* questions = nullptr,
                                                const std::string& source_name = "<memory>");

// --- Sampling ----------------------------------------------------------------

struct ManifestItem {
  ItemKey key;
  std::optional<std::string> system_id;
  std::vector<std::string> question_ids;
};

struct SampleManifest {
  std::uint64_t seed = 0;
  std::size_t n_per_story = 0;
  std::size_t q_per_item = 0;
  std::vector<ManifestItem> items;

  std::size_t question_count() const;
  json to_json() const;
  bool operator==(const SampleManifest&) const = default;
};

inline bool operator==(const ManifestItem& a, const ManifestItem& b) {
  return a.key == b.key && a.system_id == b.system_id && a.question_ids == b.question_ids;
}

/// Seeded selection of `n_per_story` paragraphs from each listed story and,
/// when `q_per_item > 0`, `q_per_item` questions per selected paragraph.
/// When candidate systems are given each item records one system chosen
/// uniformly among those covering it.
///
/// The generator is std::mt19937_64 (fully specified by the standard) with
/// rejection-sampled bounded draws and a partial Fisher-Yates shuffle, so
/// manifests do not depend on the standard library implementation.
SampleManifest sample_items(const Corpus& corpus, std::span<const std::string> story_ids,
                            std::size_t n_per_story, std::size_t q_per_item, std::uint64_t seed,
                            const QuestionIndex* questions = nullptr,
                            std::span<const CandidateSet> systems = {});

}  // namespace lteval
