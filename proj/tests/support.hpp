#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "lteval/corpus.hpp"
#include "lteval/util.hpp"

namespace lteval::support {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(LTEVAL_FIXTURE_DIR) / rel;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("lteval-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) { atomic_write_file(p, text); }

/// `stories` stories named s0, s1, ... with `paragraphs` paragraphs each.
/// Even paragraphs carry dialogue.
inline Corpus synthetic_corpus(std::size_t stories, std::size_t paragraphs) {
  std::vector<Story> out;
  for (std::size_t s = 0; s < stories; ++s) {
    Story st;
    st.story_id = "s" + std::to_string(s);
    st.title = "Story " + std::to_string(s);
    st.summary = "Summary of story " + std::to_string(s) + ".";
    for (std::size_t i = 0; i < paragraphs; ++i) {
      ParagraphPair p;
      p.story_id = st.story_id;
      p.index = i;
      p.source_text = "Source " + st.story_id + " paragraph " + std::to_string(i) + ".";
      p.references = {"Reference " + st.story_id + " " + std::to_string(i)};
      p.has_dialogue = i % 2 == 0;
      st.paragraphs.push_back(std::move(p));
    }
    out.push_back(std::move(st));
  }
  return Corpus(std::move(out));
}

inline CandidateSet synthetic_candidates(const Corpus& corpus, const std::string& system_id) {
  CandidateSet set;
  set.system_id = system_id;
  for (const auto* p : corpus.pairs()) set.translations[p->key()] = system_id + " translation of " + p->key().str();
  return set;
}

}  // namespace lteval::support
