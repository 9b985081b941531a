#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "dialeval/error.hpp"
#include "dialeval/types.hpp"

namespace dialeval {

// Synonymy and open-class membership read from a WordNet database directory.
//
// Only lemma/synset membership is retained: glosses, pointers and frames are
// skipped. Lemmas are stored lowercased; multiword lemmas keep their
// underscores and therefore never match a single token.
class WordNetIndex {
 public:
  WordNetIndex() = default;

  // Reads index.{noun,verb,adj,adv} and data.{noun,verb,adj,adv} from `directory`.
  static WordNetIndex load(const std::filesystem::path& directory);

  // Adds one synset; used by loaders and by tests building small lexicons.
  void add_synset(Pos pos, std::uint64_t offset, std::span<const std::string> lemmas);

  // Union of the lemma sets of every synset containing <word, pos>.
  // Empty when the word is unknown for that part of speech.
  std::set<std::string> synonyms(std::string_view word, Pos pos) const;

  // True when some synonym of <word, pos> is an element of `surfaces`.
  bool has_synonym_in(std::string_view word, Pos pos,
                      const std::unordered_set<std::string>& surfaces) const;

  bool contains(std::string_view lemma, Pos pos) const;

  std::size_t lemma_count(Pos pos) const;
  std::size_t synset_count(Pos pos) const;

 private:
  using SynsetList = std::vector<std::uint64_t>;
  using LemmaList = std::vector<std::string>;

  static std::size_t slot(Pos pos);
  void link(std::size_t slot, const std::string& lemma, std::uint64_t offset);

  std::array<std::unordered_map<std::string, SynsetList>, 4> lemma_synsets_;
  std::array<std::unordered_map<std::uint64_t, LemmaList>, 4> synset_lemmas_;
};

// Word vectors in GloVe text format. Keys are stored lowercased and the first
// occurrence of a key wins.
class EmbeddingTable {
 public:
  using ConstRow = Eigen::Map<const Eigen::VectorXf>;

  explicit EmbeddingTable(int dim = 0) : dim_(dim) {}

  // Throws ParseError on a row with the wrong component count and
  // ConfigError when the file's dimension disagrees with `expected_dim`.
  static EmbeddingTable load(const std::filesystem::path& path,
                             std::optional<int> expected_dim = std::nullopt);

  // Returns false when the token was already present.
  bool insert(std::string_view token, std::span<const float> values);

  std::optional<ConstRow> find(std::string_view token) const;

  int dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

 private:
  int dim_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::vector<float> data_;
};

// Case-insensitive stopword set.
class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::span<const std::string> words);

  // One word per line; blank lines and `#` comments are ignored.
  static StopwordList parse(std::string_view text);
  static StopwordList load(const std::filesystem::path& path);
  // The 127-word list shipped in data/stopwords.txt.
  static const StopwordList& classic();

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

struct LexicalResources {
  WordNetIndex wordnet;
  StopwordList stopwords = StopwordList::classic();
  std::map<int, EmbeddingTable> embeddings;  // keyed by dimension

  const EmbeddingTable* embeddings_for(int dim) const {
    auto it = embeddings.find(dim);
    return it == embeddings.end() ? nullptr : &it->second;
  }
};

// u.v / (|u||v|), clamped to [-1, 1]. Throws DegenerateError for a zero-norm input.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& u,
                                            const Eigen::MatrixBase<DerivedB>& v) {
  using Scalar = typename DerivedA::Scalar;
  if (u.size() != v.size()) {
    throw ArgumentError("cosine_similarity: length mismatch (" + std::to_string(u.size()) +
                        " vs " + std::to_string(v.size()) + ")");
  }
  const Scalar nu = u.norm();
  const Scalar nv = v.norm();
  if (nu == Scalar(0) || nv == Scalar(0)) {
    throw DegenerateError("cosine similarity is undefined for a zero-norm vector");
  }
  return std::clamp(Scalar(u.dot(v.template cast<Scalar>()) / (nu * nv)), Scalar(-1), Scalar(1));
}

}  // namespace dialeval
