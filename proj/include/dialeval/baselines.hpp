#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace dialeval {

// The mode-collapsed baseline's answer to every context.
inline constexpr std::string_view kCollapsedResponse = "I don't know";

std::string collapsed_respond(std::span<const std::string> context = {});

// Uniform index in [0, n) from a 64-bit Mersenne Twister, by rejection
// sampling so the sequence does not depend on the standard library.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);

// In-place Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_index(rng, i)]);
}

// Draws responses uniformly from a fixed corpus; deterministic for a seed.
class RandomResponder {
 public:
  RandomResponder(std::vector<std::string> corpus, std::uint64_t seed);
  const std::string& respond();

 private:
  std::vector<std::string> corpus_;
  std::mt19937_64 rng_;
};

// One draw from `corpus` with a fresh generator seeded by `seed`.
std::string random_respond(std::span<const std::string> corpus, std::uint64_t seed);

using SparseVector = Eigen::SparseVector<double>;

// Nearest-context retrieval over L2-normalized TF-IDF vectors
// (raw term counts, idf = log(N / df)).
class TfIdfRetriever {
 public:
  static TfIdfRetriever build(std::span<const std::vector<std::string>> contexts,
                              std::vector<std::string> responses);

  // Response of the training context with the highest cosine similarity;
  // ties go to the lowest index and an all-zero query returns index 0.
  const std::string& retrieve(std::span<const std::string> query) const;
  std::size_t nearest(std::span<const std::string> query) const;

  SparseVector vectorize(std::span<const std::string> tokens) const;

  std::size_t size() const { return responses_.size(); }
  double idf(std::string_view term) const;
  std::span<const SparseVector> context_vectors() const { return context_vectors_; }

  // Multiplies every idf weight by `factor` and re-normalizes stored vectors.
  void scale_idf(double factor);

 private:
  std::unordered_map<std::string, Eigen::Index> vocabulary_;
  std::vector<double> idf_;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> term_counts_;
  std::vector<SparseVector> context_vectors_;
  std::vector<std::string> responses_;

  void rebuild_vectors();
};

}  // namespace dialeval
