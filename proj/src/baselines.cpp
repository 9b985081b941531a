#include "dialeval/baselines.hpp"

#include <cmath>
#include <map>

#include "dialeval/error.hpp"

namespace dialeval {

std::string collapsed_respond(std::span<const std::string>) { return std::string(kCollapsedResponse); }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index over an empty range");
  const std::uint64_t bound = n;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return std::size_t(draw % bound);
}

RandomResponder::RandomResponder(std::vector<std::string> corpus, std::uint64_t seed)
    : corpus_(std::move(corpus)), rng_(seed) {
  if (corpus_.empty()) throw ArgumentError("random baseline needs a non-empty response corpus");
}

const std::string& RandomResponder::respond() { return corpus_[uniform_index(rng_, corpus_.size())]; }

std::string random_respond(std::span<const std::string> corpus, std::uint64_t seed) {
  if (corpus.empty()) throw ArgumentError("random baseline needs a non-empty response corpus");
  std::mt19937_64 rng(seed);
  return corpus[uniform_index(rng, corpus.size())];
}

// ---------------------------------------------------------------------------

TfIdfRetriever TfIdfRetriever::build(std::span<const std::vector<std::string>> contexts,
                                     std::vector<std::string> responses) {
  if (contexts.size() != responses.size()) {
    throw ArgumentError("TF-IDF build: " + std::to_string(contexts.size()) + " contexts but " +
                        std::to_string(responses.size()) + " responses");
  }
  if (contexts.empty()) throw ArgumentError("TF-IDF build needs at least one context");

  TfIdfRetriever r;
  r.responses_ = std::move(responses);
  std::vector<long> document_frequency;
  for (const auto& context : contexts) {
    std::map<Eigen::Index, double> counts;
    for (const auto& term : context) {
      auto [it, inserted] = r.vocabulary_.try_emplace(term, Eigen::Index(r.vocabulary_.size()));
      if (inserted) document_frequency.push_back(0);
      counts[it->second] += 1.0;
    }
    for (const auto& [index, count] : counts) ++document_frequency[index];
    r.term_counts_.emplace_back(counts.begin(), counts.end());
  }
  const double n = double(contexts.size());
  r.idf_.resize(document_frequency.size());
  for (std::size_t t = 0; t < document_frequency.size(); ++t) r.idf_[t] = std::log(n / double(document_frequency[t]));
  r.rebuild_vectors();
  return r;
}

void TfIdfRetriever::rebuild_vectors() {
  const auto dim = Eigen::Index(vocabulary_.size());
  context_vectors_.clear();
  context_vectors_.reserve(term_counts_.size());
  for (const auto& counts : term_counts_) {
    SparseVector v(dim);
    v.reserve(Eigen::Index(counts.size()));
    for (const auto& [index, count] : counts) {
      const double weight = count * idf_[index];
      if (weight != 0.0) v.insert(index) = weight;
    }
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    context_vectors_.push_back(std::move(v));
  }
}

void TfIdfRetriever::scale_idf(double factor) {
  if (!(factor > 0.0)) throw ArgumentError("idf scale factor must be positive");
  for (double& w : idf_) w *= factor;
  rebuild_vectors();
}

double TfIdfRetriever::idf(std::string_view term) const {
  auto it = vocabulary_.find(std::string(term));
  if (it == vocabulary_.end()) throw ArgumentError("term '" + std::string(term) + "' not in vocabulary");
  return idf_[it->second];
}

SparseVector TfIdfRetriever::vectorize(std::span<const std::string> tokens) const {
  std::map<Eigen::Index, double> counts;
  for (const auto& term : tokens) {
    if (auto it = vocabulary_.find(term); it != vocabulary_.end()) counts[it->second] += 1.0;
  }
  SparseVector v(Eigen::Index(vocabulary_.size()));
  for (const auto& [index, count] : counts) {
    const double weight = count * idf_[index];
    if (weight != 0.0) v.insert(index) = weight;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

std::size_t TfIdfRetriever::nearest(std::span<const std::string> query) const {
  const SparseVector q = vectorize(query);
  if (q.nonZeros() == 0) return 0;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < context_vectors_.size(); ++i) {
    const double score = context_vectors_[i].dot(q);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

const std::string& TfIdfRetriever::retrieve(std::span<const std::string> query) const {
  return responses_[nearest(query)];
}

}  // namespace dialeval
