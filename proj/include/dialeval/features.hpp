#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/lexicon.hpp"
#include "dialeval/services.hpp"
#include "dialeval/text.hpp"
#include "dialeval/types.hpp"

namespace dialeval {

enum class FeatureKind { Ack, Rel, NgramPrec, LTNorm, NNAcc };

// One feature identifier. `param` is the embedding dimension for Rel and the
// n-gram order for NgramPrec; zero otherwise.
struct FeatureId {
  FeatureKind kind = FeatureKind::Ack;
  int param = 0;

  // Canonical names: Ack, Rel@25, NgramPrec(2), LTNorm, NNAcc.
  std::string name() const;
  static FeatureId parse(std::string_view name);

  friend bool operator==(const FeatureId&, const FeatureId&) = default;
};

// Ordered, duplicate-free list of features. Order is part of a model's identity.
class FeatureSpec {
 public:
  FeatureSpec() = default;
  explicit FeatureSpec(std::vector<FeatureId> ids);

  // Comma-separated feature names.
  static FeatureSpec parse_list(std::string_view list);
  // `ulrof1`, `ulrof2` or `custom:<list>`.
  static FeatureSpec from_selector(std::string_view selector);
  // Ack + 2/3/4-gram precision.
  static FeatureSpec ulrof1();
  // ulrof1 + Rel with 25- and 200-dimensional vectors.
  static FeatureSpec ulrof2();

  std::span<const FeatureId> ids() const { return ids_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::vector<std::string> names() const;
  std::string joined() const;
  // Short stable hash of the joined names; printed in table headers.
  std::string fingerprint() const;
  bool uses(FeatureKind kind) const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;

 private:
  std::vector<FeatureId> ids_;
};

struct FeatureVector {
  FeatureSpec spec;
  VectorXd values;  // aligned to spec; Undefined already replaced by 0
};

// std::nullopt stands for Undefined (only Ack produces it).
using FeatureValue = std::optional<double>;

// A context/response pair after text processing.
struct ProcessedDialogue {
  std::vector<ProcessedTurn> context;
  ProcessedTurn response;
};

// Fraction of response content words with a WordNet synonym among the
// context's token surfaces; Undefined when the response has no content words.
FeatureValue ack(std::span<const ProcessedTurn> context, const ProcessedTurn& response,
                 const WordNetIndex& wordnet);

// Mean over "new" content words (no synonym in context, has a vector) of
// 1 - max cosine similarity to any embedded context token, each term clamped
// to [0, 1]. Zero when there is no such word or no embedded context token.
double relatedness(std::span<const ProcessedTurn> context, const ProcessedTurn& response,
                   const WordNetIndex& wordnet, const EmbeddingTable& embeddings);

// Clipped n-gram precision of `response` against context segments. N-grams
// never span two segments. Zero when the response has fewer than n tokens.
double clipped_ngram_precision(std::span<const std::vector<std::string>> context_segments,
                               std::span<const std::string> response, int n);

// clipped_ngram_precision over stems, one segment per context turn.
double ngram_precision(std::span<const ProcessedTurn> context, const ProcessedTurn& response, int n);

// max(0, 1 - errors / tokens).
double lt_norm(std::size_t token_count, std::size_t error_count);

struct FeatureClients {
  GrammarChecker* grammar = nullptr;
  AcceptabilityScorer* acceptability = nullptr;
};

// Raw per-feature values in spec order (Undefined kept as nullopt).
std::vector<FeatureValue> compute_features(const ProcessedDialogue& dialogue, const FeatureSpec& spec,
                                           const LexicalResources& resources,
                                           const FeatureClients& clients = {});

FeatureVector feature_vector(const ProcessedDialogue& dialogue, const FeatureSpec& spec,
                             const LexicalResources& resources, const FeatureClients& clients = {});

// Replaces Undefined by zero.
FeatureVector to_feature_vector(const FeatureSpec& spec, std::span<const FeatureValue> values);

// Throws ConfigError if `spec` needs a resource or client that is missing.
void check_feature_requirements(const FeatureSpec& spec, const LexicalResources& resources,
                                const FeatureClients& clients);

}  // namespace dialeval
