#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dialeval/error.hpp"
#include "dialeval/features.hpp"
#include "dialeval/types.hpp"

namespace dialeval {

// Relevance model y(c, r) = sigmoid(w.f(c, r) + b); 0 is maximally relevant.
//
// The scoring and loss functions are templated on the Eigen expression type
// so they work for any scalar (the gradient checks run them in long double).

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

template <typename DerivedW, typename DerivedF>
typename DerivedW::Scalar predict(const Eigen::MatrixBase<DerivedW>& w, typename DerivedW::Scalar b,
                                  const Eigen::MatrixBase<DerivedF>& f) {
  if (w.size() != f.size()) {
    throw ArgumentError("feature vector has " + std::to_string(f.size()) + " entries, model expects " +
                        std::to_string(w.size()));
  }
  return sigmoid(w.dot(f) + b);
}

// Hinge on predictions: max(y_pos - y_neg + m, 0), y_pos being the true response.
template <typename Scalar>
Scalar triplet_term(Scalar y_pos, Scalar y_neg, Scalar margin) {
  return std::max(y_pos - y_neg + margin, Scalar(0));
}

// -log(1 + m - L_t), L_t the triplet term.
template <typename Scalar>
Scalar triplet_log_loss(Scalar hinge, Scalar margin) {
  const Scalar slack = margin - hinge;
  if (!(Scalar(1) + slack > Scalar(0))) {
    throw NumericalDomainError("loss undefined: 1 + m - L_t = " + std::to_string(double(Scalar(1) + slack)));
  }
  return -std::log1p(slack);
}

template <typename Scalar>
Scalar loss(Scalar y_pos, Scalar y_neg, Scalar margin) {
  return triplet_log_loss(triplet_term(y_pos, y_neg, margin), margin);
}

template <typename Scalar>
struct Gradient {
  Vector<Scalar> w;
  Scalar b;
};

// Analytic gradient of the loss with respect to (w, b). Zero where the hinge
// is inactive, including the kink itself.
template <typename DerivedW, typename DerivedP, typename DerivedN>
Gradient<typename DerivedW::Scalar> loss_gradient(const Eigen::MatrixBase<DerivedW>& w,
                                                  typename DerivedW::Scalar b,
                                                  const Eigen::MatrixBase<DerivedP>& f_pos,
                                                  const Eigen::MatrixBase<DerivedN>& f_neg,
                                                  typename DerivedW::Scalar margin) {
  using Scalar = typename DerivedW::Scalar;
  const Scalar y_pos = predict(w, b, f_pos);
  const Scalar y_neg = predict(w, b, f_neg);
  const Scalar hinge = triplet_term(y_pos, y_neg, margin);
  Gradient<Scalar> g{Vector<Scalar>::Zero(w.size()), Scalar(0)};
  if (hinge <= Scalar(0)) return g;
  // dL/dL_t = 1 / (1 + m - L_t); dy/dz = y (1 - y).
  const Scalar outer = Scalar(1) / (Scalar(1) + margin - hinge);
  const Scalar d_pos = y_pos * (Scalar(1) - y_pos);
  const Scalar d_neg = y_neg * (Scalar(1) - y_neg);
  g.w = outer * (d_pos * f_pos - d_neg * f_neg);
  g.b = outer * (d_pos - d_neg);
  return g;
}

struct Model {
  FeatureSpec spec;
  VectorXd w;
  double b = 0.0;

  // Zero weights and bias: every pair scores 0.5.
  static Model zeros(FeatureSpec spec);

  // Throws ArgumentError when fv was computed for a different spec.
  double predict(const FeatureVector& fv) const;

  friend bool operator==(const Model&, const Model&) = default;
};

enum class NegativeSampling { RandomResponse };

struct TrainingConfig {
  double margin = 0.1;
  double learning_rate = 0.1;
  int epochs = 20;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  NegativeSampling negative_sampling = NegativeSampling::RandomResponse;

  void validate() const;
};

// Adam with bias correction over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon);
  void step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& gradient);
  long steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, epsilon_;
  VectorXd m_, v_;
  long t_ = 0;
};

struct TrainingResult {
  Model model;
  std::vector<double> epoch_mean_loss;
};

// Features for (context of pair i, response of pair j). Called with i == j for
// true responses and i != j for sampled negatives.
using PairFeaturizer = std::function<VectorXd(std::size_t context_index, std::size_t response_index)>;

// Stochastic (batch size 1) Adam training. Each epoch visits the pairs in a
// seeded shuffle and draws, for every pair, one negative response uniformly
// from the other pairs. Deterministic for a given seed.
TrainingResult train(std::size_t pair_count, const FeatureSpec& spec, const PairFeaturizer& featurize,
                     const TrainingConfig& config);

inline constexpr int kModelDocumentVersion = 1;

struct ModelDocument {
  Model model;
  std::optional<TrainingConfig> training_config;
  std::string train_fingerprint;
};

// JSON key-value document: version, feature_spec, weights, bias,
// training_config, train_fingerprint.
std::string serialize(const ModelDocument& document);
// Throws FormatError on unknown versions or malformed documents.
ModelDocument deserialize(std::string_view text);

}  // namespace dialeval
