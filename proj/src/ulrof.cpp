#include "dialeval/ulrof.hpp"

#include <numeric>
#include <random>

#include "dialeval/baselines.hpp"
#include "dialeval/fingerprint.hpp"
#include "json.hpp"

namespace dialeval {

Model Model::zeros(FeatureSpec spec) {
  Model model;
  model.w = VectorXd::Zero(Eigen::Index(spec.size()));
  model.spec = std::move(spec);
  return model;
}

double Model::predict(const FeatureVector& fv) const {
  if (!(fv.spec == spec)) {
    throw ArgumentError("feature spec mismatch: model uses [" + spec.joined() + "], features are [" +
                        fv.spec.joined() + "]");
  }
  return dialeval::predict(w, b, fv.values);
}

void TrainingConfig::validate() const {
  if (!(margin > 0.0 && margin <= 1.0)) throw ArgumentError("margin must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ArgumentError("Adam epsilon must be positive");
}

AdamOptimizer::AdamOptimizer(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), epsilon_(epsilon), m_(VectorXd::Zero(size)),
      v_(VectorXd::Zero(size)) {}

void AdamOptimizer::step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& gradient) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * gradient;
  v_ = beta2_ * v_ + (1.0 - beta2_) * gradient.cwiseProduct(gradient);
  const double m_correction = 1.0 - std::pow(beta1_, double(t_));
  const double v_correction = 1.0 - std::pow(beta2_, double(t_));
  params.array() -= lr_ * (m_.array() / m_correction) / ((v_.array() / v_correction).sqrt() + epsilon_);
}

TrainingResult train(std::size_t pair_count, const FeatureSpec& spec, const PairFeaturizer& featurize,
                     const TrainingConfig& config) {
  config.validate();
  if (pair_count < 2) throw ArgumentError("training needs at least two pairs to sample negatives");

  TrainingResult result{Model::zeros(spec), {}};
  if (config.epochs == 0) return result;

  const auto k = Eigen::Index(spec.size());
  std::vector<VectorXd> positives(pair_count);
  for (std::size_t i = 0; i < pair_count; ++i) {
    positives[i] = featurize(i, i);
    if (positives[i].size() != k) throw ArgumentError("featurizer returned a vector of the wrong length");
  }

  // Parameters packed as [w; b] for the optimizer.
  VectorXd params = VectorXd::Zero(k + 1);
  VectorXd gradient(k + 1);
  AdamOptimizer adam(k + 1, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_epsilon);
  std::vector<std::size_t> order(pair_count);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, "train/epoch/" + std::to_string(epoch)));
    std::iota(order.begin(), order.end(), std::size_t(0));
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t i : order) {
      std::size_t j = uniform_index(rng, pair_count - 1);
      if (j >= i) ++j;
      const VectorXd negative = featurize(i, j);
      const auto w = params.head(k);
      const double b = params[k];
      loss_sum += loss(predict(w, b, positives[i]), predict(w, b, negative), config.margin);
      const auto g = loss_gradient(w, b, positives[i], negative, config.margin);
      gradient.head(k) = g.w;
      gradient[k] = g.b;
      adam.step(params, gradient);
    }
    result.epoch_mean_loss.push_back(loss_sum / double(pair_count));
  }
  result.model.w = params.head(k);
  result.model.b = params[k];
  if (!result.model.w.allFinite() || !std::isfinite(result.model.b)) {
    throw NumericalDomainError("training diverged to non-finite parameters");
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string serialize(const ModelDocument& document) {
  using nlohmann::ordered_json;
  const Model& model = document.model;
  ordered_json doc;
  doc["version"] = kModelDocumentVersion;
  doc["feature_spec"] = model.spec.names();
  doc["weights"] = std::vector<double>(model.w.data(), model.w.data() + model.w.size());
  doc["bias"] = model.b;
  if (document.training_config) {
    const auto& c = *document.training_config;
    doc["training_config"] = {{"margin", c.margin},
                              {"learning_rate", c.learning_rate},
                              {"epochs", c.epochs},
                              {"adam_beta1", c.adam_beta1},
                              {"adam_beta2", c.adam_beta2},
                              {"adam_epsilon", c.adam_epsilon},
                              {"seed", c.seed},
                              {"negative_sampling", "random_response"}};
  }
  doc["train_fingerprint"] = document.train_fingerprint;
  return doc.dump(2) + "\n";
}

ModelDocument deserialize(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("model document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("model document must be an object");
  if (!doc.contains("version")) throw FormatError("model document has no 'version'");
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kModelDocumentVersion) {
    throw FormatError("unsupported model document version " + doc["version"].dump());
  }
  // Short aliases (spec, w, b) are accepted for hand-written documents.
  auto field = [&](const char* name, const char* alias) -> const nlohmann::json& {
    if (doc.contains(name)) return doc[name];
    if (doc.contains(alias)) return doc[alias];
    throw FormatError(std::string("model document has no '") + name + "'");
  };
  ModelDocument out;
  try {
    const auto& names = field("feature_spec", "spec");
    if (!names.is_array()) throw FormatError("'feature_spec' must be an array");
    std::vector<FeatureId> ids;
    for (const auto& name : names) ids.push_back(FeatureId::parse(name.get<std::string>()));
    out.model.spec = FeatureSpec(std::move(ids));
    const auto weights = field("weights", "w").get<std::vector<double>>();
    out.model.w = Eigen::Map<const VectorXd>(weights.data(), Eigen::Index(weights.size()));
    out.model.b = field("bias", "b").get<double>();
    if (doc.contains("training_config")) {
      const auto& c = doc["training_config"];
      TrainingConfig config;
      config.margin = c.at("margin").get<double>();
      config.learning_rate = c.at("learning_rate").get<double>();
      config.epochs = c.at("epochs").get<int>();
      config.adam_beta1 = c.at("adam_beta1").get<double>();
      config.adam_beta2 = c.at("adam_beta2").get<double>();
      config.adam_epsilon = c.at("adam_epsilon").get<double>();
      config.seed = c.at("seed").get<std::uint64_t>();
      out.training_config = config;
    }
    out.train_fingerprint = doc.value("train_fingerprint", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
  if (std::size_t(out.model.w.size()) != out.model.spec.size()) {
    throw FormatError("model has " + std::to_string(out.model.w.size()) + " weights for " +
                      std::to_string(out.model.spec.size()) + " features");
  }
  if (!out.model.w.allFinite() || !std::isfinite(out.model.b)) throw FormatError("model parameters must be finite");
  return out;
}

}  // namespace dialeval
