#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "dialeval/ulrof.hpp"
#include "oracles.hpp"

using namespace dialeval;

namespace {

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(Eigen::Index(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

FeatureVector features(const FeatureSpec& spec, std::initializer_list<double> values) { return {spec, vec(values)}; }

// Pair i's true response has feature 1; any other response has feature 0.
VectorXd separable(std::size_t c, std::size_t r) { return vec({c == r ? 1.0 : 0.0}); }

}  // namespace

TEST_CASE("predict") {
  const auto spec = FeatureSpec::parse_list("Ack");
  auto model = Model::zeros(spec);
  CHECK(model.predict(features(spec, {0.7})) == 0.5);
  model.w = vec({1.0});
  CHECK(model.predict(features(spec, {0.0})) == 0.5);
  model.w = vec({2.0});
  model.b = -1.0;
  CHECK(model.predict(features(spec, {1.0})) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK_THROWS_AS(model.predict(features(FeatureSpec::parse_list("NgramPrec(2)"), {1.0})), ArgumentError);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("triplet term and loss") {
  CHECK(triplet_term(0.2, 0.9, 0.1) == 0.0);
  CHECK(triplet_term(0.9, 0.2, 0.1) == doctest::Approx(0.8));
  CHECK(triplet_term(0.4, 0.4, 0.0) == 0.0);
  CHECK(triplet_log_loss(0.1, 0.1) == 0.0);
  CHECK(triplet_log_loss(0.0, 0.1) == doctest::Approx(-0.09531).epsilon(1e-4));
  CHECK(triplet_log_loss(0.8, 0.1) == doctest::Approx(1.2040).epsilon(1e-4));
  CHECK_THROWS_AS(triplet_log_loss(1.2, 0.1), NumericalDomainError);
}

TEST_CASE("loss bounds and monotonicity") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(1e-6, 1.0 - 1e-6), margin_dist(1e-3, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double m = margin_dist(rng), yp = unit(rng), yn = unit(rng);
    const double l = loss(yp, yn, m);
    CHECK(std::isfinite(l));
    CHECK(l >= -std::log1p(m) - 1e-15);
    // 1 + m - L_t = 1 - y_pos + y_neg whenever the hinge is active, which can
    // approach 0, so the loss has no finite upper bound tied to m alone.
    if (triplet_term(yp, yn, m) > 0.0) CHECK(l == doctest::Approx(-std::log(1.0 - yp + yn)).epsilon(1e-12));
    const double yp2 = std::min(yp + unit(rng) * (1.0 - yp), 1.0 - 1e-9);
    CHECK(loss(yp2, yn, m) >= l);
  }
}

TEST_CASE("swapping a satisfied triplet never lowers the loss") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> weight(-1.0, 1.0), unit(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const VectorXd w = vec({weight(rng) * 4, weight(rng) * 4});
    const double b = weight(rng), m = 0.05 + 0.9 * unit(rng);
    const VectorXd fp = vec({unit(rng), unit(rng)}), fn = vec({unit(rng), unit(rng)});
    const double yp = predict(w, b, fp), yn = predict(w, b, fn);
    if (triplet_term(yp, yn, m) > 0.0) continue;
    ++checked;
    CHECK(loss(yn, yp, m) >= loss(yp, yn, m));
  }
  CHECK(checked > 100);
}

TEST_CASE("loss gradient examples") {
  const auto g = loss_gradient(vec({0.0}), 0.0, vec({1.0}), vec({0.0}), 0.5);
  CHECK(g.w[0] == doctest::Approx(0.25));
  CHECK(g.b == doctest::Approx(0.0));
  const auto inactive = loss_gradient(vec({-5.0}), 0.0, vec({1.0}), vec({0.0}), 0.1);
  CHECK(inactive.w.isZero(0.0));
  CHECK(inactive.b == 0.0);
}

TEST_CASE("loss gradient matches finite differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> weight(-1.0, 1.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(1, 5);
  int accepted = 0, active = 0;
  while (accepted < 200) {
    const int k = size(rng);
    VectorXd w(k), fp(k), fn(k);
    for (int i = 0; i < k; ++i) {
      w[i] = weight(rng);
      fp[i] = unit(rng);
      fn[i] = unit(rng);
    }
    const double b = weight(rng), m = 0.01 + 0.99 * unit(rng);
    const auto check = oracle::check_gradient(w, b, fp, fn, m);
    if (check.near_kink) continue;
    ++accepted;
    if (loss_gradient(w, b, fp, fn, m).w.norm() > 0) ++active;
    CHECK(check.relative_error <= 1e-6);
  }
  CHECK(active > 100);
}

TEST_CASE("Adam first step moves each parameter by the learning rate") {
  AdamOptimizer adam(3, 0.1, 0.9, 0.999, 1e-8);
  VectorXd params = VectorXd::Zero(3);
  adam.step(params, vec({2.0, -0.5, 0.0}));
  CHECK(params[0] == doctest::Approx(-0.1));
  CHECK(params[1] == doctest::Approx(0.1));
  CHECK(params[2] == 0.0);
  CHECK(adam.steps() == 1);
}

TEST_CASE("training") {
  const auto spec = FeatureSpec::parse_list("Ack");
  TrainingConfig config;
  config.seed = 5;

  SUBCASE("zero epochs returns the initialization") {
    config.epochs = 0;
    const auto result = train(10, spec, separable, config);
    CHECK(result.model == Model::zeros(spec));
    CHECK(result.epoch_mean_loss.empty());
  }
  SUBCASE("separable data yields a negative weight") {
    const auto result = train(200, spec, separable, config);
    CHECK(result.model.w[0] < 0.0);
    CHECK(result.epoch_mean_loss.size() == 20);
    CHECK(result.epoch_mean_loss.back() < result.epoch_mean_loss.front());
  }
  SUBCASE("deterministic for a seed") {
    auto varied = [](std::size_t c, std::size_t r) { return vec({c == r ? 1.0 : double(r % 3) / 3.0}); };
    const auto a = train(50, spec, varied, config);
    const auto b = train(50, spec, varied, config);
    CHECK(a.model == b.model);
    CHECK(a.epoch_mean_loss == b.epoch_mean_loss);
    CHECK(serialize({a.model, config, "x"}) == serialize({b.model, config, "x"}));
    config.seed = 6;
    CHECK_FALSE(train(50, spec, varied, config).epoch_mean_loss == a.epoch_mean_loss);
  }
  SUBCASE("negatives never reuse the pair's own response") {
    bool self = false;
    train(7, spec, [&](std::size_t c, std::size_t r) {
      static thread_local std::size_t calls = 0;
      if (++calls > 7 && c == r) self = true;
      return separable(c, r);
    }, config);
    CHECK_FALSE(self);
  }
  SUBCASE("argument checks") {
    CHECK_THROWS_AS(train(1, spec, separable, config), ArgumentError);
    config.margin = 0.0;
    CHECK_THROWS_AS(train(10, spec, separable, config), ArgumentError);
    config.margin = 1.5;
    CHECK_THROWS_AS(train(10, spec, separable, config), ArgumentError);
  }
}

TEST_CASE("model documents") {
  Model model;
  model.spec = FeatureSpec::ulrof1();
  model.w = vec({-1.25, 0.5, 1e-17, -3.0000000000000004});
  model.b = 0.1;
  TrainingConfig config;
  config.seed = 123456789012345ULL;
  const auto text = serialize({model, config, "abcd"});
  const auto back = deserialize(text);
  CHECK(back.model == model);
  CHECK(back.train_fingerprint == "abcd");
  REQUIRE(back.training_config);
  CHECK(back.training_config->seed == config.seed);
  CHECK(serialize(back) == text);

  CHECK_THROWS_AS(deserialize(R"({"feature_spec": ["Ack"], "weights": [1], "bias": 0})"), FormatError);
  CHECK_THROWS_AS(deserialize(R"({"version": 2, "feature_spec": ["Ack"], "weights": [1], "bias": 0})"), FormatError);
  CHECK_THROWS_AS(deserialize(R"({"version": 1, "feature_spec": ["Ack"], "weights": [1, 2], "bias": 0})"), FormatError);
  CHECK_THROWS_AS(deserialize(R"({"version": 1, "feature_spec": ["Nope"], "weights": [1], "bias": 0})"), FormatError);
  CHECK_THROWS_AS(deserialize("not json"), FormatError);

  const auto hand = deserialize(R"({"version": 1, "spec": ["Ack"], "w": [-1.5], "b": 0.2})");
  const auto spec = FeatureSpec::parse_list("Ack");
  CHECK(hand.model.predict({spec, vec({0.6})}) == doctest::Approx(sigmoid(-1.5 * 0.6 + 0.2)));
}
