#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dialeval/baselines.hpp"
#include "dialeval/error.hpp"

using namespace dialeval;
using Tokens = std::vector<std::string>;

TEST_CASE("collapsed baseline") {
  CHECK(collapsed_respond() == "I don't know");
  const std::string ctx[] = {"where is the car?"};
  CHECK(collapsed_respond(ctx) == "I don't know");
  std::set<std::string> outputs;
  for (int i = 0; i < 100; ++i) {
    const std::string c[] = {"context " + std::to_string(i)};
    outputs.insert(collapsed_respond(c));
  }
  CHECK(outputs.size() == 1);
}

TEST_CASE("random baseline") {
  const std::vector<std::string> single = {"hi"};
  CHECK(random_respond(single, 42) == "hi");
  CHECK_THROWS_AS(random_respond(std::vector<std::string>{}, 1), ArgumentError);
  CHECK_THROWS_AS(RandomResponder({}, 1), ArgumentError);

  const std::vector<std::string> two = {"yes", "no"};
  RandomResponder a(two, 17), b(two, 17);
  for (int i = 0; i < 50; ++i) CHECK(a.respond() == b.respond());
  CHECK(random_respond(two, 5) == random_respond(two, 5));

  RandomResponder draws(two, 2024);
  int yes = 0;
  for (int i = 0; i < 10000; ++i) yes += draws.respond() == "yes";
  CHECK(std::abs(yes / 10000.0 - 0.5) <= 0.02);
}

TEST_CASE("uniform_index stays in range and covers it") {
  std::mt19937_64 rng(1);
  std::vector<int> hits(7);
  for (int i = 0; i < 7000; ++i) {
    const auto k = uniform_index(rng, 7);
    REQUIRE(k < 7);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
  CHECK_THROWS_AS(uniform_index(rng, 0), ArgumentError);
}

TEST_CASE("tfidf build") {
  const std::vector<Tokens> contexts = {{"a", "b"}, {"a", "c"}};
  const auto r = TfIdfRetriever::build(contexts, {"r1", "r2"});
  CHECK(r.size() == 2);
  CHECK(r.idf("a") == 0.0);
  CHECK(r.idf("b") == doctest::Approx(std::log(2.0)));
  CHECK(r.idf("c") == doctest::Approx(std::log(2.0)));
  CHECK(r.context_vectors().size() == r.size());

  const auto one = TfIdfRetriever::build(std::vector<Tokens>{{"x"}}, {"only"});
  CHECK(one.size() == 1);
  CHECK(one.retrieve(Tokens{"anything"}) == "only");

  CHECK_THROWS_AS(TfIdfRetriever::build(contexts, {"r1"}), ArgumentError);
  CHECK_THROWS_AS(TfIdfRetriever::build(std::vector<Tokens>{}, {}), ArgumentError);
}

TEST_CASE("tfidf retrieval") {
  const std::vector<Tokens> contexts = {{"car", "wheel", "road"}, {"movie", "film", "actor"}, {"car", "film"}};
  const auto r = TfIdfRetriever::build(contexts, {"drive", "watch", "both"});
  CHECK(r.retrieve(Tokens{"film", "actor"}) == "watch");
  CHECK(r.retrieve(Tokens{"unknown"}) == "drive");  // zero query
  for (std::size_t i = 0; i < contexts.size(); ++i) CHECK(r.nearest(contexts[i]) == i);

  // wheel and actor are equally far from a query containing both
  const auto tie = TfIdfRetriever::build(std::vector<Tokens>{{"wheel"}, {"actor"}}, {"first", "second"});
  CHECK(tie.retrieve(Tokens{"actor", "wheel"}) == "first");
}

TEST_CASE("tfidf retrieval properties") {
  std::mt19937_64 rng(77);
  const Tokens vocab = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  for (int round = 0; round < 40; ++round) {
    std::vector<Tokens> contexts;
    std::vector<std::string> responses;
    std::set<std::multiset<std::string>> seen;
    while (contexts.size() < 12) {
      Tokens ctx;
      for (int k = 0; k < 4; ++k) ctx.push_back(vocab[pick(rng)]);
      if (!seen.insert({ctx.begin(), ctx.end()}).second) continue;
      contexts.push_back(ctx);
      responses.push_back("r" + std::to_string(contexts.size()));
    }
    auto r = TfIdfRetriever::build(contexts, responses);
    for (std::size_t i = 0; i < contexts.size(); ++i) {
      if (r.vectorize(contexts[i]).nonZeros() == 0) continue;
      CHECK(r.retrieve(contexts[i]) == responses[i]);
    }
    std::vector<std::size_t> before;
    std::vector<Tokens> queries;
    for (int q = 0; q < 20; ++q) {
      Tokens query;
      for (int k = 0; k < 5; ++k) query.push_back(vocab[pick(rng)]);
      queries.push_back(query);
      before.push_back(r.nearest(query));
      std::shuffle(query.begin(), query.end(), rng);
      CHECK(r.nearest(query) == before.back());
    }
    r.scale_idf(3.5);
    for (std::size_t q = 0; q < queries.size(); ++q) CHECK(r.nearest(queries[q]) == before[q]);
  }
}
