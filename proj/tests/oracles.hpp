#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance runner. Deliberately naive.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dialeval/ulrof.hpp"

namespace oracle {

using Tokens = std::vector<std::string>;

// Enumerate every n-gram position, count, clip, divide.
inline double ngram_precision(const std::vector<Tokens>& segments, const Tokens& response, int n) {
  if (int(response.size()) < n) return 0.0;
  std::vector<Tokens> grams;
  for (std::size_t i = 0; i + n <= response.size(); ++i) grams.emplace_back(response.begin() + i, response.begin() + i + n);
  auto count_in_context = [&](const Tokens& g) {
    int c = 0;
    for (const auto& seg : segments) {
      for (std::size_t i = 0; i + n <= seg.size(); ++i) {
        if (std::equal(g.begin(), g.end(), seg.begin() + i)) ++c;
      }
    }
    return c;
  };
  std::vector<Tokens> seen;
  int matched = 0;
  for (const auto& g : grams) {
    if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
    seen.push_back(g);
    const int in_response = int(std::count(grams.begin(), grams.end(), g));
    matched += std::min(in_response, count_in_context(g));
  }
  return double(matched) / double(grams.size());
}

inline Tokens random_tokens(std::mt19937_64& rng, int max_len, int alphabet = 5) {
  std::uniform_int_distribution<int> len(0, max_len), sym(0, alphabet - 1);
  Tokens out(std::size_t(len(rng)));
  for (auto& t : out) t = std::string(1, char('a' + sym(rng)));
  return out;
}

// Two-sided sign test p by walking all 2^N sign patterns and summing the
// probability of those at least as extreme as the observed one.
inline double sign_test_p(unsigned n_positive, unsigned n_negative) {
  const unsigned n = n_positive + n_negative;
  const unsigned observed = std::min(n_positive, n_negative);
  std::uint64_t extreme = 0;
  for (std::uint64_t pattern = 0; pattern < (std::uint64_t(1) << n); ++pattern) {
    const unsigned ones = unsigned(__builtin_popcountll(pattern));
    if (std::min(ones, n - ones) <= observed) ++extreme;
  }
  return std::min(1.0, double(extreme) / double(std::uint64_t(1) << n));
}

struct GradientCheck {
  bool near_kink = false;  // skipped configuration
  double relative_error = 0.0;
};

// Central differences of the loss in long double against the analytic gradient.
inline GradientCheck check_gradient(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& f_pos,
                                    const Eigen::VectorXd& f_neg, double margin, double h = 1e-5) {
  using LD = long double;
  using VectorLD = Eigen::Matrix<LD, Eigen::Dynamic, 1>;
  const VectorLD fp = f_pos.cast<LD>(), fn = f_neg.cast<LD>();
  auto loss_at = [&](const VectorLD& wl, LD bl) {
    return dialeval::loss(dialeval::predict(wl, bl, fp), dialeval::predict(wl, bl, fn), LD(margin));
  };
  const VectorLD wl = w.cast<LD>();
  const LD raw = dialeval::predict(wl, LD(b), fp) - dialeval::predict(wl, LD(b), fn) + LD(margin);
  if (std::fabs(double(raw)) < 1e-4) return {true, 0.0};

  const auto g = dialeval::loss_gradient(w, b, f_pos, f_neg, margin);
  Eigen::VectorXd analytic(w.size() + 1), numeric(w.size() + 1);
  analytic << g.w, g.b;
  for (Eigen::Index k = 0; k <= w.size(); ++k) {
    VectorLD up = wl, down = wl;
    LD b_up = b, b_down = b;
    if (k < w.size()) {
      up[k] += h;
      down[k] -= h;
    } else {
      b_up += h;
      b_down -= h;
    }
    numeric[k] = double((loss_at(up, b_up) - loss_at(down, b_down)) / (2 * LD(h)));
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  const double diff = (analytic - numeric).norm();
  return {false, (analytic.norm() == 0.0 && numeric.norm() < 1e-12) ? 0.0 : diff / scale};
}

}  // namespace oracle
