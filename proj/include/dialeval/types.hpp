#pragma once

#include <Eigen/Core>

#include <string_view>

namespace dialeval {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using VectorXd = Vector<double>;

// Coarse part of speech. Only the four open classes matter for content-word
// filtering; everything else, punctuation included, is Other.
enum class Pos { Noun, Verb, Adjective, Adverb, Other };

inline constexpr Pos kOpenClasses[] = {Pos::Noun, Pos::Verb, Pos::Adjective, Pos::Adverb};

constexpr std::string_view to_string(Pos pos) {
  switch (pos) {
    case Pos::Noun: return "noun";
    case Pos::Verb: return "verb";
    case Pos::Adjective: return "adj";
    case Pos::Adverb: return "adv";
    case Pos::Other: break;
  }
  return "other";
}

}  // namespace dialeval
