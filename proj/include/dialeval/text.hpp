#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/lexicon.hpp"
#include "dialeval/types.hpp"

namespace dialeval {

struct Token {
  std::string surface;
  std::string stem;  // lowercased Porter stem; lowercased surface for non-alphabetic tokens
  Pos pos = Pos::Other;
  bool is_stopword = false;

  bool is_content() const { return pos != Pos::Other && !is_stopword; }
};

struct ProcessedTurn {
  std::string raw;
  std::string text;  // after postprocess_turn
  std::vector<Token> tokens;
  std::vector<Token> content_words;  // order-preserving subset of tokens
};

struct PostprocessOptions {
  bool lowercase = false;
  bool strip_dialogue_tags = true;
  bool detokenize = true;
};

// Unicode helpers (UTF-8 in, UTF-8 out).
std::string nfc_normalize(std::string_view text);
// Simple (one-to-one) lowercase mapping per code point.
std::string to_lower(std::string_view text);
bool is_punctuation(std::string_view token);
bool has_alphabetic(std::string_view token);

// Whitespace split, then leading/trailing punctuation and the clitics
// 's n't 're 've 'll 'd 'm are detached. Placeholders such as <url> and
// **unknown** survive as single tokens.
std::vector<std::string> tokenize(std::string_view text);

// Removes __eou__/__eot__ markers, re-attaches punctuation and "'s" to the
// preceding word, and optionally lowercases. Idempotent.
std::string postprocess_turn(std::string_view text, const PostprocessOptions& options = {});

// Porter (1980) stemmer, following the author's reference implementation.
// Input is expected lowercase; words containing anything other than a-z, and
// words of one or two letters, are returned unchanged.
std::string porter_stem(std::string_view word);

// Lexicon tagger: a token gets the first of Noun > Verb > Adjective > Adverb
// whose WordNet index lists its lowercased surface, else Other.
std::vector<Pos> pos_tag(std::span<const std::string> tokens, const WordNetIndex& lexicon);

std::vector<Token> content_words(const ProcessedTurn& turn);

// Postprocess, tokenize, stem, tag and stopword-mark one turn.
ProcessedTurn process_turn(std::string_view raw, const LexicalResources& resources,
                           const PostprocessOptions& options = {});

}  // namespace dialeval
