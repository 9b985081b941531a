#include "dialeval/text.hpp"

#include <algorithm>
#include <array>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace dialeval {

namespace {

struct CodePoint {
  UChar32 value;
  std::size_t begin;
  std::size_t end;
};

std::vector<CodePoint> decode(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const int32_t length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t begin = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) c = 0xFFFD;
    out.push_back({c, std::size_t(begin), std::size_t(i)});
  }
  return out;
}

bool is_punct_cp(UChar32 c) {
  if (u_ispunct(c)) return true;
  switch (u_charType(c)) {
    case U_MATH_SYMBOL:
    case U_CURRENCY_SYMBOL:
    case U_MODIFIER_SYMBOL:
    case U_OTHER_SYMBOL: return true;
    default: return false;
  }
}

bool is_space_cp(UChar32 c) { return u_isUWhiteSpace(c); }

constexpr std::array<std::string_view, 7> kClitics = {"n't", "'s", "'re", "'ve", "'ll", "'d", "'m"};

// Canonical ASCII form of a possible clitic (curly apostrophe folded).
std::string fold_apostrophe(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    }
  }
  return out;
}

bool is_clitic(std::string_view s) {
  const auto folded = fold_apostrophe(s);
  return std::find(kClitics.begin(), kClitics.end(), folded) != kClitics.end();
}

// Byte length of a clitic at the end of `word`, or 0. The clitic must leave a
// non-empty head.
std::size_t clitic_suffix(std::string_view word) {
  for (std::string_view clitic : kClitics) {
    for (bool curly : {false, true}) {
      std::string form(clitic);
      if (curly) {
        auto apos = form.find('\'');
        form.replace(apos, 1, "\xE2\x80\x99");
      }
      if (word.size() > form.size()) {
        std::string tail = fold_apostrophe(word.substr(word.size() - form.size()));
        if (tail == clitic) return form.size();
      }
    }
  }
  return 0;
}

bool is_placeholder(std::string_view chunk) {
  if (chunk == "**unknown**") return true;
  if (chunk.size() < 3 || chunk.front() != '<' || chunk.back() != '>') return false;
  return std::all_of(chunk.begin() + 1, chunk.end() - 1,
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  if (is_placeholder(chunk) || is_clitic(chunk)) {
    out.emplace_back(chunk);
    return;
  }
  auto cps = decode(chunk);
  std::size_t lo = 0;
  std::size_t hi = cps.size();
  // Leading punctuation, one run of identical characters at a time.
  while (lo < hi && is_punct_cp(cps[lo].value)) {
    std::size_t run = lo + 1;
    while (run < hi && cps[run].value == cps[lo].value) ++run;
    out.emplace_back(chunk.substr(cps[lo].begin, cps[run - 1].end - cps[lo].begin));
    lo = run;
  }
  std::vector<std::string> trailing;
  while (hi > lo && is_punct_cp(cps[hi - 1].value)) {
    std::size_t run = hi - 1;
    while (run > lo && cps[run - 1].value == cps[hi - 1].value) --run;
    trailing.emplace_back(chunk.substr(cps[run].begin, cps[hi - 1].end - cps[run].begin));
    hi = run;
  }
  if (lo < hi) {
    std::string_view word = chunk.substr(cps[lo].begin, cps[hi - 1].end - cps[lo].begin);
    if (std::size_t n = clitic_suffix(word); n > 0) {
      out.emplace_back(word.substr(0, word.size() - n));
      out.emplace_back(word.substr(word.size() - n));
    } else {
      out.emplace_back(word);
    }
  }
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

std::vector<std::string_view> split_whitespace(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t start = std::string_view::npos;
  for (const auto& cp : decode(text)) {
    if (is_space_cp(cp.value)) {
      if (start != std::string_view::npos) chunks.push_back(text.substr(start, cp.begin - start));
      start = std::string_view::npos;
    } else if (start == std::string_view::npos) {
      start = cp.begin;
    }
  }
  if (start != std::string_view::npos) chunks.push_back(text.substr(start));
  return chunks;
}

bool attaches_left(std::string_view token) {
  if (fold_apostrophe(token) == "'s") return true;
  constexpr std::string_view closing = ".,!?;:)]}%";
  return !token.empty() && token.find_first_not_of(closing) == std::string_view::npos;
}

}  // namespace

std::string nfc_normalize(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(text);
  auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), int32_t(text.size())));
  if (nfc->isNormalized(source, status) && U_SUCCESS(status)) return std::string(text);
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = nfc->normalize(source, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  if (std::all_of(text.begin(), text.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; })) {
    for (char c : text) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
  }
  for (const auto& cp : decode(text)) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, u_tolower(cp.value));
    out.append(reinterpret_cast<const char*>(buf), n);
  }
  return out;
}

bool is_punctuation(std::string_view token) {
  if (token.empty()) return false;
  auto cps = decode(token);
  return std::all_of(cps.begin(), cps.end(), [](const CodePoint& cp) { return is_punct_cp(cp.value); });
}

bool has_alphabetic(std::string_view token) {
  auto cps = decode(token);
  return std::any_of(cps.begin(), cps.end(), [](const CodePoint& cp) { return u_isalpha(cp.value); });
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::string normalized = nfc_normalize(text);
  std::vector<std::string> tokens;
  for (auto chunk : split_whitespace(normalized)) split_chunk(chunk, tokens);
  return tokens;
}

std::string postprocess_turn(std::string_view text, const PostprocessOptions& options) {
  std::string out;
  out.reserve(text.size());
  for (auto piece : split_whitespace(text)) {
    if (options.strip_dialogue_tags && (piece == "__eou__" || piece == "__eot__")) continue;
    if (!out.empty() && !(options.detokenize && attaches_left(piece))) out.push_back(' ');
    out.append(piece);
  }
  return options.lowercase ? to_lower(out) : out;
}

std::vector<Pos> pos_tag(std::span<const std::string> tokens, const WordNetIndex& lexicon) {
  std::vector<Pos> tags;
  tags.reserve(tokens.size());
  for (const auto& token : tokens) {
    Pos tag = Pos::Other;
    if (!is_punctuation(token)) {
      const std::string key = to_lower(token);
      for (Pos pos : kOpenClasses) {
        if (lexicon.contains(key, pos)) {
          tag = pos;
          break;
        }
      }
    }
    tags.push_back(tag);
  }
  return tags;
}

std::vector<Token> content_words(const ProcessedTurn& turn) {
  std::vector<Token> out;
  std::copy_if(turn.tokens.begin(), turn.tokens.end(), std::back_inserter(out),
               [](const Token& t) { return t.is_content(); });
  return out;
}

ProcessedTurn process_turn(std::string_view raw, const LexicalResources& resources,
                           const PostprocessOptions& options) {
  ProcessedTurn turn;
  turn.raw = std::string(raw);
  turn.text = postprocess_turn(raw, options);
  const auto surfaces = tokenize(turn.text);
  const auto tags = pos_tag(surfaces, resources.wordnet);
  turn.tokens.reserve(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    Token token;
    token.surface = surfaces[i];
    const std::string lower = to_lower(surfaces[i]);
    token.stem = porter_stem(lower);
    token.pos = tags[i];
    token.is_stopword = resources.stopwords.contains(lower);
    turn.tokens.push_back(std::move(token));
  }
  turn.content_words = content_words(turn);
  return turn;
}

}  // namespace dialeval
