#include "dialeval/lexicon.hpp"

#include <charconv>
#include <fstream>

#include "dialeval/text.hpp"

namespace dialeval {

extern const std::string_view kClassicStopwords;

namespace {

constexpr std::array<std::string_view, 4> kWordNetSuffix = {"noun", "verb", "adj", "adv"};

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\r')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view field = line.substr(pos, end - pos);
    if (!field.empty() && field.back() == '\r') field.remove_suffix(1);
    if (!field.empty()) fields.push_back(field);
    pos = end;
  }
  return fields;
}

template <typename Int>
bool parse_int(std::string_view text, Int& out, int base = 10) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, base);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open " + path.filename().string() + " (" + path.string() + ")");
  return in;
}

// Adjective lemmas in data.adj may carry a syntactic marker: "(a)", "(p)" or "(ip)".
std::string_view strip_adjective_marker(std::string_view lemma) {
  if (lemma.size() > 2 && lemma.back() == ')') {
    auto open = lemma.rfind('(');
    if (open != std::string_view::npos && open > 0) return lemma.substr(0, open);
  }
  return lemma;
}

void read_data_file(const std::filesystem::path& path, Pos pos, WordNetIndex& index) {
  auto in = open_or_throw(path);
  const std::string name = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> lemmas;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("  ", 0) == 0) continue;
    auto f = split_spaces(line);
    if (f.empty()) continue;
    std::uint64_t offset = 0;
    unsigned word_count = 0;
    if (f.size() < 4 || !parse_int(f[0], offset) || !parse_int(f[3], word_count, 16)) {
      throw ParseError(name, line_no, "malformed synset header");
    }
    if (f.size() < 4 + 2 * std::size_t(word_count)) {
      throw ParseError(name, line_no, "synset lists fewer lemmas than its word count");
    }
    lemmas.clear();
    for (unsigned i = 0; i < word_count; ++i) {
      lemmas.push_back(to_lower(strip_adjective_marker(f[4 + 2 * i])));
    }
    index.add_synset(pos, offset, lemmas);
  }
}

void read_index_file(const std::filesystem::path& path, Pos pos, WordNetIndex& index) {
  auto in = open_or_throw(path);
  const std::string name = path.filename().string();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("  ", 0) == 0) continue;
    auto f = split_spaces(line);
    if (f.empty()) continue;
    std::size_t synset_count = 0;
    std::size_t pointer_count = 0;
    if (f.size() < 4 || !parse_int(f[2], synset_count) || !parse_int(f[3], pointer_count)) {
      throw ParseError(name, line_no, "malformed index entry");
    }
    const std::size_t first_offset = 4 + pointer_count + 2;
    if (f.size() != first_offset + synset_count) {
      throw ParseError(name, line_no, "index entry field count does not match its counts");
    }
    const std::string lemma = to_lower(f[0]);
    for (std::size_t i = 0; i < synset_count; ++i) {
      std::uint64_t offset = 0;
      if (!parse_int(f[first_offset + i], offset)) {
        throw ParseError(name, line_no, "bad synset offset '" + std::string(f[first_offset + i]) + "'");
      }
      std::string one[] = {lemma};
      index.add_synset(pos, offset, one);
    }
  }
}

}  // namespace

std::size_t WordNetIndex::slot(Pos pos) {
  switch (pos) {
    case Pos::Noun: return 0;
    case Pos::Verb: return 1;
    case Pos::Adjective: return 2;
    case Pos::Adverb: return 3;
    case Pos::Other: break;
  }
  throw ArgumentError("WordNet has no entries for part of speech 'other'");
}

WordNetIndex WordNetIndex::load(const std::filesystem::path& directory) {
  WordNetIndex index;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto suffix = std::string(kWordNetSuffix[i]);
    read_data_file(directory / ("data." + suffix), kOpenClasses[i], index);
    read_index_file(directory / ("index." + suffix), kOpenClasses[i], index);
  }
  return index;
}

void WordNetIndex::link(std::size_t s, const std::string& lemma, std::uint64_t offset) {
  auto& synsets = lemma_synsets_[s][lemma];
  if (std::find(synsets.begin(), synsets.end(), offset) == synsets.end()) synsets.push_back(offset);
  auto& lemmas = synset_lemmas_[s][offset];
  if (std::find(lemmas.begin(), lemmas.end(), lemma) == lemmas.end()) lemmas.push_back(lemma);
}

void WordNetIndex::add_synset(Pos pos, std::uint64_t offset, std::span<const std::string> lemmas) {
  const std::size_t s = slot(pos);
  synset_lemmas_[s].try_emplace(offset);
  for (const auto& lemma : lemmas) link(s, to_lower(lemma), offset);
}

std::set<std::string> WordNetIndex::synonyms(std::string_view word, Pos pos) const {
  std::set<std::string> out;
  if (pos == Pos::Other) return out;
  const std::size_t s = slot(pos);
  auto it = lemma_synsets_[s].find(std::string(word));
  if (it == lemma_synsets_[s].end()) return out;
  for (auto offset : it->second) {
    const auto& lemmas = synset_lemmas_[s].at(offset);
    out.insert(lemmas.begin(), lemmas.end());
  }
  return out;
}

bool WordNetIndex::has_synonym_in(std::string_view word, Pos pos,
                                  const std::unordered_set<std::string>& surfaces) const {
  if (pos == Pos::Other) return false;
  const std::size_t s = slot(pos);
  auto it = lemma_synsets_[s].find(std::string(word));
  if (it == lemma_synsets_[s].end()) return false;
  for (auto offset : it->second) {
    for (const auto& lemma : synset_lemmas_[s].at(offset)) {
      if (surfaces.contains(lemma)) return true;
    }
  }
  return false;
}

bool WordNetIndex::contains(std::string_view lemma, Pos pos) const {
  if (pos == Pos::Other) return false;
  return lemma_synsets_[slot(pos)].contains(std::string(lemma));
}

std::size_t WordNetIndex::lemma_count(Pos pos) const { return lemma_synsets_[slot(pos)].size(); }

std::size_t WordNetIndex::synset_count(Pos pos) const { return synset_lemmas_[slot(pos)].size(); }

// ---------------------------------------------------------------------------

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::optional<int> expected_dim) {
  if (expected_dim && *expected_dim <= 0) {
    throw ConfigError("embedding dimension must be positive, got " + std::to_string(*expected_dim));
  }
  auto in = open_or_throw(path);
  const std::string name = path.filename().string();
  EmbeddingTable table(expected_dim.value_or(0));
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_spaces(line);
    if (f.size() < 2) throw ParseError(name, line_no, "row has no vector components");
    std::size_t components = f.size() - 1;
    // A few published tables contain tokens with embedded spaces; with a known
    // dimension the trailing `dim` fields are the vector.
    std::size_t token_fields = 1;
    if (table.dim_ > 0 && components > std::size_t(table.dim_)) {
      token_fields = f.size() - table.dim_;
      float probe = 0.0f;
      const bool numeric_surplus = std::all_of(f.begin() + 1, f.begin() + std::ptrdiff_t(token_fields), [&](auto field) {
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), probe);
        return ec == std::errc() && ptr == field.data() + field.size();
      });
      if (numeric_surplus) {
        if (table.empty()) {
          throw ConfigError(name + " has " + std::to_string(components) + "-dimensional vectors, expected " +
                            std::to_string(table.dim_));
        }
        throw ParseError(name, line_no,
                         "expected " + std::to_string(table.dim_) + " components, found " + std::to_string(components));
      }
      components = table.dim_;
    }
    if (table.dim_ == 0) table.dim_ = int(components);
    if (components != std::size_t(table.dim_)) {
      throw ParseError(name, line_no,
                       "expected " + std::to_string(table.dim_) + " components, found " +
                           std::to_string(components));
    }
    values.resize(components);
    for (std::size_t i = 0; i < components; ++i) {
      std::string_view field = f[token_fields + i];
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), values[i]);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(name, line_no, "bad number '" + std::string(field) + "'");
      }
    }
    std::string token(f[0]);
    for (std::size_t i = 1; i < token_fields; ++i) token.append(" ").append(f[i]);
    table.insert(token, values);
  }
  return table;
}

bool EmbeddingTable::insert(std::string_view token, std::span<const float> values) {
  if (dim_ == 0) dim_ = int(values.size());
  if (values.size() != std::size_t(dim_)) {
    throw ArgumentError("embedding for '" + std::string(token) + "' has " +
                        std::to_string(values.size()) + " components, table dimension is " +
                        std::to_string(dim_));
  }
  auto [it, inserted] = rows_.try_emplace(to_lower(token), rows_.size());
  if (inserted) data_.insert(data_.end(), values.begin(), values.end());
  return inserted;
}

std::optional<EmbeddingTable::ConstRow> EmbeddingTable::find(std::string_view token) const {
  auto it = rows_.find(to_lower(token));
  if (it == rows_.end()) return std::nullopt;
  return ConstRow(data_.data() + it->second * dim_, dim_);
}

// ---------------------------------------------------------------------------

StopwordList::StopwordList(std::span<const std::string> words) {
  for (const auto& w : words) words_.insert(to_lower(w));
}

StopwordList StopwordList::parse(std::string_view text) {
  StopwordList list;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) list.words_.insert(to_lower(line));
    pos = end + 1;
  }
  return list;
}

StopwordList StopwordList::load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

const StopwordList& StopwordList::classic() {
  static const StopwordList list = parse(kClassicStopwords);
  return list;
}

bool StopwordList::contains(std::string_view word) const { return words_.contains(to_lower(word)); }

}  // namespace dialeval
