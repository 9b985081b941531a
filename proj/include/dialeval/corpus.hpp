#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/error.hpp"

namespace dialeval {

struct DialoguePair {
  std::string id;
  std::vector<std::string> context_turns;  // a turn may hold several __eou__-separated utterances
  std::string response;
  std::string source_label = "gold";
  bool degenerate = false;  // response empty after post-processing, or no context
};

enum class CorpusFormat { TabSeparated, JsonLines };
enum class Preprocessing { None, Ubuntu, Twitter };

// TabSeparated: `context TAB response` per line, context turns separated by
// __eot__. JsonLines: {"context": [...], "response": "...", "id": ...}.
// Ids default to the 1-based line number.
std::vector<DialoguePair> load_dialogue_corpus(const std::filesystem::path& path, CorpusFormat format,
                                               Preprocessing preprocessing, std::string_view source_label = "gold");
std::vector<DialoguePair> parse_dialogue_corpus(std::istream& in, std::string_view name, CorpusFormat format,
                                                Preprocessing preprocessing, std::string_view source_label = "gold");

// Splits a TabSeparated context field into turns; a trailing __eou__ on each
// turn is dropped and empty turns are skipped.
std::vector<std::string> split_turns(std::string_view context_field);

// URLs -> <url>, @mentions -> <at>, emoticons from emoticon_table() removed.
std::string twitter_preprocess(std::string_view text);
std::span<const std::string_view> emoticon_table();

// Writes pairs back in TabSeparated form (turns joined by " __eot__ ").
void write_tab_separated(std::ostream& out, std::span<const DialoguePair> pairs);

struct AnnotatedDialogue {
  std::string id;
  std::vector<std::string> context_turns;
  std::string true_response;
  std::string random_response;
  std::array<int, 3> true_ratings{};
  std::array<int, 3> random_ratings{};

  double mean_true_rating() const { return (true_ratings[0] + true_ratings[1] + true_ratings[2]) / 3.0; }
  double mean_random_rating() const { return (random_ratings[0] + random_ratings[1] + random_ratings[2]) / 3.0; }
};

// Maps the fields of AnnotatedDialogue to CSV header names. Read from a
// `key = column name` file; see data/humod.columns.
struct ColumnMap {
  std::string id;  // optional; row number when empty
  std::string context;
  std::string true_response;
  std::string random_response;
  std::array<std::string, 3> true_ratings;
  std::array<std::string, 3> random_ratings;
  std::string context_separator = "\n";
  char delimiter = ',';

  static ColumnMap parse(std::string_view text);
  static ColumnMap load(const std::filesystem::path& path);
};

// RFC 4180 records (quoted fields may span lines). Each record carries the
// line it started on.
struct CsvRecord {
  std::size_t line;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> read_csv(std::istream& in, char delimiter = ',');

std::vector<AnnotatedDialogue> load_annotated(const std::filesystem::path& path, const ColumnMap& columns);
std::vector<AnnotatedDialogue> parse_annotated(std::istream& in, const ColumnMap& columns);

struct SplitSpec {
  std::size_t train_count = 7500;
  std::size_t valid_count = 1000;
  std::size_t test_count = 1000;
};

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> valid;
  std::vector<T> test;
};

// Train is the first train_count records, valid the next valid_count, and
// test the final test_count records of the input.
template <typename T>
Splits<T> split(std::span<const T> records, const SplitSpec& spec) {
  const std::size_t needed = spec.train_count + spec.valid_count + spec.test_count;
  if (needed > records.size()) {
    throw ArgumentError("split needs " + std::to_string(needed) + " records, corpus has " +
                        std::to_string(records.size()));
  }
  Splits<T> out;
  const auto begin = records.begin();
  out.train.assign(begin, begin + spec.train_count);
  out.valid.assign(begin + spec.train_count, begin + spec.train_count + spec.valid_count);
  out.test.assign(records.end() - spec.test_count, records.end());
  return out;
}

}  // namespace dialeval
