#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dialeval::cli {

struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 0;

  // resources
  std::string wordnet_dir;
  std::vector<std::string> embeddings;  // DIM=PATH or PATH
  std::string stopwords;

  // features and training
  std::string spec = "ulrof1";
  double margin = 0.1;
  double learning_rate = 0.1;
  int epochs = 20;

  // external services
  std::string lt_endpoint;
  std::string acceptability_cmd;
  std::string acceptability_url;

  // inputs
  std::string format = "tsv";
  std::string preprocess = "none";
  std::string column_map;
  std::string corpus;
  std::string contexts;
  std::string responses;
  std::string annotated;
  std::string model;
  std::string features;
  std::string scores;
  std::vector<std::string> tables;
  std::optional<std::size_t> first;
  std::optional<std::size_t> last;

  // outputs
  std::string output;
  std::string output_dir;
  std::string loss_output;

  // labels and switches
  std::string source = "gold";
  std::string domain;
  std::string model_label = "ULRoF";
  std::vector<std::string> baseline_sources{"collapsed", "random", "tfidf", "gold"};
  bool true_only = false;
  bool per_rater = false;
  double alpha = 0.05;
  std::size_t tests = 0;  // 0: number of comparisons performed
  std::size_t jobs = 0;   // 0: hardware concurrency
};

// Parses `args` (without the program name), runs the subcommand and returns
// the process exit code: 0 on success, 1 on a failed run, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int execute(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace dialeval::cli
