#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "CLI11.hpp"
#include "dialeval/baselines.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/feature_table.hpp"
#include "dialeval/features.hpp"
#include "dialeval/fingerprint.hpp"
#include "dialeval/parallel.hpp"
#include "dialeval/stats.hpp"
#include "dialeval/ulrof.hpp"
#include "json.hpp"

namespace dialeval::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Error raised inside a named stage of a run.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::exception& cause)
      : Error(stage + ": " + cause.what()) {}
};

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e);
  }
}

// Outputs are written to temporary siblings and renamed into place by
// commit(); anything not committed is removed on destruction.
class OutputFiles {
 public:
  OutputFiles() = default;
  OutputFiles(const OutputFiles&) = delete;
  OutputFiles& operator=(const OutputFiles&) = delete;
  ~OutputFiles() {
    std::error_code ec;
    for (const auto& [target, temp] : pending_) fs::remove(temp, ec);
  }

  std::ofstream open(const fs::path& target) {
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path temp = target;
    temp += ".tmp-" + std::to_string(::getpid());
    pending_.emplace_back(target, temp);
    std::ofstream out(temp, std::ios::binary);
    if (!out) throw ResourceError("cannot write " + target.string());
    return out;
  }

  void commit() {
    for (const auto& [target, temp] : pending_) fs::rename(temp, target);
    pending_.clear();
  }

 private:
  std::vector<std::pair<fs::path, fs::path>> pending_;
};

void close_checked(std::ofstream& out, const std::string& what) {
  out.close();
  if (!out) throw ResourceError("failed writing " + what);
}

std::size_t worker_count(const RunConfig& config) {
  if (config.jobs > 0) return config.jobs;
  return std::max(1u, std::thread::hardware_concurrency());
}

CorpusFormat parse_format(const std::string& name) {
  if (name == "tsv") return CorpusFormat::TabSeparated;
  if (name == "jsonl") return CorpusFormat::JsonLines;
  throw ConfigError("unknown corpus format '" + name + "' (expected tsv or jsonl)");
}

Preprocessing parse_preprocessing(const std::string& name) {
  if (name == "none") return Preprocessing::None;
  if (name == "ubuntu") return Preprocessing::Ubuntu;
  if (name == "twitter") return Preprocessing::Twitter;
  throw ConfigError("unknown preprocessing '" + name + "' (expected none, ubuntu or twitter)");
}

template <typename T>
std::vector<T> slice(std::vector<T> records, const RunConfig& config) {
  if (config.first && config.last) throw ConfigError("--first and --last are mutually exclusive");
  if (config.first) {
    if (*config.first > records.size()) {
      throw ConfigError("--first " + std::to_string(*config.first) + " exceeds " + std::to_string(records.size()) + " records");
    }
    records.resize(*config.first);
  } else if (config.last) {
    if (*config.last > records.size()) {
      throw ConfigError("--last " + std::to_string(*config.last) + " exceeds " + std::to_string(records.size()) + " records");
    }
    records.erase(records.begin(), records.end() - std::ptrdiff_t(*config.last));
  }
  return records;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string single_line(std::string text) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\n' || c == '\r' || c == '\t'; }, ' ');
  return text;
}

// ---------------------------------------------------------------------------
// Config echo

class ConfigEcho {
 public:
  explicit ConfigEcho(const RunConfig& config) {
    doc_["subcommand"] = config.subcommand;
    doc_["seed"] = config.seed;
    doc_["spec"] = config.spec;
    doc_["margin"] = config.margin;
    doc_["learning_rate"] = config.learning_rate;
    doc_["epochs"] = config.epochs;
    doc_["format"] = config.format;
    doc_["preprocess"] = config.preprocess;
    doc_["source"] = config.source;
    doc_["domain"] = config.domain;
    doc_["lt_endpoint"] = config.lt_endpoint;
    doc_["acceptability_cmd"] = config.acceptability_cmd;
    doc_["acceptability_url"] = config.acceptability_url;
    if (config.first) doc_["first"] = *config.first;
    if (config.last) doc_["last"] = *config.last;
    doc_["inputs"] = ordered_json::object();
  }

  void set(const std::string& key, ordered_json value) { doc_[key] = std::move(value); }

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    const fs::path p(path);
    ordered_json entry;
    entry["path"] = path;
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      std::string combined;
      for (const auto& f : files) combined += f.filename().string() + " " + file_sha256(f) + "\n";
      entry["sha256"] = sha256_hex(combined);
    } else {
      entry["sha256"] = file_sha256(p);
    }
    doc_["inputs"][role] = std::move(entry);
  }

  void write(OutputFiles& outputs, const fs::path& path) const {
    auto out = outputs.open(path);
    out << doc_.dump(2) << '\n';
    close_checked(out, path.string());
  }

 private:
  ordered_json doc_;
};

fs::path echo_path(const std::string& output) { return fs::path(output + ".config.json"); }

// ---------------------------------------------------------------------------
// Resources and featurization

struct Featurizer {
  FeatureSpec spec;
  LexicalResources resources;
  std::unique_ptr<GrammarChecker> grammar;
  std::unique_ptr<CachingGrammarChecker> grammar_cache;
  std::unique_ptr<AcceptabilityScorer> acceptability;
  std::unique_ptr<CachingAcceptabilityScorer> acceptability_cache;

  FeatureClients clients() const { return {grammar_cache.get(), acceptability_cache.get()}; }
};

std::pair<std::optional<int>, std::string> parse_embedding_arg(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq != std::string::npos && eq > 0 &&
      std::all_of(arg.begin(), arg.begin() + std::ptrdiff_t(eq), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return {std::stoi(arg.substr(0, eq)), arg.substr(eq + 1)};
  }
  return {std::nullopt, arg};
}

std::unique_ptr<Featurizer> make_featurizer(const RunConfig& config, ConfigEcho& echo) {
  auto f = std::make_unique<Featurizer>();
  f->spec = stage("parsing feature spec", [&] { return FeatureSpec::from_selector(config.spec); });
  echo.set("feature_spec", f->spec.names());
  echo.set("spec_hash", f->spec.fingerprint());

  stage("loading resources", [&] {
    if (!config.stopwords.empty()) {
      f->resources.stopwords = StopwordList::load(config.stopwords);
      echo.input("stopwords", config.stopwords);
    }
    const bool needs_wordnet = f->spec.uses(FeatureKind::Ack) || f->spec.uses(FeatureKind::Rel);
    if (needs_wordnet) {
      if (config.wordnet_dir.empty()) throw ConfigError("features [" + f->spec.joined() + "] need --wordnet");
      f->resources.wordnet = WordNetIndex::load(config.wordnet_dir);
      echo.input("wordnet", config.wordnet_dir);
    }
    std::set<int> needed_dims;
    for (const auto& id : f->spec.ids()) {
      if (id.kind == FeatureKind::Rel) needed_dims.insert(id.param);
    }
    if (!needed_dims.empty()) {
      for (const auto& arg : config.embeddings) {
        auto [declared, path] = parse_embedding_arg(arg);
        if (declared && !needed_dims.contains(*declared)) continue;
        auto table = EmbeddingTable::load(path);
        if (declared && table.dim() != *declared) {
          throw ConfigError("embeddings " + path + " have dimension " + std::to_string(table.dim()) + ", declared " +
                            std::to_string(*declared));
        }
        if (!needed_dims.contains(table.dim())) continue;
        echo.input("embeddings@" + std::to_string(table.dim()), path);
        f->resources.embeddings.insert_or_assign(table.dim(), std::move(table));
      }
    }
    if (!config.lt_endpoint.empty() && f->spec.uses(FeatureKind::LTNorm)) {
      LanguageToolConfig lt;
      lt.base_url = config.lt_endpoint;
      lt.max_in_flight = std::ptrdiff_t(worker_count(config));
      f->grammar = std::make_unique<LanguageToolClient>(lt);
      f->grammar_cache = std::make_unique<CachingGrammarChecker>(*f->grammar);
    }
    if (f->spec.uses(FeatureKind::NNAcc)) {
      if (!config.acceptability_cmd.empty()) {
        f->acceptability = std::make_unique<CommandAcceptabilityScorer>(config.acceptability_cmd);
      } else if (!config.acceptability_url.empty()) {
        f->acceptability = std::make_unique<HttpAcceptabilityScorer>(HttpScorerConfig{config.acceptability_url, {}, {}});
      }
      if (f->acceptability) f->acceptability_cache = std::make_unique<CachingAcceptabilityScorer>(*f->acceptability);
    }
    check_feature_requirements(f->spec, f->resources, f->clients());
  });
  return f;
}

struct PairSet {
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> contexts;
  std::vector<std::string> responses;
  std::size_t degenerate = 0;
};

PairSet pairs_from_corpus(const RunConfig& config, ConfigEcho& echo) {
  PairSet set;
  const auto pairs = slice(load_dialogue_corpus(config.corpus, parse_format(config.format),
                                                parse_preprocessing(config.preprocess), config.source),
                           config);
  echo.input("corpus", config.corpus);
  for (const auto& p : pairs) {
    set.ids.push_back(p.id);
    set.contexts.push_back(p.context_turns);
    set.responses.push_back(p.response);
    if (p.degenerate) ++set.degenerate;
  }
  if (!config.responses.empty()) {
    auto lines = read_lines(config.responses);
    echo.input("responses", config.responses);
    if (lines.size() != set.ids.size()) {
      throw AlignmentError("responses file has " + std::to_string(lines.size()) + " lines for " +
                           std::to_string(set.ids.size()) + " contexts");
    }
    set.responses = std::move(lines);
    set.degenerate = std::size_t(std::count_if(set.responses.begin(), set.responses.end(),
                                               [](const std::string& r) { return postprocess_turn(r).empty(); }));
  }
  return set;
}

std::vector<AnnotatedDialogue> load_annotated_slice(const RunConfig& config, ConfigEcho& echo) {
  if (config.column_map.empty()) throw ConfigError("--annotated needs --column-map");
  const auto columns = ColumnMap::load(config.column_map);
  echo.input("column_map", config.column_map);
  echo.input("annotated", config.annotated);
  return slice(load_annotated(config.annotated, columns), config);
}

// Annotated dialogues contribute a true and a random pair each, in that order.
PairSet pairs_from_annotated(const RunConfig& config, ConfigEcho& echo, bool true_only) {
  PairSet set;
  for (const auto& d : load_annotated_slice(config, echo)) {
    set.ids.push_back(d.id + ":true");
    set.contexts.push_back(d.context_turns);
    set.responses.push_back(d.true_response);
    if (!true_only) {
      set.ids.push_back(d.id + ":random");
      set.contexts.push_back(d.context_turns);
      set.responses.push_back(d.random_response);
    }
  }
  return set;
}

PairSet load_pairs(const RunConfig& config, ConfigEcho& echo, bool annotated_true_only) {
  return stage("reading corpus", [&] {
    if (!config.corpus.empty() && !config.annotated.empty()) throw ConfigError("give either --corpus or --annotated");
    if (!config.corpus.empty()) return pairs_from_corpus(config, echo);
    if (!config.annotated.empty()) return pairs_from_annotated(config, echo, annotated_true_only);
    throw ConfigError("no input: give --corpus or --annotated");
  });
}

std::vector<ProcessedTurn> process_all(std::span<const std::string> texts, const Featurizer& f, std::size_t jobs) {
  return parallel_map(texts.size(), jobs, [&](std::size_t i) { return process_turn(texts[i], f.resources); });
}

struct ProcessedPairs {
  std::vector<std::vector<ProcessedTurn>> contexts;
  std::vector<ProcessedTurn> responses;
};

ProcessedPairs process_pairs(const PairSet& set, Featurizer& f, std::size_t jobs) {
  return stage("text processing", [&] {
    ProcessedPairs out;
    out.contexts = parallel_map(set.contexts.size(), jobs, [&](std::size_t i) {
      std::vector<ProcessedTurn> turns;
      for (const auto& t : set.contexts[i]) turns.push_back(process_turn(t, f.resources));
      return turns;
    });
    out.responses = process_all(set.responses, f, jobs);
    if (f.acceptability_cache) {
      std::vector<std::string> texts;
      for (const auto& r : out.responses) texts.push_back(r.text);
      f.acceptability_cache->prefetch(texts);
    }
    return out;
  });
}

ProcessedDialogue dialogue_of(const ProcessedPairs& p, std::size_t context, std::size_t response) {
  return {p.contexts[context], p.responses[response]};
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_extract_features(const RunConfig& config, std::ostream&, std::ostream& err) {
  if (config.output.empty()) throw ConfigError("--out is required");
  ConfigEcho echo(config);
  auto featurizer = make_featurizer(config, echo);
  const auto set = load_pairs(config, echo, false);
  if (set.ids.empty()) err << "dialeval: warning: corpus is empty; writing an empty table\n";
  if (set.degenerate > 0) err << "dialeval: warning: " << set.degenerate << " pairs have an empty response\n";
  const std::size_t jobs = worker_count(config);
  const auto processed = process_pairs(set, *featurizer, jobs);

  FeatureTable table;
  table.spec = featurizer->spec;
  table.source = config.source;
  table.domain = config.domain;
  table.ids = set.ids;
  table.rows = stage("computing features", [&] {
    return parallel_map(set.ids.size(), jobs, [&](std::size_t i) {
      return compute_features(dialogue_of(processed, i, i), featurizer->spec, featurizer->resources,
                              featurizer->clients());
    });
  });

  stage("writing outputs", [&] {
    OutputFiles outputs;
    auto out = outputs.open(config.output);
    write_feature_table(out, table);
    close_checked(out, config.output);
    echo.write(outputs, echo_path(config.output));
    outputs.commit();
  });
  return 0;
}

int cmd_generate_baselines(const RunConfig& config, std::ostream&, std::ostream& err) {
  if (config.output_dir.empty()) throw ConfigError("--out-dir is required");
  if (config.corpus.empty()) throw ConfigError("--corpus (training corpus) is required");
  ConfigEcho echo(config);
  const auto format = parse_format(config.format);
  const auto preprocessing = parse_preprocessing(config.preprocess);
  const auto train = stage("reading corpus", [&] {
    echo.input("corpus", config.corpus);
    return load_dialogue_corpus(config.corpus, format, preprocessing);
  });
  const auto targets = stage("reading contexts", [&] {
    if (config.contexts.empty()) return slice(train, config);
    echo.input("contexts", config.contexts);
    return slice(load_dialogue_corpus(config.contexts, format, preprocessing), config);
  });
  if (targets.empty()) err << "dialeval: warning: no contexts; writing empty response files\n";

  std::map<std::string, std::vector<std::string>> outputs_by_source;
  for (const auto& source : config.baseline_sources) {
    auto& responses = outputs_by_source[source];
    if (source == "collapsed") {
      responses.assign(targets.size(), collapsed_respond());
    } else if (source == "gold") {
      for (const auto& t : targets) responses.push_back(t.response);
    } else if (source == "random") {
      stage("random baseline", [&] {
        std::vector<std::string> pool;
        for (const auto& p : train) pool.push_back(p.response);
        RandomResponder responder(std::move(pool), derive_seed(config.seed, "baselines/random"));
        for (std::size_t i = 0; i < targets.size(); ++i) responses.push_back(responder.respond());
      });
    } else if (source == "tfidf") {
      stage("tfidf baseline", [&] {
        auto bag = [](const std::vector<std::string>& turns) {
          std::vector<std::string> terms;
          for (const auto& turn : turns) {
            for (auto& token : tokenize(postprocess_turn(turn))) {
              if (!is_punctuation(token)) terms.push_back(to_lower(token));
            }
          }
          return terms;
        };
        std::vector<std::vector<std::string>> contexts;
        std::vector<std::string> pool;
        for (const auto& p : train) {
          contexts.push_back(bag(p.context_turns));
          pool.push_back(p.response);
        }
        const auto retriever = TfIdfRetriever::build(contexts, std::move(pool));
        for (const auto& t : targets) responses.push_back(retriever.retrieve(bag(t.context_turns)));
      });
    } else {
      throw ConfigError("unknown baseline source '" + source + "' (expected collapsed, random, tfidf or gold)");
    }
  }

  stage("writing outputs", [&] {
    OutputFiles outputs;
    for (const auto& [source, responses] : outputs_by_source) {
      const auto path = fs::path(config.output_dir) / (source + ".txt");
      auto out = outputs.open(path);
      for (const auto& r : responses) out << single_line(r) << '\n';
      close_checked(out, path.string());
    }
    echo.write(outputs, fs::path(config.output_dir) / "config.json");
    outputs.commit();
  });
  return 0;
}

int cmd_train(const RunConfig& config, std::ostream&, std::ostream& err) {
  if (config.output.empty()) throw ConfigError("--out is required");
  ConfigEcho echo(config);
  auto featurizer = make_featurizer(config, echo);
  const auto set = load_pairs(config, echo, true);
  const std::size_t jobs = worker_count(config);
  const auto processed = process_pairs(set, *featurizer, jobs);

  TrainingConfig training;
  training.margin = config.margin;
  training.learning_rate = config.learning_rate;
  training.epochs = config.epochs;
  training.seed = derive_seed(config.seed, "train");
  stage("validating training config", [&] { training.validate(); });

  const auto& spec = featurizer->spec;
  const auto result = stage("training", [&] {
    return train(set.ids.size(), spec, [&](std::size_t c, std::size_t r) {
      return to_feature_vector(spec, compute_features(dialogue_of(processed, c, r), spec, featurizer->resources,
                                                      featurizer->clients())).values;
    }, training);
  });
  if (!result.epoch_mean_loss.empty()) {
    err << "dialeval: train: final epoch mean loss " << format_value(result.epoch_mean_loss.back()) << '\n';
  }

  stage("writing outputs", [&] {
    ModelDocument document{result.model, training, {}};
    document.train_fingerprint =
        sha256_hex(spec.joined() + "\n" + file_sha256(config.corpus.empty() ? config.annotated : config.corpus))
            .substr(0, 16);
    OutputFiles outputs;
    auto out = outputs.open(config.output);
    out << serialize(document);
    close_checked(out, config.output);
    const std::string loss_path = config.loss_output.empty() ? config.output + ".loss.tsv" : config.loss_output;
    auto loss = outputs.open(loss_path);
    loss << "epoch\tmean_loss\n";
    for (std::size_t e = 0; e < result.epoch_mean_loss.size(); ++e) {
      loss << e + 1 << '\t' << format_value(result.epoch_mean_loss[e]) << '\n';
    }
    close_checked(loss, loss_path);
    echo.write(outputs, echo_path(config.output));
    outputs.commit();
  });
  return 0;
}

int cmd_score(const RunConfig& config, std::ostream&, std::ostream&) {
  if (config.output.empty()) throw ConfigError("--out is required");
  if (config.model.empty()) throw ConfigError("--model is required");
  if (config.features.empty()) throw ConfigError("--features is required");
  ConfigEcho echo(config);
  const auto document = stage("reading model", [&] {
    std::ifstream in(config.model);
    if (!in) throw ResourceError("cannot open model " + config.model);
    std::stringstream buffer;
    buffer << in.rdbuf();
    echo.input("model", config.model);
    return deserialize(buffer.str());
  });
  const auto table = stage("reading features", [&] {
    echo.input("features", config.features);
    return load_feature_table(config.features);
  });
  stage("checking feature spec", [&] {
    if (!(table.spec == document.model.spec)) {
      throw ArgumentError("model spec [" + document.model.spec.joined() + "] (hash " + document.model.spec.fingerprint() +
                          ") does not match feature table spec [" + table.spec.joined() + "] (hash " +
                          table.spec.fingerprint() + ")");
    }
  });
  stage("writing outputs", [&] {
    OutputFiles outputs;
    auto out = outputs.open(config.output);
    out << "id\ty\tneg_y\n";
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double y = document.model.predict(table.vector(i));
      out << table.ids[i] << '\t' << format_value(y) << '\t' << format_value(-y) << '\n';
    }
    close_checked(out, config.output);
    echo.write(outputs, echo_path(config.output));
    outputs.commit();
  });
  return 0;
}

std::map<std::string, double> read_scores(const std::string& path) {
  std::map<std::string, double> scores;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || (i == 0 && lines[i].rfind("id\t", 0) == 0)) continue;
    std::vector<std::string> fields;
    std::stringstream row(lines[i]);
    for (std::string field; std::getline(row, field, '\t');) fields.push_back(field);
    if (fields.size() < 2) throw ParseError(path, i + 1, "expected id<TAB>y[<TAB>neg_y]");
    double y = 0.0;
    try {
      std::size_t used = 0;
      y = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw ParseError(path, i + 1, "invalid score '" + fields[1] + "'");
    }
    if (!scores.emplace(fields[0], y).second) throw ParseError(path, i + 1, "duplicate id '" + fields[0] + "'");
  }
  return scores;
}

int cmd_evaluate(const RunConfig& config, std::ostream& out, std::ostream&) {
  if (config.output.empty()) throw ConfigError("--out is required");
  if (config.scores.empty()) throw ConfigError("--scores is required");
  if (config.annotated.empty()) throw ConfigError("--annotated is required");
  ConfigEcho echo(config);
  echo.set("true_only", config.true_only);
  echo.set("per_rater", config.per_rater);
  const auto scores = stage("reading scores", [&] {
    echo.input("scores", config.scores);
    return read_scores(config.scores);
  });
  const auto dialogues = stage("reading annotations", [&] { return load_annotated_slice(config, echo); });

  // Negated scores so that higher means more relevant, like the ratings.
  std::vector<double> predicted;
  std::array<std::vector<double>, 4> ratings;  // mean, rater 1..3
  stage("aligning scores", [&] {
    std::set<std::string> known;
    auto take = [&](const std::string& id, const std::array<int, 3>& r) {
      auto it = scores.find(id);
      if (it == scores.end()) throw AlignmentError("no score for id '" + id + "'");
      predicted.push_back(-it->second);
      ratings[0].push_back((r[0] + r[1] + r[2]) / 3.0);
      for (int k = 0; k < 3; ++k) ratings[k + 1].push_back(r[k]);
    };
    for (const auto& d : dialogues) {
      known.insert(d.id + ":true");
      known.insert(d.id + ":random");
      take(d.id + ":true", d.true_ratings);
      if (!config.true_only) take(d.id + ":random", d.random_ratings);
    }
    for (const auto& [id, y] : scores) {
      if (!known.contains(id)) throw AlignmentError("score id '" + id + "' matches no annotated dialogue");
    }
  });

  std::ostringstream report;
  stage("computing correlations", [&] {
    report << "model\tdomain\trating\tn\tr\tp\n";
    auto row = [&](const std::string& label, const std::vector<double>& target) {
      const auto result = pearson(predicted, target);
      report << config.model_label << '\t' << config.domain << '\t' << label << '\t' << result.n << '\t'
             << format_value(result.r) << '\t' << format_value(result.p) << '\n';
    };
    row("mean", ratings[0]);
    if (config.per_rater) {
      for (int k = 1; k <= 3; ++k) row("rater" + std::to_string(k), ratings[k]);
    }
  });
  stage("writing outputs", [&] {
    OutputFiles outputs;
    auto file = outputs.open(config.output);
    file << report.str();
    close_checked(file, config.output);
    echo.write(outputs, echo_path(config.output));
    outputs.commit();
  });
  out << report.str();
  return 0;
}

int cmd_analyze(const RunConfig& config, std::ostream& out, std::ostream&) {
  if (config.output.empty()) throw ConfigError("--out is required");
  if (config.tables.size() < 2) throw ConfigError("analyze needs at least two --table inputs");
  ConfigEcho echo(config);
  const auto tables = stage("reading feature tables", [&] {
    std::vector<FeatureTable> loaded;
    for (std::size_t i = 0; i < config.tables.size(); ++i) {
      echo.input("table" + std::to_string(i + 1), config.tables[i]);
      loaded.push_back(load_feature_table(config.tables[i]));
    }
    return loaded;
  });

  std::map<std::string, const FeatureTable*> gold_by_domain;
  stage("pairing with gold", [&] {
    for (const auto& t : tables) {
      if (t.source != "gold") continue;
      if (!gold_by_domain.emplace(t.domain, &t).second) {
        throw ConfigError("more than one gold table for domain '" + t.domain + "'");
      }
    }
    for (const auto& t : tables) {
      if (!gold_by_domain.contains(t.domain)) throw ConfigError("no gold table for domain '" + t.domain + "'");
    }
  });

  struct Row {
    const FeatureTable* table;
    std::string feature;
    DistributionSummary summary{};
    bool has_summary = false;
    std::optional<SignTestResult> test;
    std::string note;
  };
  std::vector<Row> rows;
  std::size_t comparisons = 0;
  stage("computing statistics", [&] {
    for (const auto& t : tables) {
      const FeatureTable& gold = *gold_by_domain.at(t.domain);
      const bool is_gold = &gold == &t;
      std::map<std::string, std::size_t> gold_rows;
      for (std::size_t i = 0; i < gold.size(); ++i) gold_rows.emplace(gold.ids[i], i);
      const auto names = t.spec.names();
      const auto gold_names = gold.spec.names();
      for (std::size_t f = 0; f < names.size(); ++f) {
        Row row{&t, names[f], {}, false, std::nullopt, {}};
        const auto values = t.column(f);
        try {
          row.summary = summarize(values);
          row.has_summary = true;
        } catch (const DegenerateError&) {
          row.note = "no defined values";
        }
        if (!is_gold) {
          auto g = std::find(gold_names.begin(), gold_names.end(), names[f]);
          if (g == gold_names.end()) {
            row.note = "feature absent from gold table";
          } else {
            const auto gold_column = gold.column(std::size_t(g - gold_names.begin()));
            std::vector<double> paired;
            paired.reserve(t.size());
            for (const auto& id : t.ids) {
              auto it = gold_rows.find(id);
              if (it == gold_rows.end()) throw AlignmentError("id '" + id + "' of source '" + t.source + "' has no gold row");
              paired.push_back(gold_column[it->second]);
            }
            ++comparisons;
            try {
              row.test = paired_sign_test(values, paired);
            } catch (const DegenerateError&) {
              // Every defined pair is tied; report the counts without a p-value.
              SignTestResult counts;
              for (std::size_t i = 0; i < values.size(); ++i) {
                if (std::isnan(values[i]) || std::isnan(paired[i])) ++counts.n_dropped;
                else ++counts.n_ties;
              }
              counts.p_value = std::numeric_limits<double>::quiet_NaN();
              row.test = counts;
              row.note = "degenerate: no untied pairs";
            }
          }
        }
        rows.push_back(std::move(row));
      }
    }
  });

  const std::size_t tests = config.tests > 0 ? config.tests : std::max<std::size_t>(comparisons, 1);
  const double threshold = stage("computing threshold", [&] {
    return bonferroni_threshold(config.alpha, tests, ThresholdRounding::DownTwoSignificant);
  });
  echo.set("tests", tests);
  echo.set("alpha", config.alpha);
  echo.set("threshold", threshold);

  std::ostringstream report;
  report << "# threshold: " << format_value(threshold) << " (alpha " << format_value(config.alpha) << ", " << tests
         << " tests)\n";
  report << "source\tdomain\tfeature\tn\tmean\tmin\tq1\tmedian\tq3\tmax\tn_pos\tn_neg\tn_ties\tp\tsignificant\tnote\n";
  for (const auto& row : rows) {
    report << row.table->source << '\t' << row.table->domain << '\t' << row.feature << '\t';
    if (row.has_summary) {
      const auto& s = row.summary;
      report << s.count << '\t' << format_value(s.mean) << '\t' << format_value(s.min) << '\t' << format_value(s.q1)
             << '\t' << format_value(s.median) << '\t' << format_value(s.q3) << '\t' << format_value(s.max) << '\t';
    } else {
      report << "0\tNaN\tNaN\tNaN\tNaN\tNaN\tNaN\t";
    }
    if (row.test) {
      const auto& t = *row.test;
      report << t.n_positive << '\t' << t.n_negative << '\t' << t.n_ties << '\t'
             << (std::isnan(t.p_value) ? "-" : format_value(t.p_value)) << '\t' << (t.p_value < threshold ? "*" : "")
             << '\t';
    } else {
      report << "-\t-\t-\t-\t\t";
    }
    report << row.note << '\n';
  }
  stage("writing outputs", [&] {
    OutputFiles outputs;
    auto file = outputs.open(config.output);
    file << report.str();
    close_checked(file, config.output);
    echo.write(outputs, echo_path(config.output));
    outputs.commit();
  });
  out << report.str();
  return 0;
}

// ---------------------------------------------------------------------------
// Argument parsing

void add_common(CLI::App& app, RunConfig& c) {
  app.add_option("--seed", c.seed, "Run seed; every stage derives its own")->envname("DIALEVAL_SEED");
  app.add_option("--wordnet", c.wordnet_dir, "WordNet database directory (dict/)")->envname("DIALEVAL_WORDNET");
  app.add_option("--embeddings", c.embeddings, "Embedding file, as DIM=PATH or PATH; repeatable")
      ->envname("DIALEVAL_EMBEDDINGS")
      ->delimiter(',');
  app.add_option("--stopwords", c.stopwords, "Stopword file (default: built-in list)")->envname("DIALEVAL_STOPWORDS");
  app.add_option("--spec", c.spec, "ulrof1 | ulrof2 | custom:<comma-separated features>")
      ->envname("DIALEVAL_SPEC")
      ->capture_default_str();
  app.add_option("--margin", c.margin, "Triplet margin in (0, 1]")->envname("DIALEVAL_MARGIN")->capture_default_str();
  app.add_option("--lr", c.learning_rate, "Adam learning rate")->envname("DIALEVAL_LR")->capture_default_str();
  app.add_option("--epochs", c.epochs, "Training epochs")->envname("DIALEVAL_EPOCHS")->capture_default_str();
  app.add_option("--lt-endpoint", c.lt_endpoint, "LanguageTool server base URL")->envname("DIALEVAL_LT_ENDPOINT");
  app.add_option("--acceptability-cmd", c.acceptability_cmd, "Command scoring stdin sentences, one per line")
      ->envname("DIALEVAL_ACCEPTABILITY_CMD");
  app.add_option("--acceptability-url", c.acceptability_url, "HTTP acceptability scoring endpoint")
      ->envname("DIALEVAL_ACCEPTABILITY_URL");
  app.add_option("--format", c.format, "Corpus format: tsv | jsonl")->envname("DIALEVAL_FORMAT")->capture_default_str();
  app.add_option("--preprocess", c.preprocess, "none | ubuntu | twitter")->envname("DIALEVAL_PREPROCESS")->capture_default_str();
  app.add_option("--column-map", c.column_map, "Column map for annotated CSV files")->envname("DIALEVAL_COLUMN_MAP");
  app.add_option("--jobs", c.jobs, "Worker threads (0: all cores)")->envname("DIALEVAL_JOBS");
  app.add_option("--domain", c.domain, "Domain label written to tables and reports");
  app.add_option("--first", c.first, "Use only the first N records");
  app.add_option("--last", c.last, "Use only the last N records");
}

}  // namespace

int execute(const RunConfig& config, std::ostream& out, std::ostream& err) {
  const auto& s = config.subcommand;
  if (s == "extract-features") return cmd_extract_features(config, out, err);
  if (s == "generate-baselines") return cmd_generate_baselines(config, out, err);
  if (s == "train") return cmd_train(config, out, err);
  if (s == "score") return cmd_score(config, out, err);
  if (s == "evaluate") return cmd_evaluate(config, out, err);
  if (s == "analyze") return cmd_analyze(config, out, err);
  throw ArgumentError("unknown subcommand '" + s + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig config;
  CLI::App app{"Reference-free dialogue response evaluation", "dialeval"};
  app.require_subcommand(1);

  auto* extract = app.add_subcommand("extract-features", "Compute a feature table for context/response pairs");
  add_common(*extract, config);
  extract->add_option("--corpus", config.corpus, "Dialogue corpus (contexts and responses)");
  extract->add_option("--responses", config.responses, "Replacement responses, one per line, aligned to the corpus");
  extract->add_option("--annotated", config.annotated, "Annotated CSV; yields <id>:true and <id>:random pairs");
  extract->add_option("--source", config.source, "Response source label")->capture_default_str();
  extract->add_option("--out", config.output, "Output feature table")->required();

  auto* baselines = app.add_subcommand("generate-baselines", "Write baseline responses for a set of contexts");
  add_common(*baselines, config);
  baselines->add_option("--corpus", config.corpus, "Training corpus")->required();
  baselines->add_option("--contexts", config.contexts, "Target contexts (default: the training corpus)");
  baselines->add_option("--sources", config.baseline_sources, "collapsed, random, tfidf, gold")->delimiter(',');
  baselines->add_option("--out-dir", config.output_dir, "Output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "Train a relevance model on true responses");
  add_common(*train_cmd, config);
  train_cmd->add_option("--corpus", config.corpus, "Training corpus");
  train_cmd->add_option("--annotated", config.annotated, "Annotated CSV; its true responses are used");
  train_cmd->add_option("--out", config.output, "Output model document")->required();
  train_cmd->add_option("--loss-out", config.loss_output, "Per-epoch loss (default: <out>.loss.tsv)");

  auto* score = app.add_subcommand("score", "Score a feature table with a trained model");
  add_common(*score, config);
  score->add_option("--model", config.model, "Model document")->required();
  score->add_option("--features", config.features, "Feature table")->required();
  score->add_option("--out", config.output, "Output scores")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Correlate negated scores with human ratings");
  add_common(*evaluate, config);
  evaluate->add_option("--scores", config.scores, "Scores from `score`")->required();
  evaluate->add_option("--annotated", config.annotated, "Annotated CSV")->required();
  evaluate->add_option("--model-label", config.model_label, "Model name in the report")->capture_default_str();
  evaluate->add_flag("--true-only", config.true_only, "Correlate over true responses only");
  evaluate->add_flag("--per-rater", config.per_rater, "Add one row per rater");
  evaluate->add_option("--out", config.output, "Output report")->required();

  auto* analyze = app.add_subcommand("analyze", "Summaries and sign tests of feature tables against gold");
  add_common(*analyze, config);
  analyze->add_option("--table", config.tables, "Feature table; repeat for each source")->required();
  analyze->add_option("--tests", config.tests, "Number of tests for the Bonferroni correction");
  analyze->add_option("--alpha", config.alpha, "Family-wise significance level")->capture_default_str();
  analyze->add_option("--out", config.output, "Output report")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  config.subcommand = app.get_subcommands().front()->get_name();

  try {
    return execute(config, out, err);
  } catch (const StageError& e) {
    err << "dialeval: " << config.subcommand << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "dialeval: " << config.subcommand << ": configuration: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dialeval::cli
