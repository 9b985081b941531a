#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dialeval {

// Counts grammaticality errors in a response.
class GrammarChecker {
 public:
  virtual ~GrammarChecker() = default;
  virtual std::size_t count_errors(std::string_view text) = 0;
};

// Scores native-speaker acceptability of sentences in [0, 1].
class AcceptabilityScorer {
 public:
  virtual ~AcceptabilityScorer() = default;
  virtual std::vector<double> score(std::span<const std::string> texts) = 0;
};

struct RetryPolicy {
  int max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};  // doubled after each failed attempt
};

struct LanguageToolConfig {
  std::string base_url;  // e.g. http://localhost:8081
  std::string language = "en-US";
  RetryPolicy retry;
  std::chrono::seconds timeout{30};
  std::ptrdiff_t max_in_flight = 8;
};

// Client for a LanguageTool-compatible `POST {base}/v2/check` endpoint. Only
// matches in the GRAMMAR, COLLOCATIONS and CASING categories are counted.
class LanguageToolClient final : public GrammarChecker {
 public:
  explicit LanguageToolClient(LanguageToolConfig config);
  ~LanguageToolClient() override;

  std::size_t count_errors(std::string_view text) override;

 private:
  LanguageToolConfig config_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

// Counts matches of the counted categories in a /v2/check response body.
// Throws ProtocolError when the body is not the expected JSON.
std::size_t count_grammar_matches(std::string_view response_body);

bool is_counted_grammar_category(std::string_view category_id);

struct HttpScorerConfig {
  std::string url;  // full URL of the scoring endpoint
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
};

// POSTs {"texts": [...]} and expects either one decimal per line or a JSON
// object {"scores": [...]}.
class HttpAcceptabilityScorer final : public AcceptabilityScorer {
 public:
  explicit HttpAcceptabilityScorer(HttpScorerConfig config) : config_(std::move(config)) {}
  std::vector<double> score(std::span<const std::string> texts) override;

 private:
  HttpScorerConfig config_;
};

// Runs a shell command with one sentence per line on stdin and reads one
// decimal score per line from stdout.
class CommandAcceptabilityScorer final : public AcceptabilityScorer {
 public:
  explicit CommandAcceptabilityScorer(std::string command) : command_(std::move(command)) {}
  std::vector<double> score(std::span<const std::string> texts) override;

 private:
  std::string command_;
};

// Parses a scorer reply (line protocol or {"scores": [...]}) and validates the
// count and the [0, 1] range.
std::vector<double> parse_scores(std::string_view body, std::size_t expected_count);

double neural_acceptability(std::string_view text, AcceptabilityScorer& scorer);

// Memoizes error counts by text. Safe to share between threads.
class CachingGrammarChecker final : public GrammarChecker {
 public:
  explicit CachingGrammarChecker(GrammarChecker& inner) : inner_(inner) {}
  std::size_t count_errors(std::string_view text) override;
  std::size_t cache_size() const;

 private:
  GrammarChecker& inner_;
  mutable std::mutex mutex_;
  std::map<std::string, std::size_t, std::less<>> cache_;
};

// Memoizes scores by text. prefetch() sends the unseen texts to the wrapped
// scorer in batches so later single-text lookups are served locally.
class CachingAcceptabilityScorer final : public AcceptabilityScorer {
 public:
  explicit CachingAcceptabilityScorer(AcceptabilityScorer& inner, std::size_t batch_size = 256)
      : inner_(inner), batch_size_(batch_size == 0 ? 1 : batch_size) {}
  void prefetch(std::span<const std::string> texts);
  std::vector<double> score(std::span<const std::string> texts) override;
  std::size_t cache_size() const;

 private:
  AcceptabilityScorer& inner_;
  std::size_t batch_size_;
  mutable std::mutex mutex_;
  std::map<std::string, double, std::less<>> cache_;
};

}  // namespace dialeval
