#include "dialeval/services.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <unistd.h>
#include <sys/wait.h>

#include "dialeval/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dialeval {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) throw ArgumentError("URL lacks a scheme: " + std::string(url));
  const auto path_begin = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_begin == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_begin));
    out.path = std::string(url.substr(path_begin));
  }
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

// Issues `send` with retries on transport failures and 5xx replies; returns the body.
template <typename Send>
std::string with_retries(const RetryPolicy& policy, std::string_view what, Send send) {
  auto backoff = policy.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Result result = send();
    if (!result) {
      last_error = std::string(what) + ": " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 200) return result->body;
    last_error = std::string(what) + ": HTTP " + std::to_string(result->status);
    if (result->status < 500) break;
  }
  throw ServiceError(last_error);
}

constexpr std::string_view kCountedCategories[] = {"GRAMMAR", "COLLOCATIONS", "CASING"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string single_line(std::string_view text) {
  std::string out(text);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\r'; }, ' ');
  return out;
}

}  // namespace

bool is_counted_grammar_category(std::string_view category_id) {
  return std::find(std::begin(kCountedCategories), std::end(kCountedCategories), category_id) !=
         std::end(kCountedCategories);
}

std::size_t count_grammar_matches(std::string_view response_body) {
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(response_body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("grammar checker reply is not JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("matches") || !body["matches"].is_array()) {
    throw ProtocolError("grammar checker reply has no 'matches' array");
  }
  std::size_t count = 0;
  for (const auto& match : body["matches"]) {
    const auto id = match.value(nlohmann::json::json_pointer("/rule/category/id"), std::string());
    if (is_counted_grammar_category(id)) ++count;
  }
  return count;
}

LanguageToolClient::LanguageToolClient(LanguageToolConfig config)
    : config_(std::move(config)),
      in_flight_(std::make_unique<std::counting_semaphore<>>(std::max<std::ptrdiff_t>(1, config_.max_in_flight))) {
  split_url(config_.base_url);
}

LanguageToolClient::~LanguageToolClient() = default;

std::size_t LanguageToolClient::count_errors(std::string_view text) {
  if (trim(text).empty()) return 0;
  const auto url = split_url(config_.base_url);
  struct Permit {
    std::counting_semaphore<>& semaphore;
    explicit Permit(std::counting_semaphore<>& s) : semaphore(s) { semaphore.acquire(); }
    ~Permit() { semaphore.release(); }
  };
  std::string body;
  {
    Permit permit(*in_flight_);
    body = with_retries(config_.retry, "LanguageTool " + config_.base_url, [&] {
      httplib::Client client(url.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      httplib::Params params{{"text", std::string(text)}, {"language", config_.language}};
      return client.Post(url.path + "/v2/check", params);
    });
  }
  return count_grammar_matches(body);
}

std::vector<double> parse_scores(std::string_view body, std::size_t expected_count) {
  std::vector<double> scores;
  const auto trimmed = trim(body);
  if (!trimmed.empty() && trimmed.front() == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error& e) {
      throw ProtocolError(std::string("scorer reply is not JSON: ") + e.what());
    }
    if (!doc.contains("scores") || !doc["scores"].is_array()) throw ProtocolError("scorer reply has no 'scores' array");
    for (const auto& v : doc["scores"]) {
      if (!v.is_number()) throw ProtocolError("non-numeric score in scorer reply");
      scores.push_back(v.get<double>());
    }
  } else {
    std::size_t pos = 0;
    while (pos < trimmed.size()) {
      auto end = trimmed.find('\n', pos);
      if (end == std::string_view::npos) end = trimmed.size();
      const auto line = trim(trimmed.substr(pos, end - pos));
      pos = end + 1;
      if (line.empty()) continue;
      double value = 0;
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), value);
      if (ec != std::errc() || ptr != line.data() + line.size()) {
        throw ProtocolError("bad score line '" + std::string(line) + "'");
      }
      scores.push_back(value);
    }
  }
  if (scores.size() != expected_count) {
    throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(expected_count) + " inputs");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ProtocolError("score " + std::to_string(s) + " outside [0, 1]");
  }
  return scores;
}

std::vector<double> HttpAcceptabilityScorer::score(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  const auto url = split_url(config_.url);
  nlohmann::json request = {{"texts", nlohmann::json::array()}};
  for (const auto& t : texts) request["texts"].push_back(single_line(t));
  const std::string payload = request.dump();
  const auto body = with_retries(config_.retry, "acceptability scorer " + config_.url, [&] {
    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    return client.Post(url.path.empty() ? "/" : url.path, payload, "application/json");
  });
  return parse_scores(body, texts.size());
}

std::vector<double> CommandAcceptabilityScorer::score(std::span<const std::string> texts) {
  if (texts.empty()) return {};
  std::string input_path = (std::filesystem::temp_directory_path() / "dialeval-accept-XXXXXX").string();
  const int fd = mkstemp(input_path.data());
  if (fd < 0) throw ServiceError("cannot create scorer input file");
  close(fd);
  struct Cleanup {
    std::string path;
    ~Cleanup() { std::filesystem::remove(path); }
  } cleanup{input_path};
  {
    std::ofstream out(input_path, std::ios::binary);
    for (const auto& t : texts) out << single_line(t) << '\n';
  }
  const std::string command = command_ + " < '" + input_path + "'";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw ServiceError("cannot start scorer command: " + command_);
  std::string output;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) output.append(buffer, n);
  const int status = pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw ServiceError("scorer command failed (" + command_ + ")");
  }
  return parse_scores(output, texts.size());
}

double neural_acceptability(std::string_view text, AcceptabilityScorer& scorer) {
  const std::string one[] = {std::string(text)};
  return scorer.score(one).front();
}

}  // namespace dialeval

namespace dialeval {

std::size_t CachingGrammarChecker::count_errors(std::string_view text) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(text); it != cache_.end()) return it->second;
  }
  const std::size_t errors = inner_.count_errors(text);
  std::lock_guard lock(mutex_);
  cache_.emplace(std::string(text), errors);
  return errors;
}

std::size_t CachingGrammarChecker::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

void CachingAcceptabilityScorer::prefetch(std::span<const std::string> texts) {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mutex_);
    std::set<std::string_view> queued;
    for (const auto& text : texts) {
      if (!cache_.contains(text) && queued.insert(text).second) missing.push_back(text);
    }
  }
  for (std::size_t begin = 0; begin < missing.size(); begin += batch_size_) {
    const std::size_t end = std::min(missing.size(), begin + batch_size_);
    std::span<const std::string> batch(missing.data() + begin, end - begin);
    const auto scores = inner_.score(batch);
    if (scores.size() != batch.size()) throw ProtocolError("acceptability scorer returned the wrong number of scores");
    std::lock_guard lock(mutex_);
    for (std::size_t i = 0; i < batch.size(); ++i) cache_.emplace(batch[i], scores[i]);
  }
}

std::vector<double> CachingAcceptabilityScorer::score(std::span<const std::string> texts) {
  prefetch(texts);
  std::lock_guard lock(mutex_);
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(cache_.find(text)->second);
  return out;
}

std::size_t CachingAcceptabilityScorer::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace dialeval
