#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "doctest.h"
#include "dialeval/error.hpp"
#include "dialeval/services.hpp"
#include "httplib.h"
#include "json.hpp"

using namespace dialeval;
using namespace std::chrono_literals;

namespace {

const char* kMatches = R"({"matches": [
  {"rule": {"category": {"id": "GRAMMAR"}}},
  {"rule": {"category": {"id": "TYPOS"}}},
  {"rule": {"category": {"id": "GRAMMAR"}}},
  {"rule": {"id": "NO_CATEGORY"}}
]})";

// Local stand-in for a LanguageTool server and an acceptability scorer.
class MockServer {
 public:
  MockServer() {
    server_.Post("/v2/check", [this](const httplib::Request& req, httplib::Response& res) {
      const int now = ++active_;
      int seen = max_active_.load();
      while (now > seen && !max_active_.compare_exchange_weak(seen, now)) {
      }
      ++check_calls_;
      last_text_ = req.get_param_value("text");
      last_language_ = req.get_param_value("language");
      std::this_thread::sleep_for(15ms);
      --active_;
      res.set_content(kMatches, "application/json");
    });
    server_.Post("/flaky/v2/check", [this](const httplib::Request&, httplib::Response& res) {
      if (flaky_calls_++ == 0) {
        res.status = 503;
        return;
      }
      res.set_content(R"({"matches": [{"rule": {"category": {"id": "CASING"}}}]})", "application/json");
    });
    server_.Post("/missing/v2/check", [this](const httplib::Request&, httplib::Response& res) {
      ++missing_calls_;
      res.status = 404;
    });
    server_.Post("/html/v2/check", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("<html>busy</html>", "text/html");
    });
    server_.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
      const auto texts = nlohmann::json::parse(req.body).at("texts");
      nlohmann::json reply = {{"scores", nlohmann::json::array()}};
      for (std::size_t i = 0; i < texts.size(); ++i) reply["scores"].push_back(0.9);
      res.set_content(reply.dump(), "application/json");
    });
    server_.Post("/score-lines", [](const httplib::Request& req, httplib::Response& res) {
      const auto texts = nlohmann::json::parse(req.body).at("texts");
      std::string body;
      for (const auto& t : texts) body += t.get<std::string>().size() > 3 ? "0.75\n" : "0.25\n";
      res.set_content(body, "text/plain");
    });
    server_.Post("/score-high", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("1.2\n", "text/plain");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> active_{0}, max_active_{0}, check_calls_{0}, flaky_calls_{0}, missing_calls_{0};
  std::string last_text_, last_language_;
};

// A port nothing listens on: bound, read back, and closed again.
int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t length = sizeof addr;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &length);
  ::close(fd);
  return ntohs(addr.sin_port);
}

LanguageToolConfig fast_config(const std::string& url) {
  LanguageToolConfig c;
  c.base_url = url;
  c.retry.initial_backoff = 1ms;
  c.timeout = 5s;
  return c;
}

}  // namespace

TEST_CASE("grammar match counting") {
  CHECK(count_grammar_matches(kMatches) == 2);
  CHECK(count_grammar_matches(R"({"matches": []})") == 0);
  CHECK(count_grammar_matches(
            R"({"matches": [{"rule": {"category": {"id": "COLLOCATIONS"}}}, {"rule": {"category": {"id": "CASING"}}}]})") == 2);
  CHECK_THROWS_AS(count_grammar_matches("<html>"), ProtocolError);
  CHECK_THROWS_AS(count_grammar_matches(R"({"software": {}})"), ProtocolError);
  CHECK(is_counted_grammar_category("CASING"));
  CHECK_FALSE(is_counted_grammar_category("TYPOS"));
}

TEST_CASE("LanguageTool client") {
  MockServer server;
  LanguageToolClient client(fast_config(server.url()));
  CHECK(client.count_errors("") == 0);
  CHECK(client.count_errors("   \n") == 0);
  CHECK(server.check_calls_ == 0);
  CHECK(client.count_errors("this are wrong") == 2);
  CHECK(server.last_text_ == "this are wrong");
  CHECK(server.last_language_ == "en-US");

  SUBCASE("transient failures are retried") {
    LanguageToolClient flaky(fast_config(server.url("/flaky")));
    CHECK(flaky.count_errors("x") == 1);
    CHECK(server.flaky_calls_ == 2);
  }
  SUBCASE("client errors are not retried") {
    LanguageToolClient missing(fast_config(server.url("/missing")));
    CHECK_THROWS_AS(missing.count_errors("x"), ServiceError);
    CHECK(server.missing_calls_ == 1);
  }
  SUBCASE("non-JSON replies") {
    LanguageToolClient html(fast_config(server.url("/html")));
    CHECK_THROWS_AS(html.count_errors("x"), ProtocolError);
  }
  SUBCASE("in-flight limit") {
    auto config = fast_config(server.url());
    config.max_in_flight = 2;
    LanguageToolClient limited(config);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { limited.count_errors("text"); });
    for (auto& t : threads) t.join();
    CHECK(server.max_active_ <= 2);
  }
}

TEST_CASE("unreachable services") {
  const auto url = "http://127.0.0.1:" + std::to_string(closed_port());
  LanguageToolClient lt(fast_config(url));
  CHECK_THROWS_AS(lt.count_errors("hello"), ServiceError);
  HttpAcceptabilityScorer scorer({url + "/score", {2, 1ms}, 5s});
  const std::string texts[] = {"a"};
  CHECK_THROWS_AS(scorer.score(texts), ServiceError);
  CHECK_THROWS_AS(LanguageToolClient(fast_config("localhost:8081")), ArgumentError);
}

TEST_CASE("HTTP acceptability scorer") {
  MockServer server;
  HttpAcceptabilityScorer scorer({server.url("/score"), {}, 5s});
  CHECK(neural_acceptability("fine", scorer) == 0.9);
  HttpAcceptabilityScorer lines({server.url("/score-lines"), {}, 5s});
  const std::string texts[] = {"hello", "hi"};
  CHECK(lines.score(texts) == std::vector<double>{0.75, 0.25});
  HttpAcceptabilityScorer high({server.url("/score-high"), {}, 5s});
  CHECK_THROWS_AS(neural_acceptability("x", high), ProtocolError);
}

TEST_CASE("command acceptability scorer") {
  CommandAcceptabilityScorer constant("awk '{print 0.9}'");
  const std::string texts[] = {"one", "two\nlines", "three"};
  CHECK(constant.score(texts) == std::vector<double>{0.9, 0.9, 0.9});
  CHECK(neural_acceptability("x", constant) == 0.9);
  CHECK_THROWS_AS(neural_acceptability("x", *std::make_unique<CommandAcceptabilityScorer>("echo 1.2")), ProtocolError);
  CHECK_THROWS_AS(CommandAcceptabilityScorer("echo 0.5").score(texts), ProtocolError);
  CHECK_THROWS_AS(CommandAcceptabilityScorer("exit 3").score(texts), ServiceError);
}

TEST_CASE("score parsing") {
  CHECK(parse_scores("0.1\n0.2\n", 2) == std::vector<double>{0.1, 0.2});
  CHECK(parse_scores(R"({"scores": [0, 1]})", 2) == std::vector<double>{0.0, 1.0});
  CHECK_THROWS_AS(parse_scores("0.1\n", 2), ProtocolError);
  CHECK_THROWS_AS(parse_scores("abc\n", 1), ProtocolError);
  CHECK_THROWS_AS(parse_scores("-0.1\n", 1), ProtocolError);
}

namespace {

struct CountingGrammar : GrammarChecker {
  std::atomic<int> calls{0};
  std::size_t count_errors(std::string_view text) override {
    ++calls;
    return text.size();
  }
};

struct CountingScorer : AcceptabilityScorer {
  std::vector<std::size_t> batches;
  std::vector<double> score(std::span<const std::string> texts) override {
    batches.push_back(texts.size());
    std::vector<double> out;
    for (const auto& t : texts) out.push_back(double(t.size()) / 10.0);
    return out;
  }
};

}  // namespace

TEST_CASE("caching wrappers") {
  CountingGrammar grammar;
  CachingGrammarChecker cached(grammar);
  CHECK(cached.count_errors("abc") == 3);
  CHECK(cached.count_errors("abc") == 3);
  CHECK(cached.count_errors("abcd") == 4);
  CHECK(grammar.calls == 2);
  CHECK(cached.cache_size() == 2);

  CountingScorer scorer;
  CachingAcceptabilityScorer acceptability(scorer, 2);
  const std::vector<std::string> texts = {"a", "bb", "a", "ccc", "dddd"};
  acceptability.prefetch(texts);
  CHECK(scorer.batches == std::vector<std::size_t>{2, 2});
  CHECK(neural_acceptability("ccc", acceptability) == doctest::Approx(0.3));
  CHECK(scorer.batches.size() == 2);
  CHECK(acceptability.score(std::vector<std::string>{"e", "a"}) == std::vector<double>{0.1, 0.1});
  CHECK(scorer.batches.size() == 3);
}
