#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "dialeval/corpus.hpp"
#include "support.hpp"

using namespace dialeval;
using Strings = std::vector<std::string>;

namespace {

std::vector<DialoguePair> parse(const std::string& text, CorpusFormat format = CorpusFormat::TabSeparated,
                                Preprocessing pre = Preprocessing::None) {
  std::istringstream in(text);
  return parse_dialogue_corpus(in, "fixture", format, pre);
}

const char* kColumns = R"(# test layout
id = dialogue
context = context
true_response = true response
random_response = random response
true_rating_1 = t1
true_rating_2 = t2
true_rating_3 = t3
random_rating_1 = r1
random_rating_2 = r2
random_rating_3 = r3
)";

const char* kAnnotated =
    "dialogue,context,true response,random response,t1,t2,t3,r1,r2,r3\n"
    "d1,\"hi there\nhow are you?\",\"fine, thanks\",\"the \"\"car\"\" is red\",5,4,5,1,2,1\n"
    "d2,hello,hey,no,3,3,3,2,2,2\n";

}  // namespace

TEST_CASE("tab-separated corpora") {
  const auto pairs = parse("hi __eou__ __eot__ hello __eou__\tgood thanks\n");
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].context_turns == Strings{"hi", "hello"});
  CHECK(pairs[0].response == "good thanks");
  CHECK(pairs[0].id == "1");
  CHECK(pairs[0].source_label == "gold");
  CHECK_FALSE(pairs[0].degenerate);

  CHECK(parse("").empty());
  CHECK(split_turns("a __eou__ b __eou__ __eot__ c") == Strings{"a __eou__ b", "c"});

  const auto multi = parse("a\tb\r\n\nc __eot__ d\t__eou__\n");
  REQUIRE(multi.size() == 2);
  CHECK(multi[1].id == "3");
  CHECK(multi[1].degenerate);

  try {
    parse("ok\tfine\nno tab here\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("a\tb\tc\n"), ParseError);
}

TEST_CASE("JSON lines corpora") {
  const auto pairs = parse(R"({"context": ["hi __eou__", "hello"], "response": "yo", "id": "x7"})"
                           "\n"
                           R"({"context": [], "response": "alone", "id": 12})"
                           "\n",
                           CorpusFormat::JsonLines);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].context_turns == Strings{"hi", "hello"});
  CHECK(pairs[0].id == "x7");
  CHECK(pairs[1].id == "12");
  CHECK(pairs[1].degenerate);
  CHECK_THROWS_AS(parse("{\"context\": \"x\", \"response\": \"y\"}\n", CorpusFormat::JsonLines), ParseError);
  CHECK_THROWS_AS(parse("{nope\n", CorpusFormat::JsonLines), ParseError);
}

TEST_CASE("twitter preprocessing") {
  CHECK(twitter_preprocess("http://x.co @bob :)") == "<url> <at>");
  CHECK(twitter_preprocess("see www.example.com <3 now") == "see <url> now");
  CHECK(twitter_preprocess("@ alone") == "@ alone");
  CHECK(emoticon_table().size() == 40);
  const auto pairs = parse("hey @amy :D __eot__ look https://t.co/x\tnice ;)\n", CorpusFormat::TabSeparated,
                           Preprocessing::Twitter);
  CHECK(pairs[0].context_turns == Strings{"hey <at>", "look <url>"});
  CHECK(pairs[0].response == "nice");

  const Strings samples = {"a :) b", "@x @y http://z", "<url> <at> :-( xD", "", "plain text", ":P:P", "^_^ ok"};
  for (const auto& s : samples) {
    const auto once = twitter_preprocess(s);
    CHECK(twitter_preprocess(once) == once);
  }
}

TEST_CASE("corpus writer round-trips") {
  const auto pairs = parse("a b __eot__ c\td\nx\ty z\n");
  std::ostringstream out;
  write_tab_separated(out, pairs);
  const auto again = parse(out.str());
  REQUIRE(again.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(again[i].context_turns == pairs[i].context_turns);
    CHECK(again[i].response == pairs[i].response);
  }
}

TEST_CASE("CSV reader") {
  std::istringstream in("a,b\n\"x,1\",\"multi\nline\"\r\n\"q\"\"q\",\n");
  const auto records = read_csv(in);
  REQUIRE(records.size() == 3);
  CHECK(records[1].fields == Strings{"x,1", "multi\nline"});
  CHECK(records[2].fields == Strings{"q\"q", ""});
  CHECK(records[2].line == 4);
  std::istringstream bad("\"open\n");
  CHECK_THROWS_AS(read_csv(bad), ParseError);
}

TEST_CASE("annotated dialogues") {
  const auto columns = ColumnMap::parse(kColumns);
  std::istringstream in(kAnnotated);
  const auto records = parse_annotated(in, columns);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "d1");
  CHECK(records[0].context_turns == Strings{"hi there", "how are you?"});
  CHECK(records[0].true_response == "fine, thanks");
  CHECK(records[0].random_response == "the \"car\" is red");
  CHECK(records[0].mean_true_rating() == doctest::Approx(4.6667).epsilon(1e-4));
  CHECK(records[0].mean_random_rating() == doctest::Approx(1.3333).epsilon(1e-4));

  std::string bad = kAnnotated;
  bad.replace(bad.find("3,3,3"), 1, "6");
  std::istringstream bad_in(bad);
  try {
    parse_annotated(bad_in, columns);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.row() == 3);
  }

  std::string renamed = kAnnotated;
  renamed.replace(renamed.find("t2"), 2, "tx");
  std::istringstream renamed_in(renamed);
  CHECK_THROWS_AS(parse_annotated(renamed_in, columns), ConfigError);

  CHECK_THROWS_AS(ColumnMap::parse("context = c\n"), ConfigError);
  CHECK_THROWS_AS(ColumnMap::parse(std::string(kColumns) + "colour = red\n"), ConfigError);
  const auto tabbed = ColumnMap::parse(std::string(kColumns) + "delimiter = \\t\ncontext_separator = __eot__\n");
  CHECK(tabbed.delimiter == '\t');
  CHECK(tabbed.context_separator == "__eot__");
}

TEST_CASE("the shipped HUMOD column map parses") {
  const auto columns = ColumnMap::load(std::filesystem::path(DIALEVAL_FIXTURES) / ".." / ".." / "data" / "humod.columns");
  CHECK_FALSE(columns.context.empty());
}

TEST_CASE("splits") {
  std::vector<int> records(9500);
  std::iota(records.begin(), records.end(), 0);
  const auto s = split<int>(records, {7500, 1000, 1000});
  CHECK(s.train.front() == 0);
  CHECK(s.train.back() == 7499);
  CHECK(s.valid.front() == 7500);
  CHECK(s.valid.back() == 8499);
  CHECK(s.test.front() == 8500);
  CHECK(s.test.back() == 9499);

  const std::vector<int> three = {1, 2, 3};
  const auto t = split<int>(three, {1, 1, 1});
  CHECK(t.train == std::vector<int>{1});
  CHECK(t.valid == std::vector<int>{2});
  CHECK(t.test == std::vector<int>{3});
  CHECK_THROWS_AS(split<int>(std::vector<int>{1, 2}, {2, 1, 1}), ArgumentError);

  // With spare records, test is still the final slice and nothing overlaps.
  std::vector<int> many(20);
  std::iota(many.begin(), many.end(), 0);
  const auto u = split<int>(many, {5, 3, 4});
  CHECK(u.valid == std::vector<int>{5, 6, 7});
  CHECK(u.test == std::vector<int>{16, 17, 18, 19});
}
