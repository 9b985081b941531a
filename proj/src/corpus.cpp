#include "dialeval/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "dialeval/text.hpp"
#include "json.hpp"

namespace dialeval {

namespace {

constexpr std::string_view kEmoticons[] = {
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p", ":-p", ":'(", ":/",
    ":-/", ":|", ":-|", ":o", ":O", ":-o", ":-O", ":*", ":-*", "<3", "</3", "XD", "xD", "=)",
    "=(", "=D", "^^", "^_^", "-_-", "o_O", "O_o", ">:(", ":]", ":[", ";D", ":3",
};

std::vector<std::string_view> split_on_spaces(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end > pos) out.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::string join(std::span<const std::string_view> parts) {
  std::string out;
  for (auto p : parts) {
    if (!out.empty()) out.push_back(' ');
    out.append(p);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Drops a trailing end-of-utterance marker.
std::string clean_turn(std::string_view turn) {
  auto words = split_on_spaces(turn);
  if (!words.empty() && words.back() == "__eou__") words.pop_back();
  return join(words);
}

bool is_url(std::string_view token) {
  return token.rfind("http://", 0) == 0 || token.rfind("https://", 0) == 0 || token.rfind("www.", 0) == 0;
}

void finalize(DialoguePair& pair, Preprocessing preprocessing) {
  if (preprocessing == Preprocessing::Twitter) {
    for (auto& turn : pair.context_turns) turn = twitter_preprocess(turn);
    std::erase_if(pair.context_turns, [](const std::string& t) { return trim(t).empty(); });
    pair.response = twitter_preprocess(pair.response);
  }
  pair.degenerate = pair.context_turns.empty() || postprocess_turn(pair.response).empty();
}

}  // namespace

std::span<const std::string_view> emoticon_table() { return kEmoticons; }

std::string twitter_preprocess(std::string_view text) {
  std::vector<std::string_view> kept;
  for (auto token : split_on_spaces(text)) {
    if (is_url(token)) kept.push_back("<url>");
    else if (token.size() > 1 && token.front() == '@') kept.push_back("<at>");
    else if (std::find(std::begin(kEmoticons), std::end(kEmoticons), token) == std::end(kEmoticons)) kept.push_back(token);
  }
  return join(kept);
}

std::vector<std::string> split_turns(std::string_view context_field) {
  std::vector<std::string> turns;
  std::vector<std::string_view> current;
  auto flush = [&] {
    auto turn = clean_turn(join(current));
    if (!turn.empty()) turns.push_back(std::move(turn));
    current.clear();
  };
  for (auto word : split_on_spaces(context_field)) {
    if (word == "__eot__") flush();
    else current.push_back(word);
  }
  flush();
  return turns;
}

std::vector<DialoguePair> parse_dialogue_corpus(std::istream& in, std::string_view name, CorpusFormat format,
                                                Preprocessing preprocessing, std::string_view source_label) {
  std::vector<DialoguePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  const std::string source(name);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    DialoguePair pair;
    pair.id = std::to_string(line_no);
    pair.source_label = std::string(source_label);
    if (format == CorpusFormat::TabSeparated) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
        throw ParseError(source, line_no, "expected exactly one TAB between context and response");
      }
      pair.context_turns = split_turns(std::string_view(line).substr(0, tab));
      pair.response = clean_turn(std::string_view(line).substr(tab + 1));
    } else {
      nlohmann::json record;
      try {
        record = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
      }
      if (!record.is_object() || !record.contains("context") || !record["context"].is_array() ||
          !record.contains("response") || !record["response"].is_string()) {
        throw ParseError(source, line_no, "record needs a 'context' array and a 'response' string");
      }
      for (const auto& turn : record["context"]) {
        if (!turn.is_string()) throw ParseError(source, line_no, "context turns must be strings");
        auto cleaned = clean_turn(turn.get<std::string>());
        if (!cleaned.empty()) pair.context_turns.push_back(std::move(cleaned));
      }
      pair.response = clean_turn(record["response"].get<std::string>());
      if (record.contains("id")) {
        const auto& id = record["id"];
        pair.id = id.is_string() ? id.get<std::string>() : id.dump();
      }
    }
    finalize(pair, preprocessing);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<DialoguePair> load_dialogue_corpus(const std::filesystem::path& path, CorpusFormat format,
                                               Preprocessing preprocessing, std::string_view source_label) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open corpus " + path.string());
  return parse_dialogue_corpus(in, path.filename().string(), format, preprocessing, source_label);
}

void write_tab_separated(std::ostream& out, std::span<const DialoguePair> pairs) {
  auto flatten = [](const std::string& s) {
    std::string t = s;
    std::replace_if(t.begin(), t.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    return t;
  };
  for (const auto& pair : pairs) {
    for (std::size_t i = 0; i < pair.context_turns.size(); ++i) {
      if (i > 0) out << " __eot__ ";
      out << flatten(pair.context_turns[i]);
    }
    out << '\t' << flatten(pair.response) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<CsvRecord> read_csv(std::istream& in, char delimiter) {
  std::vector<CsvRecord> records;
  CsvRecord record{1, {}};
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  char c;
  auto end_field = [&] {
    record.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.fields.size() == 1 && record.fields[0].empty())) records.push_back(std::move(record));
    record = CsvRecord{line, {}};
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r') {
      if (in.peek() != '\n') field.push_back(c);
    } else if (c == '\n') {
      ++line;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw ParseError("csv", record.line, "unterminated quoted field");
  if (field_started || !field.empty() || !record.fields.empty()) end_record();
  return records;
}

ColumnMap ColumnMap::parse(std::string_view text) {
  ColumnMap map;
  std::map<std::string, std::string*> keys = {
      {"id", &map.id},
      {"context", &map.context},
      {"true_response", &map.true_response},
      {"random_response", &map.random_response},
      {"true_rating_1", &map.true_ratings[0]},
      {"true_rating_2", &map.true_ratings[1]},
      {"true_rating_3", &map.true_ratings[2]},
      {"random_rating_1", &map.random_ratings[0]},
      {"random_rating_2", &map.random_ratings[1]},
      {"random_rating_3", &map.random_ratings[2]},
  };
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("column map line " + std::to_string(line_no) + " lacks '='");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key == "context_separator") {
      map.context_separator = value == "\\n" ? "\n" : value == "\\t" ? "\t" : value;
    } else if (key == "delimiter") {
      if (value == "\\t" || value == "tab") map.delimiter = '\t';
      else if (value.size() == 1) map.delimiter = value[0];
      else throw ConfigError("delimiter must be one character or \\t");
    } else if (auto it = keys.find(key); it != keys.end()) {
      *it->second = value;
    } else {
      throw ConfigError("unknown column map key '" + key + "'");
    }
  }
  for (const auto& [key, target] : keys) {
    if (key != "id" && target->empty()) throw ConfigError("column map does not set '" + key + "'");
  }
  return map;
}

ColumnMap ColumnMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open column map " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(text);
}

std::vector<AnnotatedDialogue> parse_annotated(std::istream& in, const ColumnMap& columns) {
  auto records = read_csv(in, columns.delimiter);
  if (records.empty()) throw ConfigError("annotated file has no header row");
  const auto& header = records.front().fields;
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("annotated file has no column '" + name + "'");
    return std::size_t(it - header.begin());
  };
  const std::size_t context = column(columns.context);
  const std::size_t true_response = column(columns.true_response);
  const std::size_t random_response = column(columns.random_response);
  std::array<std::size_t, 3> true_rating{}, random_rating{};
  for (int i = 0; i < 3; ++i) {
    true_rating[i] = column(columns.true_ratings[i]);
    random_rating[i] = column(columns.random_ratings[i]);
  }
  const std::optional<std::size_t> id = columns.id.empty() ? std::nullopt : std::optional(column(columns.id));

  std::vector<AnnotatedDialogue> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    const std::size_t row = r + 1;  // the header is row 1
    if (fields.size() != header.size()) {
      throw ValidationError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
    }
    auto rating = [&](std::size_t index) {
      const auto text = trim(fields[index]);
      int value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || value < 1 || value > 5) {
        throw ValidationError(row, "rating '" + std::string(text) + "' in column '" + header[index] +
                                       "' is not an integer in [1, 5]");
      }
      return value;
    };
    AnnotatedDialogue d;
    d.id = id ? fields[*id] : std::to_string(row);
    const std::string& ctx = fields[context];
    std::size_t pos = 0;
    while (pos <= ctx.size()) {
      auto end = columns.context_separator.empty() ? std::string::npos : ctx.find(columns.context_separator, pos);
      if (end == std::string::npos) end = ctx.size();
      auto turn = clean_turn(std::string_view(ctx).substr(pos, end - pos));
      if (!turn.empty()) d.context_turns.push_back(std::move(turn));
      pos = end + std::max<std::size_t>(1, columns.context_separator.size());
    }
    d.true_response = std::string(trim(fields[true_response]));
    d.random_response = std::string(trim(fields[random_response]));
    for (int i = 0; i < 3; ++i) {
      d.true_ratings[i] = rating(true_rating[i]);
      d.random_ratings[i] = rating(random_rating[i]);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<AnnotatedDialogue> load_annotated(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open annotated file " + path.string());
  return parse_annotated(in, columns);
}

}  // namespace dialeval
