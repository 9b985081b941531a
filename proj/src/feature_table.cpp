#include "dialeval/feature_table.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "dialeval/error.hpp"

namespace dialeval {

std::vector<double> FeatureTable::column(std::size_t feature) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[feature].value_or(std::numeric_limits<double>::quiet_NaN()));
  return out;
}

std::string format_value(double value) {
  if (std::isnan(value)) return "NaN";
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

std::string format_value(const FeatureValue& value) {
  return value ? format_value(*value) : std::string("NaN");
}

void write_feature_table(std::ostream& out, const FeatureTable& table) {
  out << "# spec: " << table.spec.joined() << '\n';
  out << "# spec_hash: " << table.spec.fingerprint() << '\n';
  out << "# source: " << table.source << '\n';
  out << "# domain: " << table.domain << '\n';
  out << "id\tfeature\tvalue\n";
  const auto names = table.spec.names();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (std::size_t f = 0; f < names.size(); ++f) {
      out << table.ids[r] << '\t' << names[f] << '\t' << format_value(table.rows[r][f]) << '\n';
    }
  }
}

FeatureTable read_feature_table(std::istream& in, const std::string& name) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_spec = false;
  std::string declared_hash;
  std::map<std::string, std::size_t> feature_index;
  std::map<std::string, std::size_t> row_index;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      auto key = line.substr(1, colon - 1);
      auto value = line.substr(colon + 1);
      auto strip = [](std::string& s) {
        s.erase(0, s.find_first_not_of(' '));
        s.erase(s.find_last_not_of(' ') + 1);
      };
      strip(key);
      strip(value);
      if (key == "spec") {
        try {
          table.spec = value.empty() ? FeatureSpec() : FeatureSpec::parse_list(value);
        } catch (const ArgumentError& e) {
          throw ParseError(name, line_no, e.what());
        }
        have_spec = true;
        const auto names = table.spec.names();
        for (std::size_t i = 0; i < names.size(); ++i) feature_index[names[i]] = i;
      } else if (key == "spec_hash") {
        declared_hash = value;
      } else if (key == "source") {
        table.source = value;
      } else if (key == "domain") {
        table.domain = value;
      }
      continue;
    }
    if (!header_seen) {
      if (line != "id\tfeature\tvalue") throw ParseError(name, line_no, "expected header 'id<TAB>feature<TAB>value'");
      if (!have_spec) throw ParseError(name, line_no, "missing '# spec:' header");
      if (!declared_hash.empty() && declared_hash != table.spec.fingerprint()) {
        throw ParseError(name, line_no, "spec_hash does not match the declared spec");
      }
      header_seen = true;
      continue;
    }
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
      throw ParseError(name, line_no, "expected three TAB-separated fields");
    }
    const auto id = line.substr(0, t1);
    const auto feature = line.substr(t1 + 1, t2 - t1 - 1);
    const auto text = line.substr(t2 + 1);
    auto f = feature_index.find(feature);
    if (f == feature_index.end()) throw ParseError(name, line_no, "feature '" + feature + "' is not in the spec");
    FeatureValue value;
    if (text != "NaN") {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError(name, line_no, "invalid value '" + text + "'");
      }
      value = v;
    }
    auto [it, inserted] = row_index.emplace(id, table.ids.size());
    if (inserted) {
      table.ids.push_back(id);
      table.rows.emplace_back(table.spec.size());
    }
    table.rows[it->second][f->second] = value;
  }
  if (!header_seen && !have_spec) throw ParseError(name, line_no, "not a feature table");
  return table;
}

FeatureTable load_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ResourceError("cannot open feature table " + path.string());
  return read_feature_table(in, path.string());
}

}  // namespace dialeval
