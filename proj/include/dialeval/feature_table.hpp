#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dialeval/features.hpp"

namespace dialeval {

// Long-format table: one `id TAB feature TAB value` row per pair and feature,
// preceded by `# key: value` header lines. Undefined values are written as NaN.
struct FeatureTable {
  FeatureSpec spec;
  std::string source = "gold";
  std::string domain;
  std::vector<std::string> ids;
  std::vector<std::vector<FeatureValue>> rows;  // rows[i] aligned to spec

  std::size_t size() const { return ids.size(); }
  // Values of one feature column, Undefined as NaN.
  std::vector<double> column(std::size_t feature) const;
  FeatureVector vector(std::size_t row) const { return to_feature_vector(spec, rows[row]); }
};

// Shortest round-trip decimal; NaN for Undefined.
std::string format_value(double value);
std::string format_value(const FeatureValue& value);

void write_feature_table(std::ostream& out, const FeatureTable& table);
FeatureTable read_feature_table(std::istream& in, const std::string& name = "feature table");
FeatureTable load_feature_table(const std::filesystem::path& path);

}  // namespace dialeval
