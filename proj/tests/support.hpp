#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>

#include "dialeval/lexicon.hpp"

namespace test {

inline std::filesystem::path fixture(std::string_view name) {
  return std::filesystem::path(DIALEVAL_FIXTURES) / name;
}

// Removes the directory tree on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("dialeval-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Lexical resources backed by the fixture WordNet directory.
inline const dialeval::LexicalResources& fixture_resources() {
  static const dialeval::LexicalResources resources = [] {
    dialeval::LexicalResources r;
    r.wordnet = dialeval::WordNetIndex::load(fixture("wordnet"));
    return r;
  }();
  return resources;
}

}  // namespace test
