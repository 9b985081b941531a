#include "dialeval/features.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <unordered_set>

#include "dialeval/error.hpp"
#include "dialeval/fingerprint.hpp"

namespace dialeval {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

int parse_param(std::string_view digits, std::string_view name) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value < 1) {
    throw ArgumentError("bad feature name '" + std::string(name) + "'");
  }
  return value;
}

std::unordered_set<std::string> context_surfaces(std::span<const ProcessedTurn> context) {
  std::unordered_set<std::string> surfaces;
  for (const auto& turn : context)
    for (const auto& token : turn.tokens) surfaces.insert(to_lower(token.surface));
  return surfaces;
}

using NgramCounts = std::map<std::string, int>;

void count_ngrams(std::span<const std::string> tokens, int n, NgramCounts& counts) {
  if (tokens.size() < std::size_t(n)) return;
  std::string key;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    key.clear();
    for (int k = 0; k < n; ++k) {
      if (k > 0) key.push_back('\x1f');
      key.append(tokens[i + k]);
    }
    ++counts[key];
  }
}

std::vector<std::string> stems_of(const ProcessedTurn& turn) {
  std::vector<std::string> stems;
  stems.reserve(turn.tokens.size());
  for (const auto& t : turn.tokens) stems.push_back(t.stem);
  return stems;
}

}  // namespace

std::string FeatureId::name() const {
  switch (kind) {
    case FeatureKind::Ack: return "Ack";
    case FeatureKind::Rel: return "Rel@" + std::to_string(param);
    case FeatureKind::NgramPrec: return "NgramPrec(" + std::to_string(param) + ")";
    case FeatureKind::LTNorm: return "LTNorm";
    case FeatureKind::NNAcc: return "NNAcc";
  }
  return "?";
}

FeatureId FeatureId::parse(std::string_view name) {
  const std::string lower = lower_ascii(name);
  if (lower == "ack") return {FeatureKind::Ack, 0};
  if (lower == "ltnorm") return {FeatureKind::LTNorm, 0};
  if (lower == "nnacc") return {FeatureKind::NNAcc, 0};
  if (lower.rfind("rel@", 0) == 0) return {FeatureKind::Rel, parse_param(std::string_view(lower).substr(4), name)};
  if (lower.rfind("ngramprec(", 0) == 0 && lower.back() == ')') {
    return {FeatureKind::NgramPrec, parse_param(std::string_view(lower).substr(10, lower.size() - 11), name)};
  }
  throw ArgumentError("unknown feature '" + std::string(name) + "'");
}

FeatureSpec::FeatureSpec(std::vector<FeatureId> ids) : ids_(std::move(ids)) {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (ids_[i] == ids_[j]) throw ArgumentError("duplicate feature '" + ids_[i].name() + "' in spec");
    }
  }
}

FeatureSpec FeatureSpec::parse_list(std::string_view list) {
  std::vector<FeatureId> ids;
  std::size_t pos = 0;
  while (pos < list.size()) {
    auto end = list.find(',', pos);
    if (end == std::string_view::npos) end = list.size();
    auto item = list.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) ids.push_back(FeatureId::parse(item));
    pos = end + 1;
  }
  return FeatureSpec(std::move(ids));
}

FeatureSpec FeatureSpec::from_selector(std::string_view selector) {
  if (selector == "ulrof1") return ulrof1();
  if (selector == "ulrof2") return ulrof2();
  if (selector.rfind("custom:", 0) == 0) return parse_list(selector.substr(7));
  throw ArgumentError("feature spec must be ulrof1, ulrof2 or custom:<list>, got '" + std::string(selector) + "'");
}

FeatureSpec FeatureSpec::ulrof1() {
  return FeatureSpec({{FeatureKind::Ack, 0},
                      {FeatureKind::NgramPrec, 2},
                      {FeatureKind::NgramPrec, 3},
                      {FeatureKind::NgramPrec, 4}});
}

FeatureSpec FeatureSpec::ulrof2() {
  const auto base = ulrof1();
  auto ids = std::vector<FeatureId>(base.ids().begin(), base.ids().end());
  ids.push_back({FeatureKind::Rel, 25});
  ids.push_back({FeatureKind::Rel, 200});
  return FeatureSpec(std::move(ids));
}

std::vector<std::string> FeatureSpec::names() const {
  std::vector<std::string> out;
  for (const auto& id : ids_) out.push_back(id.name());
  return out;
}

std::string FeatureSpec::joined() const {
  std::string out;
  for (const auto& id : ids_) {
    if (!out.empty()) out.push_back(',');
    out += id.name();
  }
  return out;
}

std::string FeatureSpec::fingerprint() const { return sha256_hex(joined()).substr(0, 16); }

bool FeatureSpec::uses(FeatureKind kind) const {
  return std::any_of(ids_.begin(), ids_.end(), [kind](const FeatureId& id) { return id.kind == kind; });
}

// ---------------------------------------------------------------------------

FeatureValue ack(std::span<const ProcessedTurn> context, const ProcessedTurn& response,
                 const WordNetIndex& wordnet) {
  if (response.content_words.empty()) return std::nullopt;
  const auto surfaces = context_surfaces(context);
  std::size_t acknowledged = 0;
  for (const auto& word : response.content_words) {
    if (wordnet.has_synonym_in(to_lower(word.surface), word.pos, surfaces)) ++acknowledged;
  }
  return double(acknowledged) / double(response.content_words.size());
}

double relatedness(std::span<const ProcessedTurn> context, const ProcessedTurn& response,
                   const WordNetIndex& wordnet, const EmbeddingTable& embeddings) {
  // Unit-normalized context vectors, one row per embedded token.
  std::vector<Eigen::VectorXd> rows;
  for (const auto& turn : context) {
    for (const auto& token : turn.tokens) {
      auto v = embeddings.find(token.surface);
      if (!v) continue;
      const Eigen::VectorXd d = v->cast<double>();
      if (d.norm() == 0.0) continue;
      rows.push_back(d.normalized());
    }
  }
  if (rows.empty()) return 0.0;
  Eigen::MatrixXd context_matrix(rows.size(), embeddings.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) context_matrix.row(i) = rows[i].transpose();

  const auto surfaces = context_surfaces(context);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& word : response.content_words) {
    if (wordnet.has_synonym_in(to_lower(word.surface), word.pos, surfaces)) continue;
    auto v = embeddings.find(word.surface);
    if (!v) continue;
    const Eigen::VectorXd d = v->cast<double>();
    if (d.norm() == 0.0) continue;
    const double best = std::clamp((context_matrix * d.normalized()).maxCoeff(), -1.0, 1.0);
    total += std::clamp(1.0 - best, 0.0, 1.0);
    ++count;
  }
  return count == 0 ? 0.0 : total / double(count);
}

double clipped_ngram_precision(std::span<const std::vector<std::string>> context_segments,
                               std::span<const std::string> response, int n) {
  if (n < 1) throw ArgumentError("n-gram order must be at least 1, got " + std::to_string(n));
  if (response.size() < std::size_t(n)) return 0.0;
  NgramCounts response_counts;
  NgramCounts context_counts;
  count_ngrams(response, n, response_counts);
  for (const auto& segment : context_segments) count_ngrams(segment, n, context_counts);
  long matched = 0;
  long total = 0;
  for (const auto& [gram, count] : response_counts) {
    total += count;
    if (auto it = context_counts.find(gram); it != context_counts.end()) matched += std::min(count, it->second);
  }
  return double(matched) / double(total);
}

double ngram_precision(std::span<const ProcessedTurn> context, const ProcessedTurn& response, int n) {
  std::vector<std::vector<std::string>> segments;
  segments.reserve(context.size());
  for (const auto& turn : context) segments.push_back(stems_of(turn));
  return clipped_ngram_precision(segments, stems_of(response), n);
}

double lt_norm(std::size_t token_count, std::size_t error_count) {
  if (token_count == 0) throw ArgumentError("LTNorm needs a response with at least one token");
  return std::max(0.0, 1.0 - double(error_count) / double(token_count));
}

void check_feature_requirements(const FeatureSpec& spec, const LexicalResources& resources,
                                const FeatureClients& clients) {
  for (const auto& id : spec.ids()) {
    switch (id.kind) {
      case FeatureKind::Rel:
        if (!resources.embeddings_for(id.param)) {
          throw ConfigError(id.name() + " needs a " + std::to_string(id.param) + "-dimensional embedding table");
        }
        break;
      case FeatureKind::LTNorm:
        if (!clients.grammar) throw ConfigError("LTNorm needs a grammar checker endpoint");
        break;
      case FeatureKind::NNAcc:
        if (!clients.acceptability) throw ConfigError("NNAcc needs an acceptability scorer");
        break;
      default: break;
    }
  }
}

std::vector<FeatureValue> compute_features(const ProcessedDialogue& dialogue, const FeatureSpec& spec,
                                           const LexicalResources& resources, const FeatureClients& clients) {
  check_feature_requirements(spec, resources, clients);
  std::vector<FeatureValue> values;
  values.reserve(spec.size());
  for (const auto& id : spec.ids()) {
    switch (id.kind) {
      case FeatureKind::Ack:
        values.push_back(ack(dialogue.context, dialogue.response, resources.wordnet));
        break;
      case FeatureKind::Rel:
        values.push_back(relatedness(dialogue.context, dialogue.response, resources.wordnet,
                                     *resources.embeddings_for(id.param)));
        break;
      case FeatureKind::NgramPrec:
        values.push_back(ngram_precision(dialogue.context, dialogue.response, id.param));
        break;
      case FeatureKind::LTNorm: {
        // A response without tokens has nothing to check; it scores 0.
        const auto tokens = dialogue.response.tokens.size();
        values.push_back(tokens == 0 ? 0.0 : lt_norm(tokens, clients.grammar->count_errors(dialogue.response.text)));
        break;
      }
      case FeatureKind::NNAcc:
        values.push_back(neural_acceptability(dialogue.response.text, *clients.acceptability));
        break;
    }
  }
  return values;
}

FeatureVector to_feature_vector(const FeatureSpec& spec, std::span<const FeatureValue> values) {
  if (values.size() != spec.size()) throw ArgumentError("feature values do not match the spec length");
  FeatureVector fv{spec, VectorXd(Eigen::Index(values.size()))};
  for (std::size_t i = 0; i < values.size(); ++i) fv.values[Eigen::Index(i)] = values[i].value_or(0.0);
  return fv;
}

FeatureVector feature_vector(const ProcessedDialogue& dialogue, const FeatureSpec& spec,
                             const LexicalResources& resources, const FeatureClients& clients) {
  const auto values = compute_features(dialogue, spec, resources, clients);
  return to_feature_vector(spec, values);
}

}  // namespace dialeval
