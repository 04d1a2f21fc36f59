#include "sparqlgen/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <numeric>
#include <unordered_set>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/util.hpp"
#include "templates_data.hpp"

namespace sparqlgen {

namespace {

constexpr std::pair<Strategy, const char*> kStrategyNames[] = {
    {Strategy::zero_shot, "zero_shot"}, {Strategy::zero_shot_rag, "zero_shot_rag"},
    {Strategy::one_shot, "one_shot"},   {Strategy::ft, "ft"},
    {Strategy::ft_rag, "ft_rag"},
};

void require_question(std::string_view question) {
  if (trim(question).empty()) throw EmptyQuestion("question is empty");
}

// CRLF -> LF, strip trailing whitespace on every line and at the end.
std::string tidy(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      out.push_back('\n');
      continue;
    }
    if (text[i] == '\n') {
      while (!out.empty() && (out.back() == ' ' || out.back() == '\t')) out.pop_back();
    }
    out.push_back(text[i]);
  }
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  return out;
}

}  // namespace

const char* to_string(Strategy s) {
  for (const auto& [value, name] : kStrategyNames) {
    if (value == s) return name;
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [value, n] : kStrategyNames) {
    if (name == n) return value;
  }
  return std::nullopt;
}

bool uses_rag(Strategy s) { return s == Strategy::zero_shot_rag || s == Strategy::ft_rag; }

bool is_absolute_iri(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == s.size()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (size_t i = 1; i < colon; ++i) {
    char c = s[i];
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
  }
  for (unsigned char c : s) {
    if (c <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' ||
        c == '\\' || c == '^' || c == '`') {
      return false;
    }
  }
  return true;
}

std::vector<PropertyCatalogEntry> parse_property_catalog(std::string_view bytes) {
  std::vector<PropertyCatalogEntry> out;
  std::unordered_set<std::string> seen;
  size_t lineno = 0;
  for (const auto& raw : split_lines(bytes)) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "property catalog line " + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw MalformedFile(where + ": invalid JSON");
    }
    if (!obj.is_object() || !obj.contains("uri") || !obj["uri"].is_string()) {
      throw MalformedFile(where + ": missing required key \"uri\"");
    }
    if (!obj.contains("label") || !obj["label"].is_string()) {
      throw MalformedFile(where + ": missing required key \"label\"");
    }
    PropertyCatalogEntry e{obj["uri"].get<std::string>(), obj["label"].get<std::string>()};
    if (!is_absolute_iri(e.uri)) throw MalformedFile(where + ": not an absolute IRI: " + e.uri);
    if (seen.insert(e.uri).second) out.push_back(std::move(e));
  }
  return out;
}

std::vector<PropertyCatalogEntry> load_property_catalog(const std::filesystem::path& path) {
  return parse_property_catalog(read_file(path));
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates t{templates_data::kZeroShot, templates_data::kOneShot,
                                 templates_data::kRag, templates_data::kCorrection};
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  return PromptTemplates{read_file(dir / "zero_shot.txt"), read_file(dir / "one_shot.txt"),
                         read_file(dir / "rag.txt"), read_file(dir / "correction.txt")};
}

std::vector<std::pair<std::string, std::string>> PromptTemplates::digests() const {
  return {{"zero_shot.txt", sha256_hex(zero_shot)},
          {"one_shot.txt", sha256_hex(one_shot)},
          {"rag.txt", sha256_hex(rag)},
          {"correction.txt", sha256_hex(correction)}};
}

std::string fill_template(std::string_view tmpl,
                          std::span<const std::pair<std::string_view, std::string_view>> values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto name = tmpl.substr(i + 1, close - i - 1);
        auto it = std::find_if(values.begin(), values.end(),
                               [&](const auto& kv) { return kv.first == name; });
        if (it != values.end()) {
          out.append(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return tidy(out);
}

PromptInstance build_zero_shot_prompt(std::string_view question, const PromptTemplates& templates) {
  require_question(question);
  const std::pair<std::string_view, std::string_view> values[] = {{"question", question}};
  PromptInstance p;
  p.strategy = Strategy::zero_shot;
  p.user_text = fill_template(templates.zero_shot, values);
  return p;
}

PromptInstance build_one_shot_prompt(std::string_view question, const QAExample& example,
                                     const PromptTemplates& templates) {
  require_question(question);
  if (trim(example.gold_query).empty()) {
    throw PreconditionError("one-shot example " + example.id + " has an empty gold query");
  }
  const std::pair<std::string_view, std::string_view> values[] = {
      {"question", question},
      {"example_question", example.question},
      {"example_query", trim(example.gold_query)},
  };
  PromptInstance p;
  p.strategy = Strategy::one_shot;
  p.user_text = fill_template(templates.one_shot, values);
  p.provenance.example_id = example.id;
  return p;
}

PromptInstance build_rag_prompt(std::string_view question,
                                std::span<const PropertyCatalogEntry> properties,
                                const PromptTemplates& templates) {
  require_question(question);
  if (properties.empty()) throw EmptyContext("RAG prompt needs at least one property");
  std::string context;
  PromptInstance p;
  for (const auto& prop : properties) {
    if (!context.empty()) context.push_back('\n');
    context += prop.uri + " — " + prop.label;
    p.provenance.property_uris.push_back(prop.uri);
  }
  const std::pair<std::string_view, std::string_view> values[] = {{"question", question},
                                                                  {"context", context}};
  p.strategy = Strategy::zero_shot_rag;
  p.user_text = fill_template(templates.rag, values);
  return p;
}

const QAExample& select_one_shot_example(std::string_view question,
                                         std::span<const QAExample> train,
                                         EmbeddingProvider& embed) {
  if (train.empty()) throw EmptyTrainSet("one-shot selection needs a non-empty train split");
  std::vector<std::string> texts;
  texts.reserve(train.size() + 1);
  texts.emplace_back(question);
  for (const auto& ex : train) texts.push_back(ex.question);
  const auto vecs = embed.embed(texts);
  if (vecs.size() != texts.size()) throw RaggedVectors("embedding provider returned wrong count");

  size_t best = 0;
  double best_sim = ranking_similarity(vecs[0], vecs[1]);
  for (size_t i = 1; i < train.size(); ++i) {
    const double sim = ranking_similarity(vecs[0], vecs[i + 1]);
    if (sim > best_sim || (sim == best_sim && train[i].id < train[best].id)) {
      best = i;
      best_sim = sim;
    }
  }
  return train[best];
}

std::vector<PropertyCatalogEntry> retrieve_properties(std::string_view question,
                                                      std::span<const PropertyCatalogEntry> catalog,
                                                      size_t k, EmbeddingProvider& embed) {
  if (catalog.empty()) throw EmptyCatalog("property catalog is empty");
  if (k == 0) throw PreconditionError("retrieve_properties: k must be positive");
  std::vector<std::string> texts;
  texts.reserve(catalog.size() + 1);
  texts.emplace_back(question);
  for (const auto& e : catalog) texts.push_back(e.label);
  const auto vecs = embed.embed(texts);
  if (vecs.size() != texts.size()) throw RaggedVectors("embedding provider returned wrong count");

  std::vector<double> sims(catalog.size());
  for (size_t i = 0; i < catalog.size(); ++i) sims[i] = ranking_similarity(vecs[0], vecs[i + 1]);
  std::vector<size_t> order(catalog.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return catalog[a].uri < catalog[b].uri;
  });
  order.resize(std::min(k, order.size()));
  std::vector<PropertyCatalogEntry> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(catalog[i]);
  return out;
}

}  // namespace sparqlgen
