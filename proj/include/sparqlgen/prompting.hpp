#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparqlgen/dataset.hpp"
#include "sparqlgen/embedding.hpp"

namespace sparqlgen {

enum class Strategy { zero_shot, zero_shot_rag, one_shot, ft, ft_rag };

const char* to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
bool uses_rag(Strategy s);

struct PromptProvenance {
  std::optional<std::string> example_id;
  std::vector<std::string> property_uris;

  bool operator==(const PromptProvenance&) const = default;
};

struct PromptInstance {
  Strategy strategy = Strategy::zero_shot;
  std::string system_text;
  std::string user_text;
  PromptProvenance provenance;

  bool operator==(const PromptInstance&) const = default;
};

struct PropertyCatalogEntry {
  std::string uri;
  std::string label;

  bool operator==(const PropertyCatalogEntry&) const = default;
};

// scheme ":" rest, no whitespace or characters forbidden in IRIs.
bool is_absolute_iri(std::string_view s);

// One JSON object per line: {"uri": str, "label": str}. Blank lines are
// skipped; repeated uris keep their first entry.
std::vector<PropertyCatalogEntry> load_property_catalog(const std::filesystem::path& path);
std::vector<PropertyCatalogEntry> parse_property_catalog(std::string_view bytes);

// Plain-text templates with {named} placeholders.
//   zero_shot:  {question}
//   one_shot:   {question} {example_question} {example_query}
//   rag:        {question} {context}
//   correction: {query} {diagnostics}
struct PromptTemplates {
  std::string zero_shot;
  std::string one_shot;
  std::string rag;
  std::string correction;

  // Compiled-in copies of the files under templates/.
  static const PromptTemplates& defaults();
  // Reads zero_shot.txt, one_shot.txt, rag.txt and correction.txt from `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);

  // Digest of each template, keyed by file name.
  std::vector<std::pair<std::string, std::string>> digests() const;
};

// Replaces each {name} with its value in one pass; substituted text is never
// rescanned and unknown placeholders stay verbatim. The result uses "\n"
// line endings and carries no trailing whitespace.
std::string fill_template(std::string_view tmpl,
                          std::span<const std::pair<std::string_view, std::string_view>> values);

PromptInstance build_zero_shot_prompt(std::string_view question,
                                      const PromptTemplates& templates = PromptTemplates::defaults());

PromptInstance build_one_shot_prompt(std::string_view question, const QAExample& example,
                                     const PromptTemplates& templates = PromptTemplates::defaults());

PromptInstance build_rag_prompt(std::string_view question,
                                std::span<const PropertyCatalogEntry> properties,
                                const PromptTemplates& templates = PromptTemplates::defaults());

// Train example whose question is most cosine-similar to `question`; ties go
// to the lexicographically smallest id.
const QAExample& select_one_shot_example(std::string_view question,
                                         std::span<const QAExample> train,
                                         EmbeddingProvider& embed);

// Top-k catalog entries by label similarity, descending; ties by smaller uri.
std::vector<PropertyCatalogEntry> retrieve_properties(std::string_view question,
                                                      std::span<const PropertyCatalogEntry> catalog,
                                                      size_t k, EmbeddingProvider& embed);

}  // namespace sparqlgen
