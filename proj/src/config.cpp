#include "sparqlgen/config.hpp"

#include <charconv>
#include <set>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

namespace {

[[noreturn]] void fail_line(size_t line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// Parses one value starting at text[pos]; advances pos past it.
ConfigValue parse_value(std::string_view text, size_t& pos, size_t line) {
  if (pos >= text.size()) fail_line(line, "missing value");
  const char c = text[pos];
  if (c == '"') {
    std::string out;
    for (++pos; pos < text.size(); ++pos) {
      if (text[pos] == '"') {
        ++pos;
        return out;
      }
      if (text[pos] != '\\') {
        out += text[pos];
        continue;
      }
      if (++pos >= text.size()) break;
      switch (text[pos]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail_line(line, std::string("unsupported escape \\") + text[pos]);
      }
    }
    fail_line(line, "unterminated string");
  }
  if (c == '\'') {
    const size_t close = text.find('\'', pos + 1);
    if (close == std::string_view::npos) fail_line(line, "unterminated string");
    std::string out(text.substr(pos + 1, close - pos - 1));
    pos = close + 1;
    return out;
  }
  size_t end = pos;
  while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end])) && text[end] != '#') {
    ++end;
  }
  std::string token(text.substr(pos, end - pos));
  pos = end;
  if (token == "true") return true;
  if (token == "false") return false;
  std::erase(token, '_');
  const char* first = token.data() + (token.starts_with('+') ? 1 : 0);
  const char* last = token.data() + token.size();
  if (token.find_first_of(".eE") == std::string::npos) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last && first != last) return v;
  } else {
    double v = 0;
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec == std::errc() && p == last && first != last) return v;
  }
  fail_line(line, "invalid value '" + token + "'");
}

class TableReader {
 public:
  TableReader(const ConfigTable& t, std::filesystem::path base) : t_(t), base_(std::move(base)) {}

  bool has(const std::string& key) const { return t_.count(key) > 0; }

  bool has_section(const std::string& section) const {
    const std::string prefix = section + ".";
    auto it = t_.lower_bound(prefix);
    return it != t_.end() && it->first.starts_with(prefix);
  }

  std::optional<std::string> str(const std::string& key) {
    const ConfigValue* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError("'" + key + "' must be a string");
  }

  std::string required_str(const std::string& key) {
    auto v = str(key);
    if (!v) throw ConfigError("missing required key '" + key + "'");
    return *v;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const ConfigValue* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
    throw ConfigError("'" + key + "' must be an integer");
  }

  std::optional<double> real(const std::string& key) {
    const ConfigValue* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* d = std::get_if<double>(v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    throw ConfigError("'" + key + "' must be a number");
  }

  std::optional<bool> boolean(const std::string& key) {
    const ConfigValue* v = find(key);
    if (!v) return std::nullopt;
    if (const auto* b = std::get_if<bool>(v)) return *b;
    throw ConfigError("'" + key + "' must be true or false");
  }

  std::optional<std::filesystem::path> path(const std::string& key) {
    auto s = str(key);
    if (!s) return std::nullopt;
    std::filesystem::path p(*s);
    return p.is_absolute() ? p : (base_ / p).lexically_normal();
  }

  void reject_unknown() const {
    for (const auto& [key, _] : t_) {
      if (!used_.count(key)) throw ConfigError("unknown configuration key '" + key + "'");
    }
  }

 private:
  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    auto it = t_.find(key);
    return it == t_.end() ? nullptr : &it->second;
  }

  const ConfigTable& t_;
  std::filesystem::path base_;
  std::set<std::string> used_;
};

LlmEndpointConfig read_endpoint(TableReader& r, const std::string& section) {
  LlmEndpointConfig e;
  e.base_url = r.required_str(section + ".base_url");
  e.model_name = r.required_str(section + ".model");
  if (auto v = r.real(section + ".temperature")) e.temperature = *v;
  if (auto v = r.integer(section + ".max_tokens")) e.max_tokens = static_cast<int>(*v);
  if (auto v = r.real(section + ".timeout")) e.timeout = std::chrono::duration<double>(*v);
  if (auto v = r.integer(section + ".max_retries")) e.max_retries = static_cast<int>(*v);
  if (auto v = r.real(section + ".backoff_base")) e.backoff_base = std::chrono::duration<double>(*v);
  if (auto v = r.str(section + ".api_key"); v && !v->empty()) e.api_key = *v;
  try {
    validate(e);
  } catch (const ConfigError& err) {
    throw ConfigError("[" + section + "] " + err.what());
  }
  return e;
}

int positive(std::optional<std::int64_t> v, int fallback, const char* key) {
  if (!v) return fallback;
  if (*v < 1 || *v > 1'000'000) throw ConfigError(std::string("'") + key + "' must be >= 1");
  return static_cast<int>(*v);
}

}  // namespace

ConfigTable parse_config_text(std::string_view text) {
  ConfigTable table;
  std::string section;
  const auto lines = split_lines(text);
  for (size_t n = 0; n < lines.size(); ++n) {
    const size_t line_no = n + 1;
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;

    if (t.front() == '[') {
      const size_t close = t.find(']');
      if (close == std::string_view::npos) fail_line(line_no, "unterminated section header");
      const std::string_view rest = trim(t.substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail_line(line_no, "text after section header");
      section = std::string(trim(t.substr(1, close - 1)));
      if (section.empty()) fail_line(line_no, "empty section name");
      continue;
    }

    size_t pos = 0;
    while (pos < t.size() && is_bare_key_char(t[pos])) ++pos;
    const std::string key(t.substr(0, pos));
    if (key.empty()) fail_line(line_no, "expected a key");
    while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
    if (pos >= t.size() || t[pos] != '=') fail_line(line_no, "expected '=' after '" + key + "'");
    ++pos;
    while (pos < t.size() && (t[pos] == ' ' || t[pos] == '\t')) ++pos;
    ConfigValue value = parse_value(t, pos, line_no);
    const std::string_view rest = trim(t.substr(pos));
    if (!rest.empty() && rest.front() != '#') fail_line(line_no, "unexpected text after value");

    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.emplace(full, std::move(value)).second) fail_line(line_no, "duplicate key '" + full + "'");
  }
  return table;
}

RunConfig run_config_from_table(const ConfigTable& table, const std::filesystem::path& base_dir) {
  TableReader r(table, base_dir);
  RunConfig cfg;

  const std::string strategy = r.required_str("strategy");
  auto parsed = parse_strategy(strategy);
  if (!parsed) throw ConfigError("unknown strategy '" + strategy + "'");
  cfg.strategy = *parsed;

  auto dataset = r.path("dataset");
  if (!dataset) throw ConfigError("missing required key 'dataset'");
  cfg.dataset_path = *dataset;
  cfg.runs = positive(r.integer("runs"), cfg.runs, "runs");
  cfg.rag_k = positive(r.integer("rag_k"), cfg.rag_k, "rag_k");
  cfg.concurrency = positive(r.integer("concurrency"), cfg.concurrency, "concurrency");
  cfg.property_catalog = r.path("property_catalog");
  if (auto p = r.path("cache_dir")) cfg.cache_dir = *p;
  else cfg.cache_dir = base_dir / cfg.cache_dir;
  if (auto p = r.path("output_dir")) cfg.output_dir = *p;
  else cfg.output_dir = base_dir / cfg.output_dir;
  cfg.offline_replay = r.boolean("offline_replay").value_or(false);
  cfg.expand_paraphrases = r.boolean("expand_paraphrases").value_or(false);
  cfg.templates_dir = r.path("templates_dir");
  cfg.model_label = r.str("model_label").value_or("");
  cfg.epoch = r.str("epoch").value_or("");
  cfg.sparql_endpoint = r.str("sparql_endpoint").value_or("");

  if (!r.has_section("generation")) throw ConfigError("missing required section [generation]");
  cfg.generation = read_endpoint(r, "generation");
  if (cfg.model_label.empty()) cfg.model_label = cfg.generation.model_name;
  if (r.has_section("correction")) cfg.correction = read_endpoint(r, "correction");
  if (r.has_section("embedding")) cfg.embedding = read_endpoint(r, "embedding");

  if (auto v = r.real("execution.timeout")) {
    if (!(*v > 0)) throw ConfigError("'execution.timeout' must be > 0");
    cfg.execution.timeout = std::chrono::duration<double>(*v);
  }
  if (auto v = r.str("execution.format")) {
    if (*v == "json") cfg.execution.format = ResultFormat::json;
    else if (*v == "tsv") cfg.execution.format = ResultFormat::tsv;
    else throw ConfigError("'execution.format' must be \"json\" or \"tsv\"");
  }
  cfg.execution.strict_literals = r.boolean("execution.strict_literals").value_or(false);
  if (auto v = r.integer("execution.max_response_bytes")) {
    if (*v < 1) throw ConfigError("'execution.max_response_bytes' must be >= 1");
    cfg.execution.max_response_bytes = static_cast<size_t>(*v);
  }
  cfg.recordings_dir = r.path("execution.recordings_dir");
  cfg.record_responses = r.boolean("execution.record").value_or(false);

  r.reject_unknown();

  if (uses_rag(cfg.strategy) && !cfg.property_catalog) {
    throw ConfigError("strategy '" + strategy + "' needs 'property_catalog'");
  }
  if (cfg.offline_replay && !cfg.recordings_dir) {
    throw ConfigError("offline_replay needs 'execution.recordings_dir'");
  }
  if (cfg.record_responses && !cfg.recordings_dir) {
    throw ConfigError("'execution.record' needs 'execution.recordings_dir'");
  }
  if (!cfg.offline_replay && cfg.sparql_endpoint.find("://") == std::string::npos) {
    throw ConfigError("'sparql_endpoint' must be an absolute URL");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  try {
    return run_config_from_table(parse_config_text(text), base);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const RunConfig& cfg) {
  auto endpoint = [](const LlmEndpointConfig& e) {
    return nlohmann::json{{"base_url", e.base_url},
                          {"model", e.model_name},
                          {"temperature", e.temperature},
                          {"max_tokens", e.max_tokens},
                          {"timeout", e.timeout.count()},
                          {"max_retries", e.max_retries}};
  };
  nlohmann::json j = {
      {"strategy", to_string(cfg.strategy)},
      {"dataset", cfg.dataset_path.string()},
      {"sparql_endpoint", cfg.sparql_endpoint},
      {"runs", cfg.runs},
      {"rag_k", cfg.rag_k},
      {"concurrency", cfg.concurrency},
      {"offline_replay", cfg.offline_replay},
      {"expand_paraphrases", cfg.expand_paraphrases},
      {"model_label", cfg.model_label},
      {"epoch", cfg.epoch},
      {"generation", endpoint(cfg.generation)},
      {"execution",
       {{"timeout", cfg.execution.timeout.count()},
        {"format", cfg.execution.format == ResultFormat::json ? "json" : "tsv"},
        {"strict_literals", cfg.execution.strict_literals},
        {"max_response_bytes", cfg.execution.max_response_bytes}}},
  };
  if (cfg.property_catalog) j["property_catalog"] = cfg.property_catalog->string();
  if (cfg.correction) j["correction"] = endpoint(*cfg.correction);
  if (cfg.embedding) j["embedding"] = endpoint(*cfg.embedding);
  return j;
}

}  // namespace sparqlgen
