#include "sparqlgen/execution.hpp"

#include <json.hpp>

#include "sparqlgen/errors.hpp"
#include "sparqlgen/http.hpp"
#include "sparqlgen/util.hpp"

namespace sparqlgen {

using nlohmann::json;

const char* to_string(ExecutionStatus s) {
  switch (s) {
    case ExecutionStatus::success: return "success";
    case ExecutionStatus::syntax_error: return "syntax_error";
    case ExecutionStatus::transport_error: return "transport_error";
    case ExecutionStatus::timeout: return "timeout";
  }
  return "?";
}

std::optional<ExecutionStatus> parse_execution_status(std::string_view s) {
  for (auto v : {ExecutionStatus::success, ExecutionStatus::syntax_error,
                 ExecutionStatus::transport_error, ExecutionStatus::timeout}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

bool is_empty(const ExecutionOutcome& outcome) {
  return outcome.status == ExecutionStatus::success && outcome.table && outcome.table->rows.empty();
}

const char* accept_header(ResultFormat format) {
  return format == ResultFormat::json ? "application/sparql-results+json"
                                      : "text/tab-separated-values";
}

namespace {

std::string json_cell(const json& binding, bool strict) {
  const std::string value = binding.at("value").get<std::string>();
  if (!strict) return value;
  const std::string type = binding.value("type", "literal");
  if (type == "uri") return "<" + value + ">";
  if (type == "bnode") return "_:" + value;
  std::string out = "\"" + value + "\"";
  if (binding.contains("xml:lang")) {
    out += "@" + binding["xml:lang"].get<std::string>();
  } else if (binding.contains("datatype")) {
    out += "^^<" + binding["datatype"].get<std::string>() + ">";
  }
  return out;
}

std::string unescape_literal(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    switch (s[++i]) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      default: out += s[i];
    }
  }
  return out;
}

// "v"^^<dt> -> v, "v"@en -> v, <iri> -> iri, anything else verbatim.
std::string lexical_form(std::string_view term) {
  if (term.size() >= 2 && term.front() == '<' && term.back() == '>') {
    return std::string(term.substr(1, term.size() - 2));
  }
  if (!term.empty() && term.front() == '"') {
    const size_t close = term.rfind('"');
    if (close > 0) return unescape_literal(term.substr(1, close - 1));
  }
  return std::string(term);
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    cells.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cells;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ResultTable parse_sparql_json(std::string_view body, bool strict_literals) {
  ResultTable table;
  try {
    const json doc = json::parse(body);
    for (const auto& v : doc.at("head").at("vars")) table.vars.push_back(v.get<std::string>());
    for (const auto& binding : doc.at("results").at("bindings")) {
      std::vector<std::string> row;
      row.reserve(table.vars.size());
      for (const auto& var : table.vars) {
        auto it = binding.find(var);
        row.push_back(it == binding.end() ? std::string() : json_cell(*it, strict_literals));
      }
      table.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed SPARQL JSON results: ") + e.what());
  }
  return table;
}

ResultTable parse_sparql_tsv(std::string_view body, bool strict_literals) {
  std::string text(body);
  std::erase(text, '\r');
  const auto lines = split_lines(text);
  if (lines.empty()) throw TransportError("malformed SPARQL TSV results: missing header");
  ResultTable table;
  for (auto& h : split_tabs(lines[0])) {
    table.vars.push_back(!h.empty() && (h[0] == '?' || h[0] == '$') ? h.substr(1) : h);
  }
  for (size_t i = 1; i < lines.size(); ++i) {
    auto cells = split_tabs(lines[i]);
    if (cells.size() != table.vars.size()) {
      throw TransportError("malformed SPARQL TSV results: row " + std::to_string(i) + " has " +
                           std::to_string(cells.size()) + " cells");
    }
    if (!strict_literals) {
      for (auto& c : cells) c = lexical_form(c);
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

ExecutionOutcome decode_response(int status, std::string_view body, std::string_view content_type,
                                 const ExecutionOptions& options) {
  if (status >= 200 && status < 300) {
    const bool tsv = content_type.find("tab-separated") != std::string_view::npos ||
                     (content_type.find("json") == std::string_view::npos &&
                      options.format == ResultFormat::tsv);
    try {
      return ExecutionOutcome::ok(tsv ? parse_sparql_tsv(body, options.strict_literals)
                                      : parse_sparql_json(body, options.strict_literals));
    } catch (const TransportError& e) {
      return ExecutionOutcome::failed(ExecutionStatus::transport_error, e.what());
    }
  }
  if (status >= 400 && status < 500 && !trim(body).empty()) {
    std::string message(trim(body));
    try {
      const json doc = json::parse(body);
      if (doc.is_object() && doc.contains("exception") && doc["exception"].is_string()) {
        message = doc["exception"].get<std::string>();
      }
    } catch (const json::exception&) {
    }
    return ExecutionOutcome::failed(ExecutionStatus::syntax_error, std::move(message));
  }
  return ExecutionOutcome::failed(ExecutionStatus::transport_error,
                                  "HTTP " + std::to_string(status) + ": " + std::string(body));
}

std::string recording_key(std::string_view query, ResultFormat format) {
  const json fields = {"sparql", accept_header(format), std::string(trim(query))};
  return sha256_hex(fields.dump());
}

HttpExecutor::HttpExecutor(std::string endpoint, ExecutionOptions options,
                           std::shared_ptr<const ResponseCache> recorder)
    : endpoint_(std::move(endpoint)), options_(options), recorder_(std::move(recorder)) {}

ExecutionOutcome HttpExecutor::execute(const std::string& query) {
  HttpRequest req;
  req.url = endpoint_;
  req.body = query;
  req.content_type = "application/sparql-query";
  req.headers.emplace_back("Accept", accept_header(options_.format));
  req.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(options_.timeout);
  req.max_response_bytes = options_.max_response_bytes;

  const auto start = std::chrono::steady_clock::now();
  HttpResponse res;
  try {
    res = http_post(req);
  } catch (const TimeoutError& e) {
    return ExecutionOutcome::failed(ExecutionStatus::timeout, e.what(), seconds_since(start));
  } catch (const TransportError& e) {
    return ExecutionOutcome::failed(ExecutionStatus::transport_error, e.what(), seconds_since(start));
  }
  const double elapsed = seconds_since(start);
  if (recorder_) {
    recorder_->put(recording_key(query, options_.format),
                   json{{"query", query},
                        {"accept", accept_header(options_.format)},
                        {"status", res.status},
                        {"content_type", res.content_type},
                        {"body", res.body}});
  }
  auto outcome = decode_response(res.status, res.body, res.content_type, options_);
  outcome.elapsed_seconds = elapsed;
  return outcome;
}

ReplayExecutor::ReplayExecutor(std::shared_ptr<const ResponseCache> recordings,
                               ExecutionOptions options)
    : recordings_(std::move(recordings)), options_(options) {
  if (!recordings_) throw PreconditionError("replay executor needs a recordings store");
}

ExecutionOutcome ReplayExecutor::execute(const std::string& query) {
  const auto entry = recordings_->get(recording_key(query, options_.format));
  if (!entry) {
    return ExecutionOutcome::failed(ExecutionStatus::transport_error,
                                    "no recorded response for this query");
  }
  return decode_response(entry->at("status").get<int>(), entry->at("body").get<std::string>(),
                         entry->value("content_type", ""), options_);
}

ExecutionOutcome execute(const std::string& query, const std::string& endpoint,
                         std::chrono::duration<double> timeout) {
  ExecutionOptions options;
  options.timeout = timeout;
  return HttpExecutor(endpoint, options).execute(query);
}

}  // namespace sparqlgen
