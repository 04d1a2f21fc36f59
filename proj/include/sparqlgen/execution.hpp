#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "sparqlgen/cache.hpp"
#include "sparqlgen/results.hpp"

namespace sparqlgen {

enum class ExecutionStatus { success, syntax_error, transport_error, timeout };

const char* to_string(ExecutionStatus s);
std::optional<ExecutionStatus> parse_execution_status(std::string_view s);

// `table` is present iff status == success.
struct ExecutionOutcome {
  ExecutionStatus status = ExecutionStatus::transport_error;
  std::optional<ResultTable> table;
  std::string message;
  double elapsed_seconds = 0.0;

  static ExecutionOutcome ok(ResultTable t, double elapsed = 0.0) {
    return {ExecutionStatus::success, std::move(t), {}, elapsed};
  }
  static ExecutionOutcome failed(ExecutionStatus s, std::string message, double elapsed = 0.0) {
    return {s, std::nullopt, std::move(message), elapsed};
  }
};

// True iff the query ran successfully and returned zero rows.
bool is_empty(const ExecutionOutcome& outcome);

enum class ResultFormat { json, tsv };

struct ExecutionOptions {
  std::chrono::duration<double> timeout{60.0};
  ResultFormat format = ResultFormat::json;
  // Keep IRI brackets, quotes, language tags and datatypes in cells instead of
  // reducing every term to its lexical form.
  bool strict_literals = false;
  size_t max_response_bytes = 10u * 1024u * 1024u;
};

const char* accept_header(ResultFormat format);

// application/sparql-results+json. Throws TransportError on malformed input.
ResultTable parse_sparql_json(std::string_view body, bool strict_literals = false);
// text/tab-separated-values with a "?var" header line.
ResultTable parse_sparql_tsv(std::string_view body, bool strict_literals = false);

// Maps a raw endpoint answer onto an outcome: 2xx decodes the table, a 4xx
// with a body is a query error (message taken verbatim, or from the
// "exception" field of a JSON body), anything else is a transport error.
ExecutionOutcome decode_response(int status, std::string_view body, std::string_view content_type,
                                 const ExecutionOptions& options);

class QueryExecutor {
 public:
  virtual ~QueryExecutor() = default;
  // Never throws for endpoint or query problems; they are encoded in the status.
  virtual ExecutionOutcome execute(const std::string& query) = 0;
};

// Recorded responses live in a ResponseCache keyed by recording_key(); the
// key ignores surrounding whitespace of the query.
std::string recording_key(std::string_view query, ResultFormat format);

// SPARQL Protocol client: POST with Content-Type application/sparql-query.
// With a recorder every raw response is stored for later offline replay.
class HttpExecutor final : public QueryExecutor {
 public:
  HttpExecutor(std::string endpoint, ExecutionOptions options,
               std::shared_ptr<const ResponseCache> recorder = nullptr);
  ExecutionOutcome execute(const std::string& query) override;

 private:
  std::string endpoint_;
  ExecutionOptions options_;
  std::shared_ptr<const ResponseCache> recorder_;
};

// Serves recorded responses only; a missing recording is a transport error.
class ReplayExecutor final : public QueryExecutor {
 public:
  ReplayExecutor(std::shared_ptr<const ResponseCache> recordings, ExecutionOptions options);
  ExecutionOutcome execute(const std::string& query) override;

 private:
  std::shared_ptr<const ResponseCache> recordings_;
  ExecutionOptions options_;
};

ExecutionOutcome execute(const std::string& query, const std::string& endpoint,
                         std::chrono::duration<double> timeout);

}  // namespace sparqlgen
