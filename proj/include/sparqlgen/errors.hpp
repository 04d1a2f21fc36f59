#pragma once

#include <stdexcept>
#include <string>

namespace sparqlgen {

// Base of every error raised by the harness. Per-item pipeline failures are
// not exceptions; they are turned into error categories by the runner.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SPARQLGEN_DEFINE_ERROR(Name)          \
  class Name : public Error {                 \
   public:                                    \
    using Error::Error;                       \
  }

// dataset
SPARQLGEN_DEFINE_ERROR(MalformedFile);
SPARQLGEN_DEFINE_ERROR(DuplicateId);

// prompting
SPARQLGEN_DEFINE_ERROR(EmptyQuestion);
SPARQLGEN_DEFINE_ERROR(DimensionMismatch);
SPARQLGEN_DEFINE_ERROR(ZeroVector);
SPARQLGEN_DEFINE_ERROR(EmptyTrainSet);
SPARQLGEN_DEFINE_ERROR(EmptyCatalog);
SPARQLGEN_DEFINE_ERROR(EmptyContext);

// llm_client and execution transport
SPARQLGEN_DEFINE_ERROR(TransportError);
SPARQLGEN_DEFINE_ERROR(TimeoutError);
SPARQLGEN_DEFINE_ERROR(EmptyCompletion);
SPARQLGEN_DEFINE_ERROR(RaggedVectors);
SPARQLGEN_DEFINE_ERROR(CacheMiss);

// postprocess
SPARQLGEN_DEFINE_ERROR(NoQueryFound);
SPARQLGEN_DEFINE_ERROR(IncompleteBundle);

// metrics
SPARQLGEN_DEFINE_ERROR(EmptyRun);
SPARQLGEN_DEFINE_ERROR(EmptyList);

// runner
SPARQLGEN_DEFINE_ERROR(ConfigError);
SPARQLGEN_DEFINE_ERROR(IoError);
// The run stopped early; completed items are in the checkpoint log.
SPARQLGEN_DEFINE_ERROR(RunAborted);

// A violated operation precondition (e.g. embedding an empty batch).
SPARQLGEN_DEFINE_ERROR(PreconditionError);

#undef SPARQLGEN_DEFINE_ERROR

// Non-2xx answer from an HTTP endpoint that is not worth retrying.
class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body)
      : Error("endpoint returned HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace sparqlgen
