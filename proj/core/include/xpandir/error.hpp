#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xpandir {

/// Base class for all domain errors. `kind()` is a stable machine-readable
/// tag; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

/// A line of an input file that does not match the format grammar.
class MalformedRecord : public Error {
  public:
    MalformedRecord(const std::string& path, std::size_t line, const std::string& detail)
        : Error("MalformedRecord",
                path + ":" + std::to_string(line) + ": " + detail),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class DuplicateId : public Error {
  public:
    explicit DuplicateId(const std::string& id)
        : Error("DuplicateId", "duplicate id \"" + id + "\""), id_(id) {}

    const std::string& id() const noexcept { return id_; }

  private:
    std::string id_;
};

class EmptyCollection : public Error {
  public:
    explicit EmptyCollection(const std::string& detail)
        : Error("EmptyCollection", detail) {}
};

class GradeOutOfRange : public Error {
  public:
    GradeOutOfRange(const std::string& path, std::size_t line, int grade)
        : Error("GradeOutOfRange", path + ":" + std::to_string(line) +
                                       ": grade " + std::to_string(grade) +
                                       " outside [0,6]"),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class MultiplePositives : public Error {
  public:
    explicit MultiplePositives(const std::string& query_id)
        : Error("MultiplePositives",
                "single-positive qrels hold more than one positive for query \"" +
                    query_id + "\""),
          query_id_(query_id) {}

    const std::string& query_id() const noexcept { return query_id_; }

  private:
    std::string query_id_;
};

class UnknownDocument : public Error {
  public:
    explicit UnknownDocument(const std::string& doc_id)
        : Error("UnknownDocument", "document \"" + doc_id + "\" is not indexed") {}
};

class UnknownLanguage : public Error {
  public:
    explicit UnknownLanguage(const std::string& code)
        : Error("UnknownLanguage",
                "language code \"" + code + "\" is not registered") {}
};

class PoolTooSmall : public Error {
  public:
    PoolTooSmall(std::size_t pool, std::size_t wanted)
        : Error("PoolTooSmall", "pool holds " + std::to_string(pool) +
                                    " usable pairs, need " + std::to_string(wanted)) {}
};

class MissingExamples : public Error {
  public:
    explicit MissingExamples(const std::string& detail)
        : Error("MissingExamples", detail) {}
};

class BackendUnavailable : public Error {
  public:
    explicit BackendUnavailable(const std::string& detail)
        : Error("BackendUnavailable", detail) {}
};

class InvalidRequest : public Error {
  public:
    explicit InvalidRequest(const std::string& detail)
        : Error("InvalidRequest", detail) {}
};

class ResponseEmpty : public Error {
  public:
    explicit ResponseEmpty(const std::string& detail)
        : Error("ResponseEmpty", detail) {}
};

class NoRelevantDocs : public Error {
  public:
    explicit NoRelevantDocs(const std::string& query_id)
        : Error("NoRelevantDocs",
                "query \"" + query_id + "\" has no relevant documents"),
          query_id_(query_id) {}

    const std::string& query_id() const noexcept { return query_id_; }

  private:
    std::string query_id_;
};

class MissingBaseline : public Error {
  public:
    explicit MissingBaseline(const std::string& pair)
        : Error("MissingBaseline", "no baseline result for pair " + pair) {}
};

class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& detail) : Error("ConfigError", detail) {}
};

class IoError : public Error {
  public:
    explicit IoError(const std::string& detail) : Error("IoError", detail) {}
};

}  // namespace xpandir
