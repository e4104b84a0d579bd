#pragma once

#include <stdexcept>
#include <string>

namespace clinsim {

/// Base class for every error raised by the harness.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A document or backend response could not be decoded.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(what) {}
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// File-system failure (missing path, unwritable output).
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

/// Failure of a language-model or embedding backend. Transport failures
/// (connection reset, 5xx, rate limit) are retryable; semantic failures
/// are not.
class BackendError : public Error {
public:
    BackendError(const std::string& what, bool transport_failure)
        : Error(what), transport_(transport_failure) {}

    bool transport() const noexcept { return transport_; }

private:
    bool transport_;
};

/// Raised when a patient turn aborts; carries the pipeline stage that failed.
class PatientTurnError : public Error {
public:
    PatientTurnError(const std::string& stage, const std::string& what)
        : Error("patient turn failed at stage '" + stage + "': " + what), stage_(stage) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace clinsim
