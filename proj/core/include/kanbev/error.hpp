#pragma once

#include <stdexcept>
#include <string>

namespace kanbev {

// Contract or invariant violation on caller-supplied data. The CLI maps this
// to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable/unwritable file or malformed on-disk payload. Exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure inside a named pipeline stage; wraps the underlying message.
class StageError : public ValidationError {
 public:
  StageError(std::string stage, const std::string& what)
      : ValidationError("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace kanbev
