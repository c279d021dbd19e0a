#pragma once

#include <stdexcept>
#include <string>

namespace sirus {

enum class ErrorKind {
  Config,          // invalid parameters or command-line usage
  Data,            // malformed or unusable input data
  Io,              // file could not be read or written
  InvalidSplit,    // a split leaves one side empty
  InvalidPath,     // a path describes an empty region
  DegenerateRule,  // a rule with no training point on one side
  Runtime
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sirus
