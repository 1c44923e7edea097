#pragma once

#include <stdexcept>
#include <string>

namespace dcca {

enum class ErrorKind {
  shape,       // operand dimensions disagree
  degenerate,  // too few samples or zero variance
  config,      // invalid parameter or configuration
  numeric,     // non-finite values produced during computation
  parse,       // malformed file contents
  data,        // well-formed file with unusable values
  state,       // object used in an inconsistent state
  input,       // input too short or otherwise unusable
  symmetry,    // matrix expected symmetric
  boundary,    // value on the boundary of a function's domain
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// CLI exit code for an error kind: 2 config, 3 data, 4 numeric.
int exit_code(ErrorKind kind);

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace dcca
