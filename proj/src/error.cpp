#include "dcca/error.hpp"

namespace dcca {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::shape: return "shape error";
    case ErrorKind::degenerate: return "degenerate-sample error";
    case ErrorKind::config: return "config error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::data: return "data error";
    case ErrorKind::state: return "state error";
    case ErrorKind::input: return "input error";
    case ErrorKind::symmetry: return "symmetry error";
    case ErrorKind::boundary: return "boundary error";
  }
  return "error";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return 2;
    case ErrorKind::shape:
    case ErrorKind::degenerate:
    case ErrorKind::parse:
    case ErrorKind::data:
    case ErrorKind::input:
      return 3;
    case ErrorKind::numeric:
    case ErrorKind::state:
    case ErrorKind::symmetry:
    case ErrorKind::boundary:
      return 4;
  }
  return 4;
}

void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what);
}

}  // namespace dcca
