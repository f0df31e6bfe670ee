#include "ctdc/error.hpp"

namespace ctdc {

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

void throw_usage(const std::string& what) { throw Error(ErrorKind::usage, what); }
void throw_schema(const std::string& what) { throw Error(ErrorKind::schema, what); }
void throw_data(const std::string& what) { throw Error(ErrorKind::data, what); }
void throw_convergence(const std::string& what) { throw Error(ErrorKind::convergence, what); }

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::schema: return "schema";
    case ErrorKind::data: return "data";
    case ErrorKind::convergence: return "convergence";
  }
  return "unknown";
}

}  // namespace ctdc
