#pragma once

#include <stdexcept>
#include <string>

namespace ctdc {

// Broad failure classes; the CLI maps each to its own exit code.
enum class ErrorKind {
  usage,        // bad arguments or violated preconditions
  schema,       // malformed task / config / parameter file
  data,         // records inconsistent with the task or each other
  convergence,  // numerical procedure failed to converge
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void throw_usage(const std::string& what);
[[noreturn]] void throw_schema(const std::string& what);
[[noreturn]] void throw_data(const std::string& what);
[[noreturn]] void throw_convergence(const std::string& what);

const char* to_string(ErrorKind kind) noexcept;

}  // namespace ctdc
