#pragma once

#include <stdexcept>
#include <string>

namespace hdarcy {

enum class ErrorCode {
  invalid_argument,
  config,
  mesh_degeneracy,
  assembly,
  solver,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::config: return "config";
    case ErrorCode::mesh_degeneracy: return "mesh-degeneracy";
    case ErrorCode::assembly: return "assembly";
    case ErrorCode::solver: return "solver";
  }
  return "unknown";
}

/// Base class for every error raised by the library. The code is what the
/// CLI maps onto its exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::invalid_argument, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::config, what) {}
};

struct MeshDegeneracyError : Error {
  explicit MeshDegeneracyError(const std::string& what)
      : Error(ErrorCode::mesh_degeneracy, what) {}
};

struct AssemblyError : Error {
  explicit AssemblyError(const std::string& what)
      : Error(ErrorCode::assembly, what) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& what)
      : Error(ErrorCode::solver, what) {}
};

}  // namespace hdarcy
