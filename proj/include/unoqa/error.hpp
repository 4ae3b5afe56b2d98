#pragma once

#include <stdexcept>
#include <string>

namespace unoqa {

// Process exit codes used by the CLI: 0 ok, 2 config, 3 contract, 4 numeric.
enum class ExitCode : int { Ok = 0, Config = 2, Contract = 3, Numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

// Unusable inputs: bad paths, malformed files, invalid configuration or arguments.
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ExitCode::Config, w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error(ExitCode::Config, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ExitCode::Config, w) {}
};
struct ArgError : Error {
  explicit ArgError(const std::string& w) : Error(ExitCode::Config, w) {}
};

// Pipeline contract violations, e.g. non-outstanding labels in a training manifest.
struct ContractError : Error {
  explicit ContractError(const std::string& w) : Error(ExitCode::Contract, w) {}
};

// Non-finite values, degenerate statistics, diverged training.
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ExitCode::Numeric, w) {}
};

}  // namespace unoqa
