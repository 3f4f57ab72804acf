#pragma once

#include <stdexcept>
#include <string>

namespace simkit {

/// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A component or simulation name violates the name grammar.
class InvalidNameError : public Error {
 public:
  using Error::Error;
};

/// A required procedure (simulate/apply/compute) was not supplied.
class MissingProcedureError : public Error {
 public:
  using Error::Error;
};

/// A user component tried to claim a reserved name (e.g. the "time" metric).
class ReservedNameError : public Error {
 public:
  using Error::Error;
};

/// Creating or renaming would clobber an existing simulation record.
class CollisionError : public Error {
 public:
  using Error::Error;
};

/// A requested object has not been produced yet; names the pipeline stage
/// that would create it.
class MissingStageError : public Error {
 public:
  MissingStageError(const std::string& msg, std::string stage)
      : Error(msg), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// A payload file failed its content checksum on load.
class ChecksumError : public Error {
 public:
  using Error::Error;
};

/// A persisted RNG state carries an algorithm/version tag this build
/// does not implement.
class VersionMismatchError : public Error {
 public:
  using Error::Error;
};

/// A component broke its contract (wrong shape, missing key, bad count).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed predicate string, CLI argument, or file grammar.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Writing a payload file whose path already holds different content.
class OverwriteError : public Error {
 public:
  using Error::Error;
};

}  // namespace simkit
