#pragma once

#include <stdexcept>
#include <string>

namespace neuroid {

/// Base of every error raised by the library. Subclasses map one-to-one onto
/// the failure classes callers are expected to tell apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or unreadable on-disk artefact (manifest, data file, event table).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant does not hold. The message starts with the field
/// path of the offending value, e.g. `subjects[2].sessions[0].n_events`.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class TruncationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Parameter outside its admissible domain (filter bands, windows, geometry).
class ParamError : public Error {
 public:
  using Error::Error;
};

/// An operation would produce (or was given) nothing to work on.
class EmptyError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Raised by fold builders when a user has too few genuine rows. Callers
/// record it and move on; it never aborts a run.
class SkipUser : public Error {
 public:
  using Error::Error;
};

/// Configuration problem. The message starts with the YAML path (or line).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace neuroid
