#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace wordscores {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// One or more virgin documents share no word with the word-score table.
class UnscorableDocumentError : public Error {
 public:
  explicit UnscorableDocumentError(std::vector<std::string> ids);
  const std::vector<std::string>& document_ids() const noexcept { return ids_; }

 private:
  std::vector<std::string> ids_;
};

/// LBG / MV transform cannot be formed (zero variance, degenerate anchors).
class TransformError : public Error {
 public:
  using Error::Error;
};

/// A statistic is undefined for the input (zero variance, constant group).
class StatisticsError : public Error {
 public:
  using Error::Error;
};

/// Run configuration is malformed or references missing files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace wordscores
