#pragma once

#include <stdexcept>
#include <string>

namespace ira {

// Malformed or inconsistent input (dimension mismatch, out-of-range parameter).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Experiment configuration rejected at parse/validation time.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data matrix D_- lacks full row rank or is too ill-conditioned to identify a model set.
class RankError : public std::runtime_error {
 public:
  RankError(std::string resolution, const std::string& what)
      : std::runtime_error(what), resolution_(std::move(resolution)) {}

  const std::string& resolution() const noexcept { return resolution_; }

 private:
  std::string resolution_;
};

// External set predictor could not be started or answered with an error record.
class PredictorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ira
