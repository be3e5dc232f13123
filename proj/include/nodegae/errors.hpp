#pragma once

#include <stdexcept>
#include <string>

namespace nodegae {

// Invalid hyperparameters or command options. The CLI maps this to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Tensor or layer shapes that do not conform to an operation's rule.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition of an operation was violated (non-scalar loss, missing grad, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed dataset files.
class IngestionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Metric undefined for the given input (e.g. single-class ROC-AUC).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace nodegae
