#pragma once

#include <stdexcept>
#include <string>

namespace cuq {

// Validation failure in input data or configuration (bad file, bad flag,
// violated precondition). Maps to exit code 2 in the CLI.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Failure while executing an otherwise well-formed request. Exit code 1.
class RuntimeFailure : public std::runtime_error {
public:
  explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

// A cascade escalation asked for stage-2 features that the record does not
// carry. Kept distinct so callers can tell "go acquire the data" apart from
// genuine failures.
class AcquisitionRequired : public RuntimeFailure {
public:
  explicit AcquisitionRequired(const std::string& record_id)
      : RuntimeFailure("stage-2 acquisition required for record '" + record_id +
                       "': escalated but stage-2 features are absent"),
        record_id_(record_id) {}

  const std::string& record_id() const { return record_id_; }

private:
  std::string record_id_;
};

}  // namespace cuq
