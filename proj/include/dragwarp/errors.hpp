#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dragwarp {

/// Caller supplied something malformed: bad dimensions, bad coordinates, undecodable bytes.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A named thing (session, backend) does not exist.
class NotFound : public std::runtime_error {
 public:
  NotFound(const std::string& what, std::vector<std::string> available = {})
      : std::runtime_error(what), available_(std::move(available)) {}

  const std::vector<std::string>& available() const { return available_; }

 private:
  std::vector<std::string> available_;
};

/// Request is valid but clashes with the session's current state.
class Conflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Remote backend could not be reached or did not answer before its deadline.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Remote backend answered with something that violates the wire contract.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dragwarp
