#pragma once

#include <stdexcept>
#include <string>

namespace bargain {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed records, invariant violations, unusable arguments.
struct ValidationError : Error {
  using Error::Error;
};

// Text that does not follow the reply grammar or a record format.
struct ParseError : Error {
  using Error::Error;
};

// Illegal negotiation state-machine transitions.
struct ProtocolError : Error {
  using Error::Error;
};

// Remote transport problems, reported after retries are exhausted.
struct TransportError : Error {
  using Error::Error;
};

// Replay-mode request with no stored fixture. Carries the digest so the
// missing file can be located or recorded.
struct FixtureMissingError : TransportError {
  explicit FixtureMissingError(const std::string& request_digest)
      : TransportError("missing fixture for request digest " + request_digest),
        digest(request_digest) {}
  std::string digest;
};

struct FitError : Error {
  using Error::Error;
};

}  // namespace bargain
