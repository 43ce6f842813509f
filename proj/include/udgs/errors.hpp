#pragma once

#include <stdexcept>
#include <string>

namespace udgs {

// Coarse error classes; the detailed condition (BadMagic, MalformedLine, ...)
// is carried in the message text. The C API maps these onto status codes.
enum class ErrorCode {
  InvalidArgument,
  Io,
  Data,
  TrackingDiverged,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace udgs
