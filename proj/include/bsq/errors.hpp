#pragma once

#include <stdexcept>
#include <string>

namespace bsq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent arguments (dimension mismatch, empty inputs, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class RootFindError : public Error {
 public:
  RootFindError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// No joint-flow return was found inside the search horizon.
class NoPeriodError : public Error {
 public:
  using Error::Error;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

/// Phase of det^2 jumped too far between consecutive frames.
class UndersamplingError : public Error {
 public:
  using Error::Error;
};

class SamplerStarvationError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class WindowOverlapError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed; `stage` names it, the message carries the cause.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// One of the hypotheses H1, H2, H'3, H4 fails for the system at hand.
class HypothesisViolation : public Error {
 public:
  HypothesisViolation(std::string hypothesis, const std::string& detail)
      : Error(hypothesis + " violated: " + detail),
        hypothesis_(std::move(hypothesis)),
        detail_(detail) {}
  const std::string& hypothesis() const noexcept { return hypothesis_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string hypothesis_;
  std::string detail_;
};

}  // namespace bsq
