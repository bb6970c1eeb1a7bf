#pragma once

#include <stdexcept>
#include <string>

namespace orientbot {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor/layer shape mismatch. Message carries the offending shapes.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

/// Invalid argument value (out-of-range label, bad fraction, ...).
struct ArgumentError : Error {
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

/// Joint configuration from which no body orientation can be derived.
struct DegeneratePoseError : Error {
  explicit DegeneratePoseError(const std::string& msg) : Error(msg) {}
};

/// Training produced a non-finite loss. Message names the step.
struct DivergenceError : Error {
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

/// Malformed file contents (magic/version mismatch, truncation, parse errors).
struct FormatError : Error {
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

/// Filesystem-level failure (file missing, not writable).
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace orientbot
