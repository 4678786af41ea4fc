#pragma once

#include <stdexcept>
#include <string>

namespace microcolor {

/// Base class for all errors raised by this library.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dimension or layout disagreement between planes, tensors, or layers.
class shape_error : public error {
 public:
  explicit shape_error(const std::string& msg) : error(msg) {}
};

/// A caller-supplied value violates a precondition.
class argument_error : public error {
 public:
  explicit argument_error(const std::string& msg) : error(msg) {}
};

/// Filesystem or codec failure; message carries the offending path.
class io_error : public error {
 public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

/// Reference masks fail to cover the content exactly once.
class mask_error : public error {
 public:
  mask_error(const std::string& msg, long offending_pixels)
      : error(msg), offending_pixels(offending_pixels) {}
  long offending_pixels = 0;
};

/// Optimization produced a non-finite loss.
class divergence_error : public error {
 public:
  divergence_error(const std::string& msg, long step) : error(msg), step(step) {}
  long step = 0;
};

/// Checkpoint file is unreadable, truncated, or malformed.
class checkpoint_error : public error {
 public:
  explicit checkpoint_error(const std::string& msg) : error(msg) {}
};

/// Checkpoint was produced under a different model configuration.
class fingerprint_error : public checkpoint_error {
 public:
  explicit fingerprint_error(const std::string& msg) : checkpoint_error(msg) {}
};

/// A survey record fails structural validation; message names the participant.
class validation_error : public error {
 public:
  explicit validation_error(const std::string& msg) : error(msg) {}
};

}  // namespace microcolor
