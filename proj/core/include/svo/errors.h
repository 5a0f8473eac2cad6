#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svo {

// Raised when a configuration value or function argument is outside its
// documented domain (non-positive lag, SVO angle outside [0, pi/4], ...).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file. `line` is 1-based; 0 when the error is not tied to a
// particular line (missing file, empty file).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A vehicle reached a non-positive gap or a state became non-finite during an
// episode.
class EpisodeError : public std::runtime_error {
 public:
  EpisodeError(const std::string& what, std::size_t step)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// IRL weight fit exceeded its norm cap.
class FitDivergence : public std::runtime_error {
 public:
  FitDivergence(const std::string& what, int iteration, double weight_norm)
      : std::runtime_error(what),
        iteration_(iteration),
        weight_norm_(weight_norm) {}
  int iteration() const { return iteration_; }
  double weight_norm() const { return weight_norm_; }

 private:
  int iteration_;
  double weight_norm_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace svo
