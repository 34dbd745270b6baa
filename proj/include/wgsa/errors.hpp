#pragma once

#include <stdexcept>
#include <string>

namespace wgsa {

// Ratio estimator hit a zero (or numerically zero) denominator, e.g. a
// constant output.  Carries the raw numerator/denominator for diagnostics.
class DegenerateOutputError : public std::runtime_error {
 public:
  DegenerateOutputError(double numerator, double denominator)
      : std::runtime_error("degenerate output: index denominator is not positive (numerator=" +
                           std::to_string(numerator) +
                           ", denominator=" + std::to_string(denominator) + ")"),
        numerator_(numerator),
        denominator_(denominator) {}

  double numerator() const noexcept { return numerator_; }
  double denominator() const noexcept { return denominator_; }

 private:
  double numerator_;
  double denominator_;
};

class InsufficientSampleError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class UnsupportedFeatureError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// calibrate_n: the required approximation size exceeds the configured ceiling.
class CalibrationInfeasibleError : public std::runtime_error {
 public:
  CalibrationInfeasibleError(long long required_n, long long ceiling)
      : std::runtime_error("calibration infeasible: required n=" + std::to_string(required_n) +
                           " exceeds ceiling " + std::to_string(ceiling)),
        required_n_(required_n) {}

  long long required_n() const noexcept { return required_n_; }

 private:
  long long required_n_;
};

// A stochastic simulator call failed; message carries the input context.
class SimulatorError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace wgsa
