#pragma once

#include <string>

#include "ira/setcalc.hpp"

namespace ira::conformal {

// Position of a prediction inside a coarse interval. tau_* are time fractions t / T_total.
struct Substep {
  int j = 1;
  int Ns = 2;
  double tau_current = 0.0;
  double tau_endpoint = 0.0;
};

/**
 * Set-valued predictor of the next fine-step set from the current set and the
 * interval's endpoint anchor. Implementations must be deterministic for fixed
 * inputs and safe to call from several threads at once.
 */
class PredictorInterface {
 public:
  virtual ~PredictorInterface() = default;

  virtual setcalc::Zonotope predict(const setcalc::Zonotope& current, const setcalc::Zonotope& endpoint,
                                    const Substep& step) const = 0;

  virtual std::string name() const = 0;
};

}  // namespace ira::conformal
