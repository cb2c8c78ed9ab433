// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0

#include "lidarsdf/confidence.hpp"

#include <cmath>
#include <string>

#include "lidarsdf/augment.hpp"
#include "lidarsdf/geometry.hpp"

namespace lidarsdf {

void ConfidenceParams::validate() const {
  if (!(b > 1.0) || !std::isfinite(b)) throw ValidationError("confidence.b must be > 1");
  if (!(d_max > 0.0) || !std::isfinite(d_max)) throw ValidationError("confidence.d_max must be > 0");
}

double confidence_value(double sdf, double d, const ConfidenceParams& params) {
  if (!(params.b > 1.0)) throw ValidationError("confidence_value: b must be > 1");
  if (sdf >= 0.0) return 1.0;
  if (!(d >= 0.0)) throw ValidationError("confidence_value: negative depth " + std::to_string(d));
  if (d > params.d_max)
    throw ValidationError("confidence_value: depth " + std::to_string(d) + " exceeds d_max " +
                          std::to_string(params.d_max));
  const double w = 1.0 - d / params.d_max;
  const double b = params.b;
  switch (params.formula) {
    case ConfidenceFormula::kLiteral:
      return std::pow(b, w - 1.0) / (b - 1.0) + ConfidenceParams::kEpsilon;
    case ConfidenceFormula::kNormalized:
    default:
      return (std::pow(b, w) - 1.0) / (b - 1.0) + ConfidenceParams::kEpsilon;
  }
}

double dmax_from_dataset(const SampleSpec& spec) { return spec.truncation_dmax; }

}  // namespace lidarsdf
