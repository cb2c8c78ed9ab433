// Copyright 2026 The lidarsdf Authors
// SPDX-License-Identifier: Apache-2.0
//
// Confidence of a signed-distance label as a function of how far the sample
// sits behind the observed surface.

#pragma once

namespace lidarsdf {

struct SampleSpec;

enum class ConfidenceFormula {
  // (b^w - 1) / (b - 1) + eps: 1 + eps at the surface, eps at d_max.
  kNormalized,
  // b^(w - 1) / (b - 1) + eps. Kept only for side-by-side comparison; it
  // does not hit 1 at the surface unless b = 2.
  kLiteral,
};

struct ConfidenceParams {
  static constexpr double kEpsilon = 1e-7;

  double b = 10.0;    // decay shape, > 1
  double d_max = 3.0; // deepest negative distance along a ray [m]
  ConfidenceFormula formula = ConfidenceFormula::kNormalized;

  void validate() const;
};

/// Returns 1 for sdf >= 0. Otherwise `d` is the depth behind the surface,
/// normalized as w = 1 - d / d_max. Throws for d outside [0, d_max].
double confidence_value(double sdf, double d, const ConfidenceParams& params);

/// Largest negative distance a sample drawn under `spec` can carry.
double dmax_from_dataset(const SampleSpec& spec);

}  // namespace lidarsdf
