#pragma once

#include "varscale/feature_matrix.hpp"

namespace varscale {

/// Squared Frechet distance between Gaussian fits of the two sample sets:
///   ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2))
/// Covariances are population estimates with a 1e-6 diagonal added; the
/// matrix square root uses a symmetric eigendecomposition with negative
/// eigenvalues clamped to zero. Both sets need at least 2 samples.
double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b);

/// Mean over outputs of the Euclidean distance to the nearest mode vector.
/// Lower is better; zero when every output sits exactly on a mode.
double mode_fidelity(const FeatureMatrix& outputs, const FeatureMatrix& modes);

/// Fraction of mode vectors with at least one output within `radius`.
double mode_coverage(const FeatureMatrix& outputs, const FeatureMatrix& modes,
                     double radius);

}  // namespace varscale
