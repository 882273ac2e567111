#pragma once

#include "qvi/grid.hpp"

namespace qvi {

/// Regularization pair (penalty scale eps, viscosity delta), both in (0, 1).
struct RegularizationParams {
    double epsilon = 0.1;
    double delta = 0.1;
    /// Box-kernel width in faces for smoothing G along each axis; 0 or 1 disables.
    int g_smoothing = 0;

    void check() const;
};

/// Exponents above this are clamped; e^700 is still finite in binary64.
inline constexpr double kPenaltyExponentCap = 700.0;

/// k_eps(s): 1 for s <= 0, e^{s/eps} for s >= eps, and e^{beta(s)/eps} in
/// between with beta(s) = s * smoothstep5(s/eps), which is C2 at both seams.
double penalty_k(double s, double eps);
double penalty_k_prime(double s, double eps);
/// K_eps(s) = integral of k_eps over [0, s].
double penalty_K(double s, double eps);

/// True when penalty_k(s, eps) hit the exponent cap.
bool penalty_clamped(double s, double eps);

/// Box-kernel average of per-face thresholds along each axis, clamped below at lambda_floor.
FaceField smooth_constraint(const FaceField& g_values, const RegularizationParams& params, double lambda_floor);

}  // namespace qvi
