#pragma once

#include "gocre/glm_family.hpp"

namespace gocre {

enum class LeverageMode { FullDelta, ClosedForm };

/// Diagonal of the weighted hat matrix W^{1/2} X (X'WX)^+ X' W^{1/2}.
struct LeverageSpec {
    Vector zeta;
    LeverageMode mode = LeverageMode::FullDelta;
    long rank = 0;  // numerical rank of W^{1/2} X; -1 when not computed
};

/// Leverages from a thin SVD of W^{1/2} X. Singular values at or below
/// max(n, p) * eps * sigma_max are treated as zero. The p x p
/// pseudo-inverse is never formed.
LeverageSpec delta_full(const Matrix& X, const Vector& w);

/// Same, with `cutoff_dim` in place of max(n, p) in the rank cutoff. For
/// callers that pass X in reduced coordinates (X times an orthonormal basis of
/// its row space) and want the decision made for the original shape.
LeverageSpec delta_full(const Matrix& X, const Vector& w, Eigen::Index cutoff_dim);

/// zeta_i = 1 - w_i / sum(w), exact for weighted-centered X of rank n - 1.
LeverageSpec delta_closed_form(const Vector& w);

/// Firth-adjusted working response
///   Z_i = eta_i + (y_i + zeta_i / 2 - (1 + zeta_i) mu_i) / ((1 + zeta_i) mu'_i).
/// With zeta = 0 this is exactly LinkFamily::working_response.
Vector corrected_working_response(const LinkFamily& family, const Vector& y, const Vector& eta,
                                  const Vector& zeta);

}  // namespace gocre
