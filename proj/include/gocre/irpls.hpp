#pragma once

#include "gocre/engine.hpp"

#include <functional>

namespace gocre {

/// Weighted PLS1 fit of z on W-centered X with X-only deflation.
struct PlsFit {
    Vector beta;
    double intercept = 0;    // 1'Wz / 1'W1
    int components = 0;      // may be < kappa when the covariance vanishes
};

PlsFit weighted_pls(const Matrix& X, const Vector& z, const Vector& w, int kappa);

struct IrplsOptions {
    int kappa = 1;
    int max_iter = 100;
    double tol = 1e-6;
    double divergence_norm = 1e6;
    LinkFamily family = LinkFamily::logit();
};

struct IrplsResult {
    Vector beta;            // on the original predictor scale
    double intercept = 0;   // intercept for uncentered X
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
};

/// Leverage callback: (W-centered X, w) -> zeta. Returning an empty vector
/// disables the bias correction for that iteration.
using LeverageProvider = std::function<Vector(const Matrix&, const Vector&)>;

/// Generic IRLS loop with a PLS solve in place of weighted least squares.
/// Every iteration re-centers X under the current weights and rebuilds all
/// kappa components from scratch.
IrplsResult irpls_fit(const Dataset& data, const IrplsOptions& options,
                      const LeverageProvider& leverage = {});

/// Marx-style IRPLS: plain working response.
IrplsResult irpls_m_fit(const Dataset& data, const IrplsOptions& options);

/// Ding-Gentleman-style IRPLS: Firth-corrected working response with
/// leverages recomputed by delta_full at every iteration.
IrplsResult irpls_dg_fit(const Dataset& data, const IrplsOptions& options);

Prediction predict(const IrplsResult& fit, const LinkFamily& family, const Matrix& Xnew);

}  // namespace gocre
