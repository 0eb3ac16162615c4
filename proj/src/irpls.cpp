#include "gocre/irpls.hpp"

#include "gocre/errors.hpp"

#include <cmath>

namespace gocre {

PlsFit weighted_pls(const Matrix& X, const Vector& z, const Vector& w, int kappa) {
    require_same_length(X.rows(), z.size(), "weighted_pls");
    require_same_length(X.rows(), w.size(), "weighted_pls");
    if (kappa < 1) {
        throw std::invalid_argument("weighted_pls: kappa must be >= 1");
    }
    PlsFit out;
    const Vector wz = w.cwiseProduct(z);
    out.intercept = wz.sum() / w.sum();

    std::vector<ComponentRecord> comps;
    Matrix Xk = X;
    const double scale = w.sum() * std::max(1.0, X.size() ? X.cwiseAbs().maxCoeff() : 0.0);
    for (int k = 0; k < kappa; ++k) {
        const Vector cov = Xk.transpose() * wz;
        const double norm = cov.norm();
        // Tiny relative covariance means X_k has been exhausted.
        if (!(norm > 1e-13 * scale)) {
            break;
        }
        ComponentRecord c;
        c.alpha = cov / norm;
        c.score = Xk * c.alpha;
        const double tt = c.score.cwiseProduct(w).dot(c.score);
        if (!(tt > 0.0)) {
            break;
        }
        c.gamma = c.score.dot(wz) / tt;
        c.P_row = deflate_in_place(Xk, c.score, w);
        comps.push_back(std::move(c));
    }
    out.components = static_cast<int>(comps.size());
    out.beta = recover_coefficients(comps, X.cols()).beta_hat;
    return out;
}

IrplsResult irpls_fit(const Dataset& data, const IrplsOptions& options,
                      const LeverageProvider& leverage) {
    data.validate(options.family);
    const LinkFamily& family = options.family;
    const Eigen::Index n = data.n();

    IrplsResult result;
    result.beta = Vector::Zero(data.p());
    result.intercept = family.link(data.y.mean());
    Vector eta = Vector::Constant(n, result.intercept);
    Vector beta_prev = result.beta;

    for (int it = 1; it <= options.max_iter; ++it) {
        result.iterations = it;
        const Vector w = family.variance_weight(eta);
        const CenteredMatrix centered = weighted_center(data.X, w);
        Vector zeta;
        if (leverage) {
            zeta = leverage(centered.X, w);
        }
        const Vector z = zeta.size() > 0
                             ? corrected_working_response(family, data.y, eta, zeta)
                             : family.working_response(data.y, eta);
        const PlsFit pls = weighted_pls(centered.X, z, w, options.kappa);

        const double norm = pls.beta.norm();
        if (!std::isfinite(norm) || !std::isfinite(pls.intercept) ||
            norm > options.divergence_norm) {
            result.diverged = true;
            result.converged = false;
            return result;  // keeps the last finite iterate
        }
        result.beta = pls.beta;
        result.intercept = pls.intercept - centered.offsets.dot(pls.beta);
        eta = (centered.X * pls.beta).array() + pls.intercept;

        const double change = (pls.beta - beta_prev).norm() / std::max(1.0, beta_prev.norm());
        if (change < options.tol) {
            result.converged = true;
            return result;
        }
        beta_prev = pls.beta;
    }
    return result;
}

IrplsResult irpls_m_fit(const Dataset& data, const IrplsOptions& options) {
    return irpls_fit(data, options);
}

IrplsResult irpls_dg_fit(const Dataset& data, const IrplsOptions& options) {
    if (options.family.kind() != FamilyKind::LogitBernoulli) {
        throw std::invalid_argument("irpls_dg_fit: bias correction requires the logit family");
    }
    return irpls_fit(data, options,
                     [](const Matrix& Xc, const Vector& w) { return delta_full(Xc, w).zeta; });
}

Prediction predict(const IrplsResult& fit, const LinkFamily& family, const Matrix& Xnew) {
    if (Xnew.cols() != fit.beta.size()) {
        throw DimensionError("predict: column-count mismatch");
    }
    Prediction out;
    out.eta = (Xnew * fit.beta).array() + fit.intercept;
    out.mean = family.inverse_link(out.eta);
    return out;
}

}  // namespace gocre
