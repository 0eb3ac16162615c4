#include "gocre/firth.hpp"

#include "gocre/errors.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gocre {

namespace {

void require_positive_weights(const Vector& w) {
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
            throw std::invalid_argument("weights must be positive and finite");
        }
    }
}

// Left singular vectors of A (n x m) belonging to the numerically nonzero
// singular values, plus the singular values themselves.
struct LeftBasis {
    Matrix U;
    Vector sigma;
};

LeftBasis left_singular_basis(const Matrix& A) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = A.cols();
    if (m > n) {
        // Wide case: A' = QR, so A = R'Q' and the left singular vectors of A
        // are the right singular vectors of R (an n x n problem).
        Eigen::HouseholderQR<Matrix> qr(A.transpose());
        const Matrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
        Eigen::BDCSVD<Matrix> svd(R, Eigen::ComputeThinV);
        return {svd.matrixV(), svd.singularValues()};
    }
    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU);
    return {svd.matrixU(), svd.singularValues()};
}

}  // namespace

LeverageSpec delta_full(const Matrix& X, const Vector& w) {
    return delta_full(X, w, std::max(X.rows(), X.cols()));
}

LeverageSpec delta_full(const Matrix& X, const Vector& w, Eigen::Index cutoff_dim) {
    require_same_length(X.rows(), w.size(), "delta_full");
    require_positive_weights(w);
    if (!X.allFinite()) {
        throw std::invalid_argument("delta_full: non-finite predictor");
    }
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();

    LeverageSpec out;
    out.mode = LeverageMode::FullDelta;
    out.zeta = Vector::Zero(n);
    if (n == 0 || p == 0) {
        return out;
    }

    const Matrix Xw = w.cwiseSqrt().asDiagonal() * X;
    const LeftBasis basis = left_singular_basis(Xw);
    const double sigma_max = basis.sigma.size() > 0 ? basis.sigma.maxCoeff() : 0.0;
    if (sigma_max == 0.0) {
        return out;
    }
    const double cutoff = static_cast<double>(cutoff_dim) *
                          std::numeric_limits<double>::epsilon() * sigma_max;
    for (Eigen::Index k = 0; k < basis.sigma.size(); ++k) {
        if (basis.sigma[k] > cutoff) {
            out.zeta += basis.U.col(k).cwiseAbs2();
            ++out.rank;
        }
    }
    return out;
}

LeverageSpec delta_closed_form(const Vector& w) {
    if (w.size() < 2) {
        throw std::invalid_argument("delta_closed_form: need at least two observations");
    }
    require_positive_weights(w);
    LeverageSpec out;
    out.mode = LeverageMode::ClosedForm;
    out.rank = w.size() - 1;
    out.zeta = (1.0 - w.array() / w.sum()).matrix();
    return out;
}

Vector corrected_working_response(const LinkFamily& family, const Vector& y, const Vector& eta,
                                  const Vector& zeta) {
    require_same_length(y.size(), eta.size(), "corrected_working_response");
    require_same_length(zeta.size(), eta.size(), "corrected_working_response");
    const Vector mu = family.inverse_link(eta);
    const Vector d = family.mean_derivative(eta);
    const auto scale = (1.0 + zeta.array());
    return eta.array() +
           (y.array() + 0.5 * zeta.array() - scale * mu.array()) / (scale * d.array());
}

}  // namespace gocre
