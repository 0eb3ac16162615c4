#pragma once

// Reference computations for the tests. These deliberately avoid the library's
// code paths: explicit loops, textbook formulas, dense pseudo-inverses.

#include "gocre/engine.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace gocre::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Eigen::Index n, Eigen::Index p, Rng& rng) {
    std::normal_distribution<double> normal;
    Matrix X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = normal(rng);
    return X;
}

inline Vector random_weights(Eigen::Index n, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.2, 2.0);
    Vector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = unif(rng);
    return w;
}

/// Binary response from a logistic model with a modest signal; both classes
/// are guaranteed to be present.
inline Vector random_binary_response(const Matrix& X, Rng& rng, double signal = 0.7) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    Vector beta(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) beta[j] = signal * normal(rng);
    Vector y(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double eta = X.row(i).dot(beta);
        y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    if (y.sum() == 0.0) y[0] = 1.0;
    if (y.sum() == static_cast<double>(y.size())) y[0] = 0.0;
    return y;
}

/// Column centering with explicit loops: offsets_j = sum_i w_i x_ij / sum_i w_i.
inline Matrix center_by_loops(const Matrix& X, const Vector& w) {
    Matrix out = X;
    double sw = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) sw += w[i];
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        double m = 0;
        for (Eigen::Index i = 0; i < X.rows(); ++i) m += w[i] * X(i, j);
        m /= sw;
        for (Eigen::Index i = 0; i < X.rows(); ++i) out(i, j) -= m;
    }
    return out;
}

/// Logit inner loop for the first component written out scalar by scalar:
/// Z from the plain working response, mu = weighted mean, alpha = X'WZ/|X'WZ|,
/// gamma = s'WZ / s'Ws, eta = mu + s gamma. Fixed weights, no clamping
/// beyond what keeps the logistic finite.
struct BruteForceComponent {
    std::vector<double> alpha;
    double intercept = 0;
    double gamma = 0;
    int iterations = 0;
};

inline BruteForceComponent brute_force_first_component(const Matrix& Xc, const Vector& y,
                                                       const Vector& w, double eta0, double tol,
                                                       int max_iter) {
    const auto n = static_cast<std::size_t>(Xc.rows());
    const auto p = static_cast<std::size_t>(Xc.cols());
    std::vector<double> eta(n, eta0), z(n), alpha(p), prev(p), s(n);
    BruteForceComponent out;
    for (int t = 1; t <= max_iter; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double mu = 1.0 / (1.0 + std::exp(-eta[i]));
            mu = std::min(std::max(mu, 1e-10), 1.0 - 1e-10);
            z[i] = eta[i] + (y[static_cast<Eigen::Index>(i)] - mu) / (mu * (1.0 - mu));
        }
        double swz = 0, sw = 0;
        for (std::size_t i = 0; i < n; ++i) {
            swz += w[static_cast<Eigen::Index>(i)] * z[i];
            sw += w[static_cast<Eigen::Index>(i)];
        }
        const double mu0 = swz / sw;
        double norm = 0;
        for (std::size_t j = 0; j < p; ++j) {
            double c = 0;
            for (std::size_t i = 0; i < n; ++i)
                c += Xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                     w[static_cast<Eigen::Index>(i)] * z[i];
            alpha[j] = c;
            norm += c * c;
        }
        norm = std::sqrt(norm);
        for (auto& a : alpha) a /= norm;
        double num = 0, den = 0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = 0;
            for (std::size_t j = 0; j < p; ++j)
                s[i] += Xc(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * alpha[j];
            num += s[i] * w[static_cast<Eigen::Index>(i)] * z[i];
            den += s[i] * w[static_cast<Eigen::Index>(i)] * s[i];
        }
        const double g = num / den;
        for (std::size_t i = 0; i < n; ++i) eta[i] = mu0 + s[i] * g;
        out.alpha = alpha;
        out.intercept = mu0;
        out.gamma = g;
        out.iterations = t;
        if (t > 1) {
            double d = 0;
            for (std::size_t j = 0; j < p; ++j) d += (alpha[j] - prev[j]) * (alpha[j] - prev[j]);
            if (std::sqrt(d) < tol) break;
        }
        prev = alpha;
    }
    return out;
}

/// Textbook NIPALS PLS1 on column-mean-centered X and y (unit weights):
/// w = X'y/|X'y|, t = Xw, p = X't/t't, X <- X - t p', q = y't/t't.
struct NipalsPls {
    std::vector<Vector> scores;
    Vector fitted;  // ybar + sum_k t_k q_k
};

inline NipalsPls nipals_pls1(const Matrix& X, const Vector& y, int kappa) {
    const Eigen::Index n = X.rows();
    Matrix E = X;
    for (Eigen::Index j = 0; j < E.cols(); ++j) E.col(j).array() -= E.col(j).mean();
    const double ybar = y.mean();
    const Vector yc = y.array() - ybar;
    NipalsPls out;
    out.fitted = Vector::Constant(n, ybar);
    for (int k = 0; k < kappa; ++k) {
        Vector wk = E.transpose() * yc;
        if (wk.norm() < 1e-12) break;
        wk /= wk.norm();
        const Vector t = E * wk;
        const double tt = t.squaredNorm();
        const Vector pk = E.transpose() * t / tt;
        const double q = yc.dot(t) / tt;
        E -= t * pk.transpose();
        out.scores.push_back(t);
        out.fitted += q * t;
    }
    return out;
}

/// Least squares with intercept via the normal equations on centered data.
struct LeastSquares {
    double intercept;
    Vector beta;
    Vector fitted;
};

inline LeastSquares normal_equations(const Matrix& X, const Vector& y) {
    const Vector means = X.colwise().mean().transpose();
    const Matrix Xc = X.rowwise() - means.transpose();
    const double ybar = y.mean();
    const Vector beta = (Xc.transpose() * Xc).ldlt().solve(Xc.transpose() * (y.array() - ybar).matrix());
    LeastSquares out{ybar - means.dot(beta), beta, Vector()};
    out.fitted = (X * beta).array() + out.intercept;
    return out;
}

/// diag(W^{1/2} X (X'WX)^+ X' W^{1/2}) with an explicitly assembled pseudo-inverse.
inline Vector hat_diagonal_by_pseudo_inverse(const Matrix& X, const Vector& w) {
    const Matrix Xw = w.cwiseSqrt().asDiagonal() * X;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Xw.transpose() * Xw);
    cod.setThreshold(1e-10);
    const Matrix pinv = cod.pseudoInverse();
    const Matrix H = Xw * pinv * Xw.transpose();
    return H.diagonal();
}

/// Completely separated two-predictor fixture: y = 1 exactly when x1 + x2 > 0,
/// with a margin around the separating line.
inline Dataset separated_fixture(int n, Rng& rng) {
    std::normal_distribution<double> normal;
    Dataset d;
    d.X.resize(n, 2);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) {
        double a = normal(rng), b = normal(rng);
        const double side = i % 2 == 0 ? 1.0 : -1.0;
        // push every point at least 0.5 away from the line x1 + x2 = 0
        const double s = a + b;
        const double shift = side * (0.5 + std::abs(s)) - s;
        a += shift / 2;
        b += shift / 2;
        d.X(i, 0) = a;
        d.X(i, 1) = b;
        d.y[i] = side > 0 ? 1.0 : 0.0;
    }
    return d;
}

/// Plain logistic regression by Newton-IRLS on [1 X], dense normal equations.
struct LogisticMle {
    double intercept = 0;
    Vector beta;
    bool converged = false;
};

inline LogisticMle irls_logistic(const Matrix& X, const Vector& y, int max_iter = 100) {
    const Eigen::Index n = X.rows(), p = X.cols();
    Matrix A(n, p + 1);
    A.col(0).setOnes();
    A.rightCols(p) = X;
    Vector theta = Vector::Zero(p + 1);
    LogisticMle out;
    for (int it = 0; it < max_iter; ++it) {
        const Vector eta = A * theta;
        Vector mu(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mu[i] = 1.0 / (1.0 + std::exp(-eta[i]));
            w[i] = mu[i] * (1.0 - mu[i]);
        }
        const Matrix H = A.transpose() * w.asDiagonal() * A;
        const Vector step = H.ldlt().solve(A.transpose() * (y - mu));
        theta += step;
        if (step.norm() < 1e-12 * std::max(1.0, theta.norm())) {
            out.converged = true;
            break;
        }
    }
    out.intercept = theta[0];
    out.beta = theta.tail(p);
    return out;
}

/// Two-sided rank-sum p-value by listing every way to pick the first group:
/// mid-ranks computed by pairwise counting, p = min(1, 2 min(P(W <= w), P(W >= w))).
inline double wilcoxon_by_enumeration(const std::vector<double>& values,
                                      const std::vector<double>& labels) {
    const std::size_t n = values.size();
    std::vector<double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        double less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (values[j] < values[i]) less += 1;
            if (values[j] == values[i]) equal += 1;
        }
        rank[i] = less + (equal + 1) / 2;
    }
    double observed = 0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1.0) {
            observed += rank[i];
            ++m;
        }
    }
    std::vector<int> pick(n, 0);
    std::fill(pick.end() - static_cast<long>(m), pick.end(), 1);
    double total = 0, le = 0, ge = 0;
    do {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) w += rank[i];
        total += 1;
        if (w <= observed + 1e-9) le += 1;
        if (w >= observed - 1e-9) ge += 1;
    } while (std::next_permutation(pick.begin(), pick.end()));
    return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace gocre::testing
