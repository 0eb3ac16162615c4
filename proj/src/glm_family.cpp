#include "gocre/glm_family.hpp"

#include "gocre/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gocre {

namespace {

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite input");
    }
}

double clamped_logistic(double eta) {
    const double mu = eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta))
                                 : std::exp(eta) / (1.0 + std::exp(eta));
    return std::clamp(mu, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::LogitBernoulli:
            return "logit";
        case FamilyKind::IdentityGaussian:
            return "identity";
    }
    return "unknown";
}

FamilyKind family_kind_from_string(std::string_view name) {
    if (name == "logit" || name == "binomial" || name == "logit-bernoulli") {
        return FamilyKind::LogitBernoulli;
    }
    if (name == "identity" || name == "gaussian" || name == "identity-gaussian") {
        return FamilyKind::IdentityGaussian;
    }
    throw std::invalid_argument("unknown family '" + std::string(name) + "'");
}

LinkFamily LinkFamily::logit() { return LinkFamily(FamilyKind::LogitBernoulli, 1.0); }

LinkFamily LinkFamily::identity(double dispersion) {
    if (!(dispersion > 0.0) || !std::isfinite(dispersion)) {
        throw std::invalid_argument("dispersion must be positive and finite");
    }
    return LinkFamily(FamilyKind::IdentityGaussian, dispersion);
}

double LinkFamily::link(double mean) const {
    if (kind_ == FamilyKind::IdentityGaussian) {
        return mean;
    }
    const double mu = std::clamp(mean, kProbabilityClamp, 1.0 - kProbabilityClamp);
    return std::log(mu / (1.0 - mu));
}

Vector LinkFamily::inverse_link(const Vector& eta) const {
    require_finite(eta, "inverse_link");
    if (kind_ == FamilyKind::IdentityGaussian) {
        return eta;
    }
    return eta.unaryExpr(&clamped_logistic);
}

Vector LinkFamily::mean_derivative(const Vector& eta) const {
    require_finite(eta, "mean_derivative");
    if (kind_ == FamilyKind::IdentityGaussian) {
        return Vector::Ones(eta.size());
    }
    return eta.unaryExpr([](double e) {
        const double mu = clamped_logistic(e);
        return mu * (1.0 - mu);
    });
}

Vector LinkFamily::working_response(const Vector& y, const Vector& eta) const {
    require_same_length(y.size(), eta.size(), "working_response");
    if (kind_ == FamilyKind::IdentityGaussian) {
        require_finite(eta, "working_response");
        return y;
    }
    const Vector mu = inverse_link(eta);
    const Vector d = mean_derivative(eta);
    return eta.array() + (y - mu).array() / d.array();
}

Vector LinkFamily::variance_weight(const Vector& eta) const {
    require_finite(eta, "variance_weight");
    if (kind_ == FamilyKind::IdentityGaussian) {
        return Vector::Constant(eta.size(), 1.0 / dispersion_);
    }
    // For the canonical logit (d mu/d eta)^2 / mu(1-mu) collapses to mu(1-mu).
    return mean_derivative(eta);
}

void LinkFamily::validate_response(const Vector& y) const {
    require_finite(y, "response");
    if (kind_ == FamilyKind::LogitBernoulli) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] != 0.0 && y[i] != 1.0) {
                throw std::invalid_argument("logit family requires a 0/1 response (entry " +
                                            std::to_string(i) + " is " +
                                            std::to_string(y[i]) + ")");
            }
        }
    }
}

}  // namespace gocre
