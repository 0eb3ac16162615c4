#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>

namespace gocre {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Fitted probabilities are kept inside [kProbabilityClamp, 1 - kProbabilityClamp]
/// so that the mean derivative and its reciprocal stay finite under separation.
inline constexpr double kProbabilityClamp = 1e-10;

enum class FamilyKind { LogitBernoulli, IdentityGaussian };

std::string_view to_string(FamilyKind kind);
FamilyKind family_kind_from_string(std::string_view name);

/// Canonical-link exponential family used by the component engine.
///
/// Only two members ship: logit/Bernoulli, the target of the method, and
/// identity/Gaussian, under which the engine reduces to weighted PLS.
class LinkFamily {
public:
    static LinkFamily logit();
    static LinkFamily identity(double dispersion = 1.0);

    FamilyKind kind() const noexcept { return kind_; }
    double dispersion() const noexcept { return dispersion_; }

    /// g(mu); for the logit the argument is clamped first.
    double link(double mean) const;

    /// Element-wise inverse link. Logit output is clamped.
    Vector inverse_link(const Vector& eta) const;

    /// d g^{-1}(eta) / d eta, evaluated at the clamped mean.
    Vector mean_derivative(const Vector& eta) const;

    /// Linearized response eta + (y - mu) / (d mu / d eta).
    Vector working_response(const Vector& y, const Vector& eta) const;

    /// Reciprocal variance of the working response:
    /// (d mu / d eta)^2 / (b''(theta) a(phi)).
    Vector variance_weight(const Vector& eta) const;

    /// Checks that every y lies in the family's support.
    void validate_response(const Vector& y) const;

    bool operator==(const LinkFamily&) const = default;

private:
    LinkFamily(FamilyKind kind, double dispersion) : kind_(kind), dispersion_(dispersion) {}

    FamilyKind kind_;
    double dispersion_;
};

}  // namespace gocre
