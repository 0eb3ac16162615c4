#pragma once

#include "gocre/firth.hpp"
#include "gocre/glm_family.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace gocre {

/// Response plus n x p predictors.
struct Dataset {
    Matrix X;
    Vector y;
    std::vector<std::string> column_names;  // optional, size p when present
    std::string response_name;

    Eigen::Index n() const noexcept { return X.rows(); }
    Eigen::Index p() const noexcept { return X.cols(); }

    /// Throws if shapes disagree, entries are non-finite, the data are empty,
    /// or y falls outside the family's support.
    void validate(const LinkFamily& family) const;
};

enum class WeightStrategy {
    DynamicFirstComponent,  // update W while building component 1, then freeze
    TwoRun,                 // refit once with W taken from the first run's final eta
};

enum class BiasMode { None, FullDelta, ClosedFormDelta };

enum class StopReason { Uncorrelated, KappaMax, InnerNonconvergence };

std::string_view to_string(WeightStrategy s);
std::string_view to_string(BiasMode m);
std::string_view to_string(StopReason r);
WeightStrategy weight_strategy_from_string(std::string_view s);
BiasMode bias_mode_from_string(std::string_view s);
StopReason stop_reason_from_string(std::string_view s);

struct FitConfig {
    int kappa_max = 10;
    double tol_alpha = 1e-8;
    int max_inner_iter = 100;
    double stop_eps = 1e-10;
    WeightStrategy weight_strategy = WeightStrategy::DynamicFirstComponent;
    BiasMode bias_mode = BiasMode::None;
    bool standardize = false;
    std::uint64_t seed = 0;  // the fit is deterministic; kept for provenance

    void validate() const;
};

/// One constructed component, expressed on the deflated matrix it was built from.
struct ComponentRecord {
    Vector alpha;      // unit loading on X_j
    Vector P_row;      // deflation row: X_{j+1} = X_j - X_j alpha P
    double gamma = 0;  // coefficient of the score, refreshed by later components
    Vector score;      // X_j alpha
    int inner_iters = 0;
    bool converged = false;

    // Model state right after this component converged; lets a fit with
    // kappa_max = K be truncated to any k < K without refitting.
    double intercept_at_build = 0;
    Vector gammas_at_build;
};

struct FitDiagnostics {
    int components_built = 0;
    StopReason stop_reason = StopReason::KappaMax;
    std::vector<int> inner_iters;
    int runs = 1;
    bool identity_weight_fallback = false;  // component 1 rebuilt with W = I

    bool all_converged() const noexcept { return stop_reason != StopReason::InnerNonconvergence; }
};

struct GocreModel {
    double intercept = 0;
    std::vector<ComponentRecord> components;
    std::vector<Vector> loadings;  // composite loadings on the centered (and scaled) predictors
    Vector beta_hat;               // coefficients on the original predictor scale
    Vector column_offsets;
    Vector column_scales;          // all ones unless standardize was requested
    Vector weights;                // frozen diagonal of W
    LinkFamily family = LinkFamily::logit();
    FitConfig config;
    FitDiagnostics diagnostics;
    std::vector<std::string> column_names;

    Eigen::Index p() const noexcept { return column_offsets.size(); }

    /// The model made of the first k components (0 <= k <= components.size()).
    GocreModel truncated(std::size_t k) const;
};

/// Weighted column centering: offsets = X'W1 / sum(w).
struct CenteredMatrix {
    Matrix X;
    Vector offsets;
};
CenteredMatrix weighted_center(const Matrix& X, const Vector& w);

struct DeflationResult {
    Vector P_row;
    Matrix X_next;
};

/// P = alpha'X'WX / (alpha'X'WX alpha);  X_next = X - X alpha P.
DeflationResult deflate(const Matrix& Xj, const Vector& alpha, const Vector& w);

/// In-place variant used by the fitting loop; returns P.
Vector deflate_in_place(Matrix& Xj, const Vector& score, const Vector& w);

/// Everything the inner loop needs besides the current deflated matrix.
struct ComponentContext {
    const Vector& y;
    const Vector& w;
    const Vector* zeta = nullptr;  // nullptr: plain working response
    const LinkFamily& family;
};

struct ComponentResult {
    ComponentRecord record;
    double intercept = 0;
    Vector eta;
    std::vector<double> prior_gammas;  // refreshed gammas of the earlier components
    bool uncorrelated = false;         // X_j'WZ vanished; no component was produced
};

/// Builds component j on a fixed weight vector by alternating the working
/// response, intercept, loading, coefficient and linear-predictor updates
/// until the loading stops moving.
ComponentResult construct_component(const Matrix& Xj, const std::vector<ComponentRecord>& prior,
                                    const Vector& eta_init, const ComponentContext& ctx,
                                    const FitConfig& config);

struct RecoveredCoefficients {
    std::vector<Vector> loadings;
    Vector beta_hat;
};

/// Composite loadings (I - a_1 P_1)...(I - a_{j-1} P_{j-1}) a_j and
/// beta = sum_j gamma_j loading_j, via vector recursions only.
RecoveredCoefficients recover_coefficients(const std::vector<ComponentRecord>& components,
                                           Eigen::Index p);

GocreModel fit(const Dataset& data, const LinkFamily& family, const FitConfig& config);

struct Prediction {
    Vector eta;
    Vector mean;
};

Prediction predict(const GocreModel& model, const Matrix& Xnew);

}  // namespace gocre
