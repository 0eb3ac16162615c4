#include "gocre/engine.hpp"

#include "gocre/errors.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <functional>

namespace gocre {

namespace {

double max_abs(const Matrix& X) { return X.size() == 0 ? 0.0 : X.cwiseAbs().maxCoeff(); }

// max|X_j| in the caller's coordinates, needed by the relative covariance
// test. `upper` bounds it from above; `exact` is only consulted when the
// bound alone cannot settle the test.
struct ScaleProbe {
    double upper = 0;
    std::function<double()> exact;
};

ScaleProbe exact_probe(double value) {
    return {value, [value] { return value; }};
}

// ||X_j'WZ|| / (sum(w) max(1, max|X_j|)) < stop_eps, NaN counting as below.
bool is_uncorrelated(double cov_norm, double weight_sum, const ScaleProbe& scale, double stop_eps) {
    if (cov_norm / (weight_sum * std::max(1.0, scale.upper)) >= stop_eps) {
        return false;
    }
    return !(cov_norm / (weight_sum * std::max(1.0, scale.exact())) >= stop_eps);
}

// Coordinates the fitting loop runs in. With p > n every loading lies in the
// row space of X, so with X' = QR (thin) the loop runs on Y = XQ = R' (n x n)
// and loadings and deflation rows map back through Q. Norms, scores and
// weighted inner products are unchanged; an inner iteration costs O(n^2).
class Frame {
public:
    explicit Frame(const Matrix& X) : X_(X) {
        if (X.cols() > 0) {
            range_bound_ = (X.colwise().maxCoeff() - X.colwise().minCoeff()).maxCoeff();
        }
        if (X.cols() > X.rows()) {
            qr_.emplace(X.transpose());
            Y_ = qr_->matrixQR().topRows(X.rows()).triangularView<Eigen::Upper>().transpose();
        }
    }

    bool reduced() const { return qr_.has_value(); }
    const Matrix& work() const { return reduced() ? Y_ : X_; }
    const Matrix& original() const { return X_; }
    Eigen::Index cutoff_dim() const { return std::max(X_.rows(), X_.cols()); }
    // Any weighted-centered copy of X stays within this.
    double centered_bound() const { return range_bound_; }

    // Q V: columns in working coordinates to original coordinates.
    Matrix lift(const Matrix& V) const {
        if (!reduced()) return V;
        Matrix padded = Matrix::Zero(X_.cols(), V.cols());
        padded.topRows(V.rows()) = V;
        return qr_->householderQ() * padded;
    }

    // max|X_j| for X_j given in working coordinates.
    double original_max_abs(const Matrix& Xj) const {
        return reduced() ? max_abs(lift(Xj.transpose())) : max_abs(Xj);
    }

private:
    const Matrix& X_;
    Matrix Y_;
    std::optional<Eigen::HouseholderQR<Matrix>> qr_;
    double range_bound_ = 0;
};

Vector working_response_for(const ComponentContext& ctx, const Vector& eta) {
    if (ctx.zeta != nullptr) {
        return corrected_working_response(ctx.family, ctx.y, eta, *ctx.zeta);
    }
    return ctx.family.working_response(ctx.y, eta);
}

LeverageSpec leverage_for(BiasMode mode, const Frame& frame, const Matrix& Xc, const Vector& w) {
    if (mode == BiasMode::FullDelta) {
        return delta_full(Xc, w, frame.cutoff_dim());
    }
    return delta_closed_form(w);
}

// Steps 2-6 of one inner iteration given the working response Z.
struct InnerUpdate {
    bool uncorrelated = false;
    double intercept = 0;
    Vector alpha;
    Vector score;
    std::vector<double> gammas;  // prior components first, then the new one
    Vector eta;
};

InnerUpdate inner_update(const Matrix& Xj, const ScaleProbe& scale,
                         const std::vector<ComponentRecord>& prior,
                         const std::vector<double>& prior_norms, const Vector& Z, const Vector& w,
                         double stop_eps) {
    InnerUpdate out;
    const Vector wz = w.cwiseProduct(Z);
    const double weight_sum = w.sum();
    out.intercept = wz.sum() / weight_sum;

    const Vector cov = Xj.transpose() * wz;
    const double cov_norm = cov.norm();
    if (is_uncorrelated(cov_norm, weight_sum, scale, stop_eps)) {
        out.uncorrelated = true;
        return out;
    }
    out.alpha = cov / cov_norm;
    out.score = Xj * out.alpha;

    out.eta = Vector::Constant(Z.size(), out.intercept);
    out.gammas.reserve(prior.size() + 1);
    for (std::size_t k = 0; k < prior.size(); ++k) {
        const double g = prior[k].score.dot(wz) / prior_norms[k];
        out.gammas.push_back(g);
        out.eta += g * prior[k].score;
    }
    const double g = out.score.dot(wz) / out.score.cwiseProduct(w).dot(out.score);
    out.gammas.push_back(g);
    out.eta += g * out.score;
    return out;
}

std::vector<double> weighted_score_norms(const std::vector<ComponentRecord>& prior,
                                         const Vector& w) {
    std::vector<double> norms;
    norms.reserve(prior.size());
    for (const auto& c : prior) {
        norms.push_back(c.score.cwiseProduct(w).dot(c.score));
    }
    return norms;
}

ComponentResult finish(const InnerUpdate& u, int iters, bool converged) {
    ComponentResult res;
    res.intercept = u.intercept;
    res.eta = u.eta;
    res.prior_gammas.assign(u.gammas.begin(), u.gammas.end() - 1);
    res.record.alpha = u.alpha;
    res.record.score = u.score;
    res.record.gamma = u.gammas.back();
    res.record.inner_iters = iters;
    res.record.converged = converged;
    res.record.intercept_at_build = u.intercept;
    res.record.gammas_at_build = Eigen::Map<const Vector>(u.gammas.data(),
                                                           static_cast<Eigen::Index>(u.gammas.size()));
    return res;
}

ComponentResult uncorrelated_result(const InnerUpdate& u, const Vector& eta, int iters) {
    ComponentResult res;
    res.uncorrelated = true;
    res.intercept = u.intercept;
    res.eta = eta;
    res.record.inner_iters = iters;
    return res;
}

ComponentResult build_component(const Matrix& Xj, const ScaleProbe& scale,
                                const std::vector<ComponentRecord>& prior, const Vector& eta_init,
                                const ComponentContext& ctx, const FitConfig& config) {
    const std::vector<double> prior_norms = weighted_score_norms(prior, ctx.w);
    Vector eta = eta_init;
    Vector alpha_prev;
    InnerUpdate u;
    for (int t = 1; t <= config.max_inner_iter; ++t) {
        const Vector Z = working_response_for(ctx, eta);
        u = inner_update(Xj, scale, prior, prior_norms, Z, ctx.w, config.stop_eps);
        if (u.uncorrelated) {
            return uncorrelated_result(u, eta, t);
        }
        eta = u.eta;
        if (t > 1 && (u.alpha - alpha_prev).norm() < config.tol_alpha) {
            return finish(u, t, true);
        }
        alpha_prev = u.alpha;
    }
    return finish(u, config.max_inner_iter, false);
}

// State shared by every component of one run once W is frozen. `centered`
// is in working coordinates.
struct RunState {
    Vector w;
    CenteredMatrix centered;
    std::optional<Vector> zeta;
};

// max|X - 1 m'| for the weighted-centered X, bounded by the column ranges.
ScaleProbe centered_probe(const Frame& frame, const Vector& w) {
    return {frame.centered_bound(), [&frame, w] {
                return max_abs(weighted_center(frame.original(), w).X);
            }};
}

void set_weights(RunState& st, const Frame& frame, const FitConfig& config, Vector w) {
    st.w = std::move(w);
    st.centered = weighted_center(frame.work(), st.w);
    st.zeta.reset();
    if (config.bias_mode != BiasMode::None) {
        st.zeta = leverage_for(config.bias_mode, frame, st.centered.X, st.w).zeta;
    }
}

// Component 1 under dynamic weights: W starts at the identity and follows
// variance_weight(eta) each iteration; X is re-centered (and zeta refreshed)
// whenever W moves. The last W used is the one frozen for later components.
ComponentResult first_component_dynamic(const Frame& frame, const Vector& y,
                                        const LinkFamily& family, const FitConfig& config,
                                        const Vector& eta0, RunState& state) {
    const Eigen::Index n = frame.work().rows();
    Vector eta = eta0;
    Vector eta_prev = eta0;
    Vector alpha_prev;
    InnerUpdate u;
    for (int t = 1; t <= config.max_inner_iter; ++t) {
        // Weights from the mean of the last two iterates; the plain update
        // tends to lock into a 2-cycle when p >> n. Same fixed point.
        set_weights(state, frame, config,
                    t == 1 ? Vector::Ones(n) : family.variance_weight(0.5 * (eta + eta_prev)));
        const ComponentContext ctx{y, state.w, state.zeta ? &*state.zeta : nullptr, family};
        const Vector Z = working_response_for(ctx, eta);
        u = inner_update(state.centered.X, centered_probe(frame, state.w), {}, {}, Z, state.w,
                         config.stop_eps);
        if (u.uncorrelated) {
            return uncorrelated_result(u, eta, t);
        }
        eta_prev = eta;
        eta = u.eta;
        if (t > 1 && (u.alpha - alpha_prev).norm() < config.tol_alpha) {
            return finish(u, t, true);
        }
        alpha_prev = u.alpha;
    }
    return finish(u, config.max_inner_iter, false);
}

struct RunResult {
    RunState state;
    std::vector<ComponentRecord> components;  // alpha and P_row in working coordinates
    double intercept = 0;
    Vector eta;
    FitDiagnostics diagnostics;
};

RunResult run_once(const Frame& frame, const Vector& y, const LinkFamily& family,
                   const FitConfig& config, const Vector& eta0,
                   const std::optional<Vector>& fixed_weights) {
    RunResult run;
    RunState& st = run.state;
    ComponentResult first;
    if (fixed_weights) {
        set_weights(st, frame, config, *fixed_weights);
        const ComponentContext ctx{y, st.w, st.zeta ? &*st.zeta : nullptr, family};
        first = build_component(st.centered.X, centered_probe(frame, st.w), {}, eta0, ctx, config);
    } else {
        first = first_component_dynamic(frame, y, family, config, eta0, st);
        if (!first.uncorrelated && !first.record.converged) {
            // Dynamic weights can wander off on (nearly) separated data with a
            // weak leverage correction. Redo component 1 with W = I.
            set_weights(st, frame, config, Vector::Ones(frame.work().rows()));
            const ComponentContext ctx{y, st.w, st.zeta ? &*st.zeta : nullptr, family};
            const int dynamic_iters = first.record.inner_iters;
            first = build_component(st.centered.X, centered_probe(frame, st.w), {}, eta0, ctx,
                                    config);
            first.record.inner_iters += dynamic_iters;
            run.diagnostics.identity_weight_fallback = true;
        }
    }

    const ComponentContext ctx{y, st.w, st.zeta ? &*st.zeta : nullptr, family};
    const double weight_sum = st.w.sum();
    Matrix Xj = st.centered.X;
    // Bound on max|X_j| in original coordinates: deflation by t P' adds at
    // most max|t| * ||P|| (Q preserves ||P||).
    double upper = frame.centered_bound();
    auto probe = [&] {
        if (!frame.reduced()) return exact_probe(max_abs(Xj));
        return ScaleProbe{upper, [&frame, &Xj] { return frame.original_max_abs(Xj); }};
    };
    run.eta = eta0;
    run.intercept = first.intercept;

    ComponentResult res = std::move(first);
    while (true) {
        if (res.uncorrelated) {
            if (run.components.empty()) {
                run.intercept = res.intercept;
            }
            run.diagnostics.stop_reason = StopReason::Uncorrelated;
            break;
        }
        for (std::size_t k = 0; k < run.components.size(); ++k) {
            run.components[k].gamma = res.prior_gammas[k];
        }
        run.intercept = res.intercept;
        run.eta = res.eta;
        res.record.P_row = deflate_in_place(Xj, res.record.score, st.w);
        upper += res.record.score.cwiseAbs().maxCoeff() * res.record.P_row.norm();
        run.components.push_back(std::move(res.record));
        run.diagnostics.inner_iters.push_back(run.components.back().inner_iters);

        if (!run.components.back().converged) {
            run.diagnostics.stop_reason = StopReason::InnerNonconvergence;
            break;
        }
        if (static_cast<int>(run.components.size()) >= config.kappa_max) {
            run.diagnostics.stop_reason = StopReason::KappaMax;
            break;
        }
        const ScaleProbe scale = probe();
        const Vector Z = working_response_for(ctx, run.eta);
        const Vector cov = Xj.transpose() * st.w.cwiseProduct(Z);
        if (is_uncorrelated(cov.norm(), weight_sum, scale, config.stop_eps)) {
            run.diagnostics.stop_reason = StopReason::Uncorrelated;
            break;
        }
        res = build_component(Xj, scale, run.components, run.eta, ctx, config);
    }
    run.diagnostics.components_built = static_cast<int>(run.components.size());
    return run;
}


Vector column_sd(const Matrix& X) {
    const Eigen::Index n = X.rows();
    Vector sd(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double m = X.col(j).mean();
        const double ss = (X.col(j).array() - m).square().sum();
        const double s = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        sd[j] = s > 0.0 ? s : 1.0;
    }
    return sd;
}

}  // namespace

std::string_view to_string(WeightStrategy s) {
    return s == WeightStrategy::TwoRun ? "two-run" : "dynamic-first";
}

std::string_view to_string(BiasMode m) {
    switch (m) {
        case BiasMode::None:
            return "none";
        case BiasMode::FullDelta:
            return "full";
        case BiasMode::ClosedFormDelta:
            return "closed";
    }
    return "none";
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::Uncorrelated:
            return "uncorrelated";
        case StopReason::KappaMax:
            return "kappa_max";
        case StopReason::InnerNonconvergence:
            return "inner_nonconvergence";
    }
    return "kappa_max";
}

WeightStrategy weight_strategy_from_string(std::string_view s) {
    if (s == "dynamic-first" || s == "dynamic-first-component") {
        return WeightStrategy::DynamicFirstComponent;
    }
    if (s == "two-run") {
        return WeightStrategy::TwoRun;
    }
    throw std::invalid_argument("unknown weight strategy '" + std::string(s) + "'");
}

BiasMode bias_mode_from_string(std::string_view s) {
    if (s == "none") return BiasMode::None;
    if (s == "full" || s == "full-delta") return BiasMode::FullDelta;
    if (s == "closed" || s == "closed-form-delta") return BiasMode::ClosedFormDelta;
    throw std::invalid_argument("unknown bias mode '" + std::string(s) + "'");
}

StopReason stop_reason_from_string(std::string_view s) {
    if (s == "uncorrelated") return StopReason::Uncorrelated;
    if (s == "kappa_max") return StopReason::KappaMax;
    if (s == "inner_nonconvergence") return StopReason::InnerNonconvergence;
    throw std::invalid_argument("unknown stop reason '" + std::string(s) + "'");
}

void Dataset::validate(const LinkFamily& family) const {
    if (X.rows() == 0 || X.cols() == 0) {
        throw std::invalid_argument("dataset is empty");
    }
    require_same_length(X.rows(), y.size(), "dataset response");
    if (!column_names.empty()) {
        require_same_length(X.cols(), static_cast<long>(column_names.size()), "column names");
    }
    if (!X.allFinite()) {
        throw std::invalid_argument("dataset contains non-finite predictors");
    }
    family.validate_response(y);
}

void FitConfig::validate() const {
    if (kappa_max < 1) throw std::invalid_argument("kappa_max must be >= 1");
    if (!(tol_alpha > 0.0)) throw std::invalid_argument("tol_alpha must be positive");
    if (!(stop_eps > 0.0)) throw std::invalid_argument("stop_eps must be positive");
    if (max_inner_iter < 1) throw std::invalid_argument("max_inner_iter must be >= 1");
}

CenteredMatrix weighted_center(const Matrix& X, const Vector& w) {
    require_same_length(X.rows(), w.size(), "weighted_center");
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (!(w[i] > 0.0) || !std::isfinite(w[i])) {
            throw std::invalid_argument("weighted_center: weights must be positive");
        }
    }
    CenteredMatrix out;
    out.offsets = X.transpose() * w / w.sum();
    out.X = X.rowwise() - out.offsets.transpose();
    return out;
}

Vector deflate_in_place(Matrix& Xj, const Vector& score, const Vector& w) {
    require_same_length(Xj.rows(), score.size(), "deflate");
    require_same_length(Xj.rows(), w.size(), "deflate");
    const Vector ws = w.cwiseProduct(score);
    const double denom = ws.dot(score);
    if (!(denom > 0.0)) {
        throw DegenerateComponentError("deflate: component score has zero weighted norm");
    }
    Vector P = Xj.transpose() * ws / denom;
    Xj.noalias() -= score * P.transpose();
    return P;
}

DeflationResult deflate(const Matrix& Xj, const Vector& alpha, const Vector& w) {
    require_same_length(Xj.cols(), alpha.size(), "deflate");
    DeflationResult out{Vector(), Xj};
    const Vector score = Xj * alpha;
    out.P_row = deflate_in_place(out.X_next, score, w);
    return out;
}

ComponentResult construct_component(const Matrix& Xj, const std::vector<ComponentRecord>& prior,
                                    const Vector& eta_init, const ComponentContext& ctx,
                                    const FitConfig& config) {
    require_same_length(Xj.rows(), eta_init.size(), "construct_component");
    require_same_length(Xj.rows(), ctx.w.size(), "construct_component");
    return build_component(Xj, exact_probe(max_abs(Xj)), prior, eta_init, ctx, config);
}

RecoveredCoefficients recover_coefficients(const std::vector<ComponentRecord>& components,
                                           Eigen::Index p) {
    RecoveredCoefficients out;
    out.beta_hat = Vector::Zero(p);
    out.loadings.reserve(components.size());
    for (std::size_t j = 0; j < components.size(); ++j) {
        require_same_length(components[j].alpha.size(), p, "recover_coefficients alpha");
        Vector v = components[j].alpha;
        // Apply (I - a_l P_l) for l = j-1 down to 1, the rightmost factor first.
        for (std::size_t l = j; l-- > 0;) {
            require_same_length(components[l].P_row.size(), p, "recover_coefficients P");
            v -= components[l].alpha * components[l].P_row.dot(v);
        }
        out.beta_hat += components[j].gamma * v;
        out.loadings.push_back(std::move(v));
    }
    return out;
}

GocreModel fit(const Dataset& data, const LinkFamily& family, const FitConfig& config) {
    data.validate(family);
    config.validate();
    if (config.bias_mode != BiasMode::None && family.kind() != FamilyKind::LogitBernoulli) {
        throw std::invalid_argument("bias correction is only defined for the logit family");
    }

    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    Vector scales = Vector::Ones(p);
    Matrix scaled;
    if (config.standardize) {
        scales = column_sd(data.X);
        scaled = data.X * scales.cwiseInverse().asDiagonal();
    }
    const Matrix& Xs = config.standardize ? scaled : data.X;

    const Frame frame(Xs);
    const Vector eta0 = Vector::Constant(n, family.link(data.y.mean()));
    RunResult run = run_once(frame, data.y, family, config, eta0, std::nullopt);
    if (config.weight_strategy == WeightStrategy::TwoRun) {
        const Vector w2 = family.variance_weight(run.eta);
        run = run_once(frame, data.y, family, config, eta0, w2);
        run.diagnostics.runs = 2;
    }
    if (frame.reduced() && !run.components.empty()) {
        const Eigen::Index k = static_cast<Eigen::Index>(run.components.size());
        Matrix A(n, k), P(n, k);
        for (Eigen::Index j = 0; j < k; ++j) {
            A.col(j) = run.components[static_cast<std::size_t>(j)].alpha;
            P.col(j) = run.components[static_cast<std::size_t>(j)].P_row;
        }
        const Matrix A_full = frame.lift(A);
        const Matrix P_full = frame.lift(P);
        for (Eigen::Index j = 0; j < k; ++j) {
            run.components[static_cast<std::size_t>(j)].alpha = A_full.col(j);
            run.components[static_cast<std::size_t>(j)].P_row = P_full.col(j);
        }
    }
    // Offsets straight from the data rather than lifted.
    const Vector offsets = Xs.transpose() * run.state.w / run.state.w.sum();

    GocreModel model;
    model.family = family;
    model.config = config;
    model.intercept = run.intercept;
    model.components = std::move(run.components);
    model.column_scales = scales;
    model.column_offsets = offsets.cwiseProduct(scales);
    model.weights = run.state.w;
    model.diagnostics = run.diagnostics;
    model.column_names = data.column_names;

    RecoveredCoefficients rc = recover_coefficients(model.components, p);
    model.loadings = std::move(rc.loadings);
    model.beta_hat = rc.beta_hat.cwiseQuotient(scales);
    return model;
}

GocreModel GocreModel::truncated(std::size_t k) const {
    if (k > components.size()) {
        throw std::invalid_argument("truncated: model has only " +
                                    std::to_string(components.size()) + " components");
    }
    if (k == components.size()) {
        return *this;
    }
    if (k == 0) {
        throw std::invalid_argument("truncated: at least one component is required");
    }
    GocreModel out = *this;
    out.components.resize(k);
    const ComponentRecord& last = out.components.back();
    out.intercept = last.intercept_at_build;
    const Vector gammas = last.gammas_at_build;
    for (std::size_t j = 0; j < k; ++j) {
        out.components[j].gamma = gammas[static_cast<Eigen::Index>(j)];
    }
    out.diagnostics.components_built = static_cast<int>(k);
    out.diagnostics.inner_iters.resize(k);
    out.diagnostics.stop_reason = StopReason::KappaMax;
    out.config.kappa_max = static_cast<int>(k);

    RecoveredCoefficients rc = recover_coefficients(out.components, p());
    out.loadings = std::move(rc.loadings);
    out.beta_hat = rc.beta_hat.cwiseQuotient(column_scales);
    return out;
}

Prediction predict(const GocreModel& model, const Matrix& Xnew) {
    if (Xnew.cols() != model.p()) {
        throw DimensionError("predict: expected " + std::to_string(model.p()) +
                             " columns, got " + std::to_string(Xnew.cols()));
    }
    Prediction out;
    out.eta = (Xnew.rowwise() - model.column_offsets.transpose()) * model.beta_hat;
    out.eta.array() += model.intercept;
    out.mean = model.family.inverse_link(out.eta);
    return out;
}

}  // namespace gocre
