#pragma once

#include "gocre/engine.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gocre {

using Rng = std::mt19937_64;

/// Design of one simulated study: block-AR(1) predictors, Laplace
/// coefficients, logistic responses with zero intercept.
struct SimConfig {
    int n_train = 100;
    int n_valid = 100;
    int n_test = 200;
    int p = 1000;
    int n_blocks = 10;
    double rho = 0.0;
    double laplace_location = 2.0;
    double laplace_scale = 1.0;
    int replicates = 100;
    int kappa_max = 10;
    std::uint64_t base_seed = 1;

    void validate() const;
};

/// Rows are independent; within a row each block of p / n_blocks columns is
/// a stationary AR(1) sequence with unit marginal variance.
Matrix gen_ar1_predictors(int n, int p, int n_blocks, double rho, Rng& rng);

/// i.i.d. Laplace(location, scale) by inverse-CDF sampling.
Vector gen_coefficients(int p, double location, double scale, Rng& rng);

/// y_i ~ Bernoulli(logistic(intercept + x_i beta)).
Vector gen_responses(const Matrix& X, const Vector& beta, double intercept, Rng& rng);

struct SimulatedReplicate {
    Vector beta;
    Dataset train;
    Dataset valid;
    Dataset test;
};

/// Draws beta, then train, validation and test sets from one stream seeded
/// with `seed`.
SimulatedReplicate simulate_replicate(const SimConfig& sim, std::uint64_t seed);

/// Fraction of observations with (prob >= 0.5) != y.
double misclassification_rate(std::span<const double> y, std::span<const double> prob);
double misclassification_rate(const Vector& y, const Vector& prob);

/// Mean squared residual on the probability scale.
double press(std::span<const double> y, std::span<const double> prob);
double press(const Vector& y, const Vector& prob);

/// Sum of squared residuals on the probability scale.
double press_sum(const Vector& y, const Vector& prob);

/// 1-based kappa minimizing validation MR; ties go to the smaller validation
/// PRESS, then to the smaller kappa.
int select_kappa(std::span<const double> validation_mr, std::span<const double> validation_press);

enum class Method { IrplsM, IrplsDG, Gocre0, Gocre };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
std::vector<Method> all_methods();

struct ReplicateResult {
    Method method = Method::Gocre;
    double rho = 0;
    int replicate = 0;
    std::uint64_t seed = 0;
    int kappa_selected = 0;
    bool converged = false;      // the model at kappa_selected converged
    bool converged_all = false;  // every candidate kappa converged
    double mr = 0;
    double press = 0;
    double press_sum = 0;
    double seconds = 0;
    bool failed = false;  // the fit threw; metrics are NaN and excluded from medians
    std::string error;
};

struct ReportRow {
    Method method = Method::Gocre;
    double rho = 0;
    int replicates = 0;
    double convergence_frequency = 0;
    double convergence_frequency_all = 0;
    double median_mr = 0;
    double se_mr = 0;
    double median_press = 0;
    double se_press = 0;
    double median_press_sum = 0;
    double mean_seconds = 0;
};

struct BenchmarkReport {
    std::vector<ReportRow> rows;                // method-major, then rho in plan order
    std::vector<ReplicateResult> replicates;    // rho, replicate, method order
};

struct BenchmarkPlan {
    SimConfig sim;
    std::vector<double> rhos;  // empty: use sim.rho
    std::vector<Method> methods = all_methods();
    int workers = 1;           // 0: hardware concurrency
};

/// Fits every method on one replicate, selects kappa on the validation set
/// and scores the test set.
std::vector<ReplicateResult> run_replicate(const SimConfig& sim, const std::vector<Method>& methods,
                                           int replicate);

BenchmarkReport run_benchmark(const BenchmarkPlan& plan);

/// Aggregates per-replicate results into one row per (method, rho).
std::vector<ReportRow> aggregate(const std::vector<ReplicateResult>& results,
                                 const std::vector<Method>& methods,
                                 const std::vector<double>& rhos);

double median(std::vector<double> values);
double sample_sd(const std::vector<double>& values);

}  // namespace gocre
