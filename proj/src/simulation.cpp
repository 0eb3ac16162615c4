#include "gocre/simulation.hpp"

#include "gocre/errors.hpp"
#include "gocre/irpls.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace gocre {

void SimConfig::validate() const {
    if (n_train < 2 || n_valid < 1 || n_test < 1) {
        throw std::invalid_argument("sample sizes must be positive (n_train >= 2)");
    }
    if (p < 1 || n_blocks < 1 || p % n_blocks != 0) {
        throw std::invalid_argument("p must be a positive multiple of n_blocks");
    }
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw std::invalid_argument("rho must lie in [0, 1)");
    }
    if (!(laplace_scale > 0.0)) {
        throw std::invalid_argument("laplace_scale must be positive");
    }
    if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
    if (kappa_max < 1) throw std::invalid_argument("kappa_max must be >= 1");
}

Matrix gen_ar1_predictors(int n, int p, int n_blocks, double rho, Rng& rng) {
    if (n_blocks < 1 || p % n_blocks != 0) {
        throw std::invalid_argument("gen_ar1_predictors: p must be divisible by n_blocks");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const int block = p / n_blocks;
    const double innovation = std::sqrt(1.0 - rho * rho);
    // Row-major fill keeps the stream order independent of Eigen's storage.
    Matrix X(n, p);
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b < n_blocks; ++b) {
            double prev = normal(rng);
            X(i, b * block) = prev;
            for (int t = 1; t < block; ++t) {
                prev = rho * prev + innovation * normal(rng);
                X(i, b * block + t) = prev;
            }
        }
    }
    return X;
}

Vector gen_coefficients(int p, double location, double scale, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector beta(p);
    for (int j = 0; j < p; ++j) {
        double u = unif(rng);
        while (u == 0.0) {
            u = unif(rng);
        }
        const double c = u - 0.5;
        const double mag = -std::log(1.0 - 2.0 * std::abs(c));
        beta[j] = location + (c < 0 ? -scale : scale) * mag;
    }
    return beta;
}

Vector gen_responses(const Matrix& X, const Vector& beta, double intercept, Rng& rng) {
    require_same_length(X.cols(), beta.size(), "gen_responses");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const Vector eta = (X * beta).array() + intercept;
    Vector y(X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-eta[i]));
        y[i] = unif(rng) < prob ? 1.0 : 0.0;
    }
    return y;
}

SimulatedReplicate simulate_replicate(const SimConfig& sim, std::uint64_t seed) {
    sim.validate();
    Rng rng(seed);
    SimulatedReplicate rep;
    rep.beta = gen_coefficients(sim.p, sim.laplace_location, sim.laplace_scale, rng);
    auto draw = [&](int n) {
        Dataset d;
        d.X = gen_ar1_predictors(n, sim.p, sim.n_blocks, sim.rho, rng);
        d.y = gen_responses(d.X, rep.beta, 0.0, rng);
        return d;
    };
    rep.train = draw(sim.n_train);
    rep.valid = draw(sim.n_valid);
    rep.test = draw(sim.n_test);
    return rep;
}

double misclassification_rate(std::span<const double> y, std::span<const double> prob) {
    require_same_length(static_cast<long>(y.size()), static_cast<long>(prob.size()),
                        "misclassification_rate");
    if (y.empty()) {
        throw std::invalid_argument("misclassification_rate: empty input");
    }
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double predicted = prob[i] >= 0.5 ? 1.0 : 0.0;
        wrong += predicted != y[i] ? 1 : 0;
    }
    return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double misclassification_rate(const Vector& y, const Vector& prob) {
    return misclassification_rate(std::span<const double>(y.data(), y.size()),
                                  std::span<const double>(prob.data(), prob.size()));
}

double press(std::span<const double> y, std::span<const double> prob) {
    require_same_length(static_cast<long>(y.size()), static_cast<long>(prob.size()), "press");
    if (y.empty()) {
        throw std::invalid_argument("press: empty input");
    }
    double ss = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss += (y[i] - prob[i]) * (y[i] - prob[i]);
    }
    return ss / static_cast<double>(y.size());
}

double press(const Vector& y, const Vector& prob) {
    return press(std::span<const double>(y.data(), y.size()),
                 std::span<const double>(prob.data(), prob.size()));
}

double press_sum(const Vector& y, const Vector& prob) {
    return press(y, prob) * static_cast<double>(y.size());
}

int select_kappa(std::span<const double> validation_mr, std::span<const double> validation_press) {
    require_same_length(static_cast<long>(validation_mr.size()),
                        static_cast<long>(validation_press.size()), "select_kappa");
    if (validation_mr.empty()) {
        throw std::invalid_argument("select_kappa: no candidates");
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < validation_mr.size(); ++k) {
        if (validation_mr[k] < validation_mr[best] ||
            (validation_mr[k] == validation_mr[best] &&
             validation_press[k] < validation_press[best])) {
            best = k;
        }
    }
    return static_cast<int>(best) + 1;
}

std::string_view to_string(Method m) {
    switch (m) {
        case Method::IrplsM:
            return "irpls-m";
        case Method::IrplsDG:
            return "irpls-dg";
        case Method::Gocre0:
            return "gocre0";
        case Method::Gocre:
            return "gocre";
    }
    return "gocre";
}

Method method_from_string(std::string_view name) {
    for (Method m : all_methods()) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
    return {Method::IrplsM, Method::IrplsDG, Method::Gocre0, Method::Gocre};
}

namespace {

struct Scored {
    double mr;
    double press;
};

Scored score(const Vector& y, const Vector& prob) {
    return {misclassification_rate(y, prob), press(y, prob)};
}

// Chooses kappa on validation data and scores the chosen model on test data.
// `predict_at(k, X)` returns probabilities of the k-component model.
template <class PredictAt>
void select_and_score(const SimulatedReplicate& rep, int candidates, PredictAt&& predict_at,
                      ReplicateResult& out) {
    std::vector<double> mr;
    std::vector<double> pr;
    for (int k = 1; k <= candidates; ++k) {
        const Scored s = score(rep.valid.y, predict_at(k, rep.valid.X));
        mr.push_back(s.mr);
        pr.push_back(s.press);
    }
    out.kappa_selected = select_kappa(mr, pr);
    const Vector prob = predict_at(out.kappa_selected, rep.test.X);
    out.mr = misclassification_rate(rep.test.y, prob);
    out.press = press(rep.test.y, prob);
    out.press_sum = press_sum(rep.test.y, prob);
}

ReplicateResult run_gocre(const SimulatedReplicate& rep, const SimConfig& sim, BiasMode bias) {
    ReplicateResult out;
    FitConfig cfg;
    cfg.kappa_max = sim.kappa_max;
    cfg.bias_mode = bias;
    const auto start = std::chrono::steady_clock::now();
    const GocreModel model = fit(rep.train, LinkFamily::logit(), cfg);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.converged_all = model.diagnostics.all_converged();
    out.converged = out.converged_all;

    const int built = static_cast<int>(model.components.size());
    if (built == 0) {
        const Vector prob = predict(model, rep.test.X).mean;
        out.kappa_selected = 0;
        out.mr = misclassification_rate(rep.test.y, prob);
        out.press = press(rep.test.y, prob);
        out.press_sum = press_sum(rep.test.y, prob);
        return out;
    }
    std::vector<GocreModel> nested;
    nested.reserve(static_cast<std::size_t>(built));
    for (int k = 1; k <= built; ++k) {
        nested.push_back(model.truncated(static_cast<std::size_t>(k)));
    }
    select_and_score(
        rep, built,
        [&](int k, const Matrix& X) { return predict(nested[static_cast<std::size_t>(k - 1)], X).mean; },
        out);
    // Components are built in order, so the truncated model converged iff its
    // leading components did.
    const auto& comps = model.components;
    out.converged = std::all_of(comps.begin(), comps.begin() + out.kappa_selected,
                                [](const ComponentRecord& c) { return c.converged; });
    return out;
}

ReplicateResult run_irpls(const SimulatedReplicate& rep, const SimConfig& sim, bool firth) {
    ReplicateResult out;
    out.converged_all = true;
    std::vector<IrplsResult> fits;
    const auto start = std::chrono::steady_clock::now();
    for (int k = 1; k <= sim.kappa_max; ++k) {
        IrplsOptions opt;
        opt.kappa = k;
        fits.push_back(firth ? irpls_dg_fit(rep.train, opt) : irpls_m_fit(rep.train, opt));
        out.converged_all = out.converged_all && fits.back().converged;
    }
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const LinkFamily logit = LinkFamily::logit();
    select_and_score(
        rep, sim.kappa_max,
        [&](int k, const Matrix& X) {
            return predict(fits[static_cast<std::size_t>(k - 1)], logit, X).mean;
        },
        out);
    out.converged = fits[static_cast<std::size_t>(out.kappa_selected - 1)].converged;
    return out;
}

ReplicateResult run_method(const SimulatedReplicate& rep, const SimConfig& sim, Method m) {
    switch (m) {
        case Method::IrplsM:
            return run_irpls(rep, sim, false);
        case Method::IrplsDG:
            return run_irpls(rep, sim, true);
        case Method::Gocre0:
            return run_gocre(rep, sim, BiasMode::FullDelta);
        case Method::Gocre:
            return run_gocre(rep, sim, BiasMode::ClosedFormDelta);
    }
    throw std::invalid_argument("unknown method");
}

}  // namespace

std::vector<ReplicateResult> run_replicate(const SimConfig& sim, const std::vector<Method>& methods,
                                           int replicate) {
    const std::uint64_t seed = sim.base_seed + static_cast<std::uint64_t>(replicate);
    const SimulatedReplicate rep = simulate_replicate(sim, seed);
    std::vector<ReplicateResult> results;
    results.reserve(methods.size());
    for (Method m : methods) {
        ReplicateResult r;
        try {
            r = run_method(rep, sim, m);
        } catch (const std::exception& e) {
            r = ReplicateResult{};
            r.failed = true;
            r.error = e.what();
            r.mr = r.press = r.press_sum = std::numeric_limits<double>::quiet_NaN();
        }
        r.method = m;
        r.rho = sim.rho;
        r.replicate = replicate;
        r.seed = seed;
        results.push_back(r);
    }
    return results;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

double sample_sd(const std::vector<double>& values) {
    if (values.size() < 2) {
        return 0.0;
    }
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<ReportRow> aggregate(const std::vector<ReplicateResult>& results,
                                 const std::vector<Method>& methods,
                                 const std::vector<double>& rhos) {
    std::vector<ReportRow> rows;
    for (Method m : methods) {
        for (double rho : rhos) {
            // Collected in replicate order so the statistics do not depend on
            // the order in which workers finished.
            std::vector<const ReplicateResult*> sel;
            for (const auto& r : results) {
                if (r.method == m && r.rho == rho) sel.push_back(&r);
            }
            std::sort(sel.begin(), sel.end(),
                      [](const auto* a, const auto* b) { return a->replicate < b->replicate; });
            ReportRow row;
            row.method = m;
            row.rho = rho;
            row.replicates = static_cast<int>(sel.size());
            std::vector<double> mr, pr, ps;
            double conv = 0, conv_all = 0, secs = 0;
            for (const auto* r : sel) {
                conv += r->converged && !r->failed ? 1.0 : 0.0;
                conv_all += r->converged_all && !r->failed ? 1.0 : 0.0;
                if (r->failed) continue;
                mr.push_back(r->mr);
                pr.push_back(r->press);
                ps.push_back(r->press_sum);
                secs += r->seconds;
            }
            if (!sel.empty()) {
                const double count = static_cast<double>(sel.size());
                row.convergence_frequency = conv / count;
                row.convergence_frequency_all = conv_all / count;
                row.mean_seconds = secs / count;
                row.median_mr = median(mr);
                row.se_mr = sample_sd(mr);
                row.median_press = median(pr);
                row.se_press = sample_sd(pr);
                row.median_press_sum = median(ps);
            }
            rows.push_back(row);
        }
    }
    return rows;
}

BenchmarkReport run_benchmark(const BenchmarkPlan& plan) {
    plan.sim.validate();
    if (plan.methods.empty()) {
        throw std::invalid_argument("run_benchmark: no methods requested");
    }
    const std::vector<double> rhos = plan.rhos.empty() ? std::vector<double>{plan.sim.rho}
                                                       : plan.rhos;
    for (double rho : rhos) {
        SimConfig check = plan.sim;
        check.rho = rho;
        check.validate();
    }

    const int reps = plan.sim.replicates;
    const std::size_t units = rhos.size() * static_cast<std::size_t>(reps);
    std::vector<std::vector<ReplicateResult>> slots(units);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < units; u = next++) {
            SimConfig sim = plan.sim;
            sim.rho = rhos[u / static_cast<std::size_t>(reps)];
            slots[u] = run_replicate(sim, plan.methods, static_cast<int>(u % reps));
        }
    };

    unsigned workers = plan.workers > 0 ? static_cast<unsigned>(plan.workers)
                                        : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(units));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }

    BenchmarkReport report;
    for (auto& slot : slots) {
        for (auto& r : slot) report.replicates.push_back(r);
    }
    report.rows = aggregate(report.replicates, plan.methods, rhos);
    return report;
}

}  // namespace gocre
