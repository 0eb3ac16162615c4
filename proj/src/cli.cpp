#include "gocre/cli.hpp"

#include "gocre/engine.hpp"
#include "gocre/errors.hpp"
#include "gocre/io.hpp"
#include "gocre/ranking.hpp"
#include "gocre/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

namespace gocre {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Writes to `path`, or to `fallback` when the path is empty or "-".
class OutputTarget {
public:
    OutputTarget(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw std::runtime_error("cannot write '" + path + "'");
            stream_ = file_.get();
        }
    }
    std::ostream& stream() { return *stream_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

struct FitArgs {
    std::string data, response, family = "logit", bias = "auto", weights = "dynamic-first";
    std::string out_model;
    FitConfig cfg;
};

struct PredictArgs {
    std::string model, data, out;
};

struct SimulateArgs {
    SimConfig sim;
    std::string rhos = "0";
    std::string methods = "irpls-m,irpls-dg,gocre0,gocre";
    std::string out_report, out_replicates;
    bool timings = false;
};

struct RankArgs {
    std::string data, response, out, out_pvalues;
    long top = 0;
};

void add_sim_options(CLI::App* cmd, SimulateArgs& a) {
    cmd->add_option("--n-train", a.sim.n_train, "training sample size")->capture_default_str();
    cmd->add_option("--n-valid", a.sim.n_valid, "validation sample size")->capture_default_str();
    cmd->add_option("--n-test", a.sim.n_test, "test sample size")->capture_default_str();
    cmd->add_option("--p", a.sim.p, "number of predictors")->capture_default_str();
    cmd->add_option("--n-blocks", a.sim.n_blocks, "AR(1) blocks per row")->capture_default_str();
    cmd->add_option("--rho", a.rhos, "AR(1) correlation; comma-separated list allowed")
        ->capture_default_str();
    cmd->add_option("--laplace-location", a.sim.laplace_location)->capture_default_str();
    cmd->add_option("--laplace-scale", a.sim.laplace_scale)->capture_default_str();
    cmd->add_option("--replicates", a.sim.replicates)->capture_default_str();
    cmd->add_option("--kappa-max", a.sim.kappa_max, "largest number of components")
        ->capture_default_str();
    cmd->add_option("--base-seed", a.sim.base_seed, "replicate r uses seed base+r")
        ->capture_default_str();
    cmd->add_option("--methods", a.methods, "comma-separated subset of irpls-m,irpls-dg,gocre0,gocre")
        ->capture_default_str();
    cmd->add_option("--out-report", a.out_report, "summary CSV (default stdout)");
    cmd->add_option("--out-replicates", a.out_replicates, "per-replicate long-format CSV");
}

int run_fit(const FitArgs& a, std::ostream& out) {
    const FamilyKind kind = family_kind_from_string(a.family);
    const LinkFamily family = kind == FamilyKind::LogitBernoulli ? LinkFamily::logit()
                                                                 : LinkFamily::identity();
    FitConfig cfg = a.cfg;
    cfg.weight_strategy = weight_strategy_from_string(a.weights);
    if (a.bias == "auto") {
        cfg.bias_mode = kind == FamilyKind::LogitBernoulli ? BiasMode::ClosedFormDelta
                                                           : BiasMode::None;
    } else {
        cfg.bias_mode = bias_mode_from_string(a.bias);
    }
    const Dataset data = load_csv(a.data, a.response);
    const GocreModel model = fit(data, family, cfg);
    save_model(a.out_model, model);
    out << "components," << model.components.size() << '\n'
        << "stop_reason," << to_string(model.diagnostics.stop_reason) << '\n'
        << "intercept," << format_number(model.intercept) << '\n';
    return kExitOk;
}

int run_predict(const PredictArgs& a, std::ostream& out) {
    const GocreModel model = load_model(a.model);
    std::ifstream in(a.data);
    if (!in) throw std::runtime_error("cannot open '" + a.data + "'");
    const Table table = read_table(in);

    // Predictors are matched by name when the model knows its column names;
    // extra columns (typically the response) are ignored.
    Matrix X;
    if (model.column_names.empty()) {
        X = table.values;
    } else {
        X.resize(table.values.rows(), model.p());
        for (Eigen::Index j = 0; j < model.p(); ++j) {
            const auto& want = model.column_names[static_cast<std::size_t>(j)];
            const auto it = std::find(table.header.begin(), table.header.end(), want);
            if (it == table.header.end()) {
                throw DimensionError("predict: column '" + want + "' missing from data");
            }
            X.col(j) = table.values.col(it - table.header.begin());
        }
    }
    const Prediction pred = predict(model, X);
    OutputTarget target(a.out, out);
    auto& s = target.stream();
    s << "eta,mean\n";
    for (Eigen::Index i = 0; i < pred.eta.size(); ++i) {
        s << format_number(pred.eta[i]) << ',' << format_number(pred.mean[i]) << '\n';
    }
    return kExitOk;
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    BenchmarkPlan plan;
    plan.sim = a.sim;
    plan.methods.clear();
    try {
        for (const auto& r : split_list(a.rhos)) plan.rhos.push_back(std::stod(r));
        for (const auto& m : split_list(a.methods)) plan.methods.push_back(method_from_string(m));
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad --rho or --methods value: ") + e.what());
    }
    plan.workers = worker_count_from_env();
    const BenchmarkReport report = run_benchmark(plan);
    {
        OutputTarget target(a.out_report, out);
        write_report_csv(target.stream(), report, a.timings);
    }
    if (!a.out_replicates.empty()) {
        OutputTarget target(a.out_replicates, out);
        write_replicates_csv(target.stream(), report, a.timings);
    }
    return kExitOk;
}

int run_rank(const RankArgs& a, std::ostream& out) {
    const Dataset data = load_csv(a.data, a.response);
    const FeatureRanking ranking = wilcoxon_rank_features(data.X, data.y, worker_count_from_env());
    const auto p = static_cast<long>(data.p());
    const long top = a.top <= 0 ? p : std::min(a.top, p);

    Dataset subset;
    subset.response_name = data.response_name;
    subset.y = data.y;
    subset.X.resize(data.n(), top);
    for (long k = 0; k < top; ++k) {
        const Eigen::Index j = ranking.order[static_cast<std::size_t>(k)];
        subset.X.col(k) = data.X.col(j);
        subset.column_names.push_back(data.column_names[static_cast<std::size_t>(j)]);
    }
    {
        OutputTarget target(a.out, out);
        write_csv(target.stream(), subset);
    }
    if (!a.out_pvalues.empty()) {
        OutputTarget target(a.out_pvalues, out);
        auto& s = target.stream();
        s << "rank,column,name,p_value\n";
        for (long k = 0; k < p; ++k) {
            const Eigen::Index j = ranking.order[static_cast<std::size_t>(k)];
            s << k + 1 << ',' << j << ',' << data.column_names[static_cast<std::size_t>(j)] << ','
              << format_number(ranking.p_values[j]) << '\n';
        }
    }
    return kExitOk;
}

}  // namespace

int worker_count_from_env() {
    const char* env = std::getenv("GOCRE_THREADS");
    int requested = 0;
    if (env != nullptr && *env != '\0') {
        try {
            requested = std::max(0, std::stoi(env));
        } catch (const std::exception&) {
            requested = 0;
        }
    }
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return requested == 0 ? hw : requested;
}

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Generalized orthogonal components regression for high-dimensional GLMs",
                 "gocre"};
    app.require_subcommand(1);

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "fit a model from a CSV file");
    fit_cmd->add_option("--data", fit_args.data, "input CSV with header")->required();
    fit_cmd->add_option("--response", fit_args.response, "response column name or 0-based index")
        ->required();
    fit_cmd->add_option("--family", fit_args.family, "logit | identity")
        ->capture_default_str()
        ->check(CLI::IsMember({"logit", "identity"}));
    fit_cmd->add_option("--kappa-max", fit_args.cfg.kappa_max, "maximum number of components")
        ->capture_default_str();
    fit_cmd->add_option("--bias", fit_args.bias,
                        "none | full | closed (auto: closed for logit, none otherwise)")
        ->capture_default_str()
        ->check(CLI::IsMember({"auto", "none", "full", "closed"}));
    fit_cmd->add_option("--weights", fit_args.weights, "dynamic-first | two-run")
        ->capture_default_str()
        ->check(CLI::IsMember({"dynamic-first", "two-run"}));
    fit_cmd->add_option("--tol-alpha", fit_args.cfg.tol_alpha)->capture_default_str();
    fit_cmd->add_option("--max-inner-iter", fit_args.cfg.max_inner_iter)->capture_default_str();
    fit_cmd->add_option("--stop-eps", fit_args.cfg.stop_eps)->capture_default_str();
    fit_cmd->add_flag("--standardize", fit_args.cfg.standardize, "scale columns to unit SD");
    fit_cmd->add_option("--out-model", fit_args.out_model, "output JSON model")->required();

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "score a CSV with a saved model");
    predict_cmd->add_option("--model", predict_args.model)->required();
    predict_cmd->add_option("--data", predict_args.data)->required();
    predict_cmd->add_option("--out", predict_args.out, "output CSV (default stdout)");

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "run the simulation study");
    add_sim_options(sim_cmd, sim_args);

    SimulateArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "simulation study with optional timings");
    add_sim_options(bench_cmd, bench_args);
    bench_cmd->add_flag("--timings", bench_args.timings, "add wall-clock columns");

    RankArgs rank_args;
    auto* rank_cmd = app.add_subcommand("rank-features", "Wilcoxon rank-sum feature ranking");
    rank_cmd->add_option("--data", rank_args.data)->required();
    rank_cmd->add_option("--response", rank_args.response)->required();
    rank_cmd->add_option("--top", rank_args.top, "keep the K best columns (0: all)");
    rank_cmd->add_option("--out", rank_args.out, "subset CSV (default stdout)");
    rank_cmd->add_option("--out-pvalues", rank_args.out_pvalues, "per-column p-values CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (fit_cmd->parsed()) return run_fit(fit_args, out);
        if (predict_cmd->parsed()) return run_predict(predict_args, out);
        if (sim_cmd->parsed()) return run_simulate(sim_args, out);
        if (bench_cmd->parsed()) return run_simulate(bench_args, out);
        if (rank_cmd->parsed()) return run_rank(rank_args, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace gocre
