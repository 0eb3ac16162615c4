#include "gocre/engine.hpp"
#include "gocre/errors.hpp"
#include "gocre/firth.hpp"
#include "gocre/io.hpp"
#include "gocre/irpls.hpp"
#include "gocre/ranking.hpp"
#include "gocre/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

namespace py = pybind11;
using namespace gocre;

namespace {

LinkFamily family_from(const std::string& name) {
    return family_kind_from_string(name) == FamilyKind::LogitBernoulli ? LinkFamily::logit()
                                                                       : LinkFamily::identity();
}

Dataset dataset_from(const Matrix& X, const Vector& y) {
    Dataset d;
    d.X = X;
    d.y = y;
    return d;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

py::dict diagnostics_dict(const FitDiagnostics& d) {
    py::dict out;
    out["components_built"] = d.components_built;
    out["stop_reason"] = std::string(to_string(d.stop_reason));
    out["inner_iters"] = d.inner_iters;
    out["runs"] = d.runs;
    out["identity_weight_fallback"] = d.identity_weight_fallback;
    out["all_converged"] = d.all_converged();
    return out;
}

SimConfig sim_config(int n_train, int n_valid, int n_test, int p, int n_blocks, double rho,
                     double laplace_location, double laplace_scale, int replicates, int kappa_max,
                     std::uint64_t base_seed) {
    SimConfig s;
    s.n_train = n_train;
    s.n_valid = n_valid;
    s.n_test = n_test;
    s.p = p;
    s.n_blocks = n_blocks;
    s.rho = rho;
    s.laplace_location = laplace_location;
    s.laplace_scale = laplace_scale;
    s.replicates = replicates;
    s.kappa_max = kappa_max;
    s.base_seed = base_seed;
    return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Generalized orthogonal components regression";

    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

    py::class_<GocreModel>(m, "Model")
        .def_readonly("intercept", &GocreModel::intercept)
        .def_readonly("beta_hat", &GocreModel::beta_hat)
        .def_readonly("loadings", &GocreModel::loadings)
        .def_readonly("weights", &GocreModel::weights)
        .def_readonly("column_offsets", &GocreModel::column_offsets)
        .def_readonly("column_scales", &GocreModel::column_scales)
        .def_property_readonly("n_components", [](const GocreModel& g) { return g.components.size(); })
        .def_property_readonly("alphas", [](const GocreModel& g) {
            std::vector<Vector> out;
            for (const auto& c : g.components) out.push_back(c.alpha);
            return out;
        })
        .def_property_readonly("scores", [](const GocreModel& g) {
            std::vector<Vector> out;
            for (const auto& c : g.components) out.push_back(c.score);
            return out;
        })
        .def_property_readonly("gammas", [](const GocreModel& g) {
            std::vector<double> out;
            for (const auto& c : g.components) out.push_back(c.gamma);
            return out;
        })
        .def_property_readonly("diagnostics", [](const GocreModel& g) { return diagnostics_dict(g.diagnostics); })
        .def("predict_eta", [](const GocreModel& g, const Matrix& X) { return predict(g, X).eta; }, py::arg("X"))
        .def("predict", [](const GocreModel& g, const Matrix& X) { return predict(g, X).mean; }, py::arg("X"),
             "Fitted means (probabilities for the logit family).")
        .def("truncated", &GocreModel::truncated, py::arg("k"))
        .def("to_json", [](const GocreModel& g) { return model_to_json(g); })
        .def_static("from_json", [](const std::string& text) { return model_from_json(text); }, py::arg("text"));

    m.def(
        "fit",
        [](const Matrix& X, const Vector& y, const std::string& family, int kappa_max,
           const std::string& bias_mode, const std::string& weight_strategy, bool standardize,
           double tol_alpha, int max_inner_iter, double stop_eps) {
            FitConfig cfg;
            cfg.kappa_max = kappa_max;
            cfg.bias_mode = bias_mode_from_string(bias_mode);
            cfg.weight_strategy = weight_strategy_from_string(weight_strategy);
            cfg.standardize = standardize;
            cfg.tol_alpha = tol_alpha;
            cfg.max_inner_iter = max_inner_iter;
            cfg.stop_eps = stop_eps;
            py::gil_scoped_release release;
            return fit(dataset_from(X, y), family_from(family), cfg);
        },
        py::arg("X"), py::arg("y"), py::arg("family") = "logit", py::arg("kappa_max") = 10,
        py::arg("bias_mode") = "closed", py::arg("weight_strategy") = "dynamic-first",
        py::arg("standardize") = false, py::arg("tol_alpha") = 1e-8, py::arg("max_inner_iter") = 100,
        py::arg("stop_eps") = 1e-10);

    m.def(
        "irpls_fit",
        [](const Matrix& X, const Vector& y, int kappa, bool firth, int max_iter, double tol) {
            IrplsOptions opt;
            opt.kappa = kappa;
            opt.max_iter = max_iter;
            opt.tol = tol;
            IrplsResult r;
            {
                py::gil_scoped_release release;
                const Dataset d = dataset_from(X, y);
                r = firth ? irpls_dg_fit(d, opt) : irpls_m_fit(d, opt);
            }
            py::dict out;
            out["beta"] = r.beta;
            out["intercept"] = r.intercept;
            out["converged"] = r.converged;
            out["diverged"] = r.diverged;
            out["iterations"] = r.iterations;
            return out;
        },
        py::arg("X"), py::arg("y"), py::arg("kappa"), py::arg("firth") = false, py::arg("max_iter") = 100,
        py::arg("tol") = 1e-6);

    m.def("delta_full", [](const Matrix& X, const Vector& w) { return delta_full(X, w).zeta; },
          py::arg("X"), py::arg("w"));
    m.def("delta_closed_form", [](const Vector& w) { return delta_closed_form(w).zeta; }, py::arg("w"));

    m.def(
        "wilcoxon_p",
        [](const Vector& values, const Vector& labels) {
            return wilcoxon_rank_sum_p(to_std(values), to_std(labels));
        },
        py::arg("values"), py::arg("labels"));
    m.def(
        "rank_features",
        [](const Matrix& X, const Vector& y, int workers) {
            FeatureRanking r;
            {
                py::gil_scoped_release release;
                r = wilcoxon_rank_features(X, y, workers);
            }
            return py::make_tuple(r.p_values, r.order);
        },
        py::arg("X"), py::arg("y"), py::arg("workers") = 1,
        "Returns (p_values, order) with order ascending in p-value.");

    m.def(
        "simulate",
        [](std::uint64_t seed, int n_train, int n_valid, int n_test, int p, int n_blocks, double rho,
           double laplace_location, double laplace_scale) {
            const SimConfig s = sim_config(n_train, n_valid, n_test, p, n_blocks, rho, laplace_location,
                                           laplace_scale, 1, 1, seed);
            s.validate();
            const SimulatedReplicate rep = simulate_replicate(s, seed);
            py::dict out;
            out["beta"] = rep.beta;
            for (auto [name, d] : {std::pair{"train", &rep.train}, {"valid", &rep.valid}, {"test", &rep.test}}) {
                out[name] = py::make_tuple(d->X, d->y);
            }
            return out;
        },
        py::arg("seed"), py::arg("n_train") = 100, py::arg("n_valid") = 100, py::arg("n_test") = 200,
        py::arg("p") = 1000, py::arg("n_blocks") = 10, py::arg("rho") = 0.0, py::arg("laplace_location") = 2.0,
        py::arg("laplace_scale") = 1.0);

    m.def(
        "benchmark",
        [](const std::vector<double>& rhos, const std::vector<std::string>& methods, int replicates,
           int n_train, int n_valid, int n_test, int p, int n_blocks, int kappa_max, std::uint64_t base_seed,
           int workers) {
            BenchmarkPlan plan;
            plan.sim = sim_config(n_train, n_valid, n_test, p, n_blocks, 0.0, 2.0, 1.0, replicates, kappa_max,
                                  base_seed);
            plan.rhos = rhos;
            plan.methods.clear();
            for (const auto& name : methods) plan.methods.push_back(method_from_string(name));
            plan.workers = workers;
            BenchmarkReport report;
            {
                py::gil_scoped_release release;
                report = run_benchmark(plan);
            }
            py::list rows;
            for (const auto& r : report.rows) {
                py::dict d;
                d["method"] = std::string(to_string(r.method));
                d["rho"] = r.rho;
                d["replicates"] = r.replicates;
                d["convergence_frequency"] = r.convergence_frequency;
                d["convergence_frequency_all"] = r.convergence_frequency_all;
                d["median_mr"] = r.median_mr;
                d["se_mr"] = r.se_mr;
                d["median_press"] = r.median_press;
                d["se_press"] = r.se_press;
                d["mean_seconds"] = r.mean_seconds;
                rows.append(d);
            }
            return rows;
        },
        py::arg("rhos"), py::arg("methods") = std::vector<std::string>{"irpls-m", "irpls-dg", "gocre0", "gocre"},
        py::arg("replicates") = 20, py::arg("n_train") = 100, py::arg("n_valid") = 100, py::arg("n_test") = 200,
        py::arg("p") = 1000, py::arg("n_blocks") = 10, py::arg("kappa_max") = 10, py::arg("base_seed") = 1,
        py::arg("workers") = 1);
}
