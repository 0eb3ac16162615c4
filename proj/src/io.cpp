#include "gocre/io.hpp"

#include "gocre/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace gocre {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool parse_double(const std::string& cell, double& value) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last && std::isfinite(value);
}

std::string roundtrip(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

Table read_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("csv: missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    Table table;
    table.header = split_line(line);
    const std::size_t width = table.header.size();

    std::vector<double> cells_flat;
    std::size_t rows = 0;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (trim(line).empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != width) {
            throw FormatError("csv: row " + std::to_string(row_number) + " has " +
                              std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(width));
        }
        for (std::size_t c = 0; c < width; ++c) {
            double v = 0;
            if (!parse_double(cells[c], v)) {
                throw ParseError(row_number, c + 1,
                                 "csv: non-numeric cell '" + cells[c] + "' at row " +
                                     std::to_string(row_number) + ", column " +
                                     std::to_string(c + 1) + " (" + table.header[c] + ")");
            }
            cells_flat.push_back(v);
        }
        ++rows;
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    table.values = Eigen::Map<const RowMajor>(cells_flat.data(), static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(width));
    return table;
}

Dataset read_csv(std::istream& in, const std::string& response) {
    Table table = read_table(in);
    const std::size_t width = table.header.size();

    std::size_t response_col = width;
    for (std::size_t c = 0; c < width; ++c) {
        if (table.header[c] == response) {
            response_col = c;
            break;
        }
    }
    if (response_col == width) {
        std::size_t idx = 0;
        const auto [ptr, ec] = std::from_chars(response.data(), response.data() + response.size(), idx);
        if (ec != std::errc() || ptr != response.data() + response.size() || idx >= width) {
            throw MissingColumnError("csv: response column '" + response + "' not found");
        }
        response_col = idx;
    }

    Dataset data;
    const Eigen::Index n = table.values.rows();
    data.response_name = table.header[response_col];
    data.y = table.values.col(static_cast<Eigen::Index>(response_col));
    data.X.resize(n, static_cast<Eigen::Index>(width) - 1);
    Eigen::Index j = 0;
    for (std::size_t c = 0; c < width; ++c) {
        if (c == response_col) continue;
        data.column_names.push_back(table.header[c]);
        data.X.col(j++) = table.values.col(static_cast<Eigen::Index>(c));
    }
    return data;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    return read_csv(in, response);
}

void write_csv(std::ostream& out, const Dataset& data) {
    out << (data.response_name.empty() ? "y" : data.response_name);
    for (Eigen::Index j = 0; j < data.p(); ++j) {
        out << ','
            << (data.column_names.empty() ? "x" + std::to_string(j + 1)
                                          : data.column_names[static_cast<std::size_t>(j)]);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        out << roundtrip(data.y[i]);
        for (Eigen::Index j = 0; j < data.p(); ++j) out << ',' << roundtrip(data.X(i, j));
        out << '\n';
    }
}

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", value);
    return buf;
}

std::string model_to_json(const GocreModel& model) {
    json doc;
    doc["format"] = "gocre-model";
    doc["version"] = kModelFormatVersion;
    doc["number_format"] = "shortest round-trip decimal (<= 17 significant digits)";
    doc["family"] = {{"kind", std::string(to_string(model.family.kind()))},
                     {"dispersion", model.family.dispersion()}};
    doc["intercept"] = model.intercept;
    doc["column_names"] = model.column_names;
    doc["column_offsets"] = to_json(model.column_offsets);
    doc["column_scales"] = to_json(model.column_scales);
    doc["weights"] = to_json(model.weights);
    doc["beta_hat"] = to_json(model.beta_hat);

    json comps = json::array();
    json loadings = json::array();
    json gammas = json::array();
    for (std::size_t j = 0; j < model.components.size(); ++j) {
        const auto& c = model.components[j];
        comps.push_back({{"alpha", to_json(c.alpha)},
                         {"P_row", to_json(c.P_row)},
                         {"gamma", c.gamma},
                         {"inner_iters", c.inner_iters},
                         {"converged", c.converged},
                         {"intercept_at_build", c.intercept_at_build},
                         {"gammas_at_build", to_json(c.gammas_at_build)}});
        gammas.push_back(c.gamma);
    }
    for (const auto& l : model.loadings) loadings.push_back(to_json(l));
    doc["components"] = comps;
    doc["loadings"] = loadings;
    doc["gammas"] = gammas;

    const FitConfig& cfg = model.config;
    doc["config"] = {{"kappa_max", cfg.kappa_max},
                     {"tol_alpha", cfg.tol_alpha},
                     {"max_inner_iter", cfg.max_inner_iter},
                     {"stop_eps", cfg.stop_eps},
                     {"weight_strategy", std::string(to_string(cfg.weight_strategy))},
                     {"bias_mode", std::string(to_string(cfg.bias_mode))},
                     {"standardize", cfg.standardize},
                     {"seed", cfg.seed}};
    const FitDiagnostics& d = model.diagnostics;
    doc["diagnostics"] = {{"components_built", d.components_built},
                          {"stop_reason", std::string(to_string(d.stop_reason))},
                          {"inner_iters", d.inner_iters},
                          {"runs", d.runs},
                          {"identity_weight_fallback", d.identity_weight_fallback}};
    return doc.dump(1);
}

GocreModel model_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format").get<std::string>() != "gocre-model") {
            throw FormatError("not a gocre model file");
        }
        const int version = doc.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw UnsupportedVersionError("unsupported model file version " +
                                          std::to_string(version) + " (expected " +
                                          std::to_string(kModelFormatVersion) + ")");
        }
        GocreModel m;
        const auto& fam = doc.at("family");
        m.family = family_kind_from_string(fam.at("kind").get<std::string>()) ==
                           FamilyKind::LogitBernoulli
                       ? LinkFamily::logit()
                       : LinkFamily::identity(fam.at("dispersion").get<double>());
        m.intercept = doc.at("intercept").get<double>();
        m.column_names = doc.at("column_names").get<std::vector<std::string>>();
        m.column_offsets = vector_from(doc.at("column_offsets"));
        m.column_scales = vector_from(doc.at("column_scales"));
        m.weights = vector_from(doc.at("weights"));
        m.beta_hat = vector_from(doc.at("beta_hat"));
        for (const auto& c : doc.at("components")) {
            ComponentRecord r;
            r.alpha = vector_from(c.at("alpha"));
            r.P_row = vector_from(c.at("P_row"));
            r.gamma = c.at("gamma").get<double>();
            r.inner_iters = c.at("inner_iters").get<int>();
            r.converged = c.at("converged").get<bool>();
            r.intercept_at_build = c.at("intercept_at_build").get<double>();
            r.gammas_at_build = vector_from(c.at("gammas_at_build"));
            m.components.push_back(std::move(r));
        }
        for (const auto& l : doc.at("loadings")) m.loadings.push_back(vector_from(l));

        const auto& cfg = doc.at("config");
        m.config.kappa_max = cfg.at("kappa_max").get<int>();
        m.config.tol_alpha = cfg.at("tol_alpha").get<double>();
        m.config.max_inner_iter = cfg.at("max_inner_iter").get<int>();
        m.config.stop_eps = cfg.at("stop_eps").get<double>();
        m.config.weight_strategy = weight_strategy_from_string(cfg.at("weight_strategy").get<std::string>());
        m.config.bias_mode = bias_mode_from_string(cfg.at("bias_mode").get<std::string>());
        m.config.standardize = cfg.at("standardize").get<bool>();
        m.config.seed = cfg.at("seed").get<std::uint64_t>();

        const auto& d = doc.at("diagnostics");
        m.diagnostics.components_built = d.at("components_built").get<int>();
        m.diagnostics.stop_reason = stop_reason_from_string(d.at("stop_reason").get<std::string>());
        m.diagnostics.inner_iters = d.at("inner_iters").get<std::vector<int>>();
        m.diagnostics.runs = d.at("runs").get<int>();
        m.diagnostics.identity_weight_fallback = d.value("identity_weight_fallback", false);

        const Eigen::Index p = m.column_offsets.size();
        if (m.beta_hat.size() != p || m.column_scales.size() != p ||
            m.loadings.size() != m.components.size() ||
            (!m.column_names.empty() && static_cast<Eigen::Index>(m.column_names.size()) != p)) {
            throw FormatError("model file has inconsistent dimensions");
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file is missing or has malformed fields: ") +
                          e.what());
    }
}

void save_model(const std::filesystem::path& path, const GocreModel& model) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    out << model_to_json(model) << '\n';
    if (!out) {
        throw std::runtime_error("failed writing '" + path.string() + "'");
    }
}

GocreModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

void write_report_csv(std::ostream& out, const BenchmarkReport& report, bool with_timings) {
    out << "method,rho,replicates,convergence_frequency,convergence_frequency_all,median_mr,se_mr,median_press,se_press,"
           "median_press_sum";
    if (with_timings) out << ",mean_seconds";
    out << '\n';
    for (const auto& r : report.rows) {
        out << to_string(r.method) << ',' << format_number(r.rho) << ',' << r.replicates << ','
            << format_number(r.convergence_frequency) << ','
            << format_number(r.convergence_frequency_all) << ',' << format_number(r.median_mr) << ','
            << format_number(r.se_mr) << ',' << format_number(r.median_press) << ','
            << format_number(r.se_press) << ',' << format_number(r.median_press_sum);
        if (with_timings) out << ',' << format_number(r.mean_seconds);
        out << '\n';
    }
}

void write_replicates_csv(std::ostream& out, const BenchmarkReport& report, bool with_timings) {
    out << "method,rho,replicate,seed,kappa_selected,converged,converged_all,failed,mr,press,press_sum";
    if (with_timings) out << ",seconds";
    out << '\n';
    for (const auto& r : report.replicates) {
        out << to_string(r.method) << ',' << format_number(r.rho) << ',' << r.replicate << ','
            << r.seed << ',' << r.kappa_selected << ',' << (r.converged ? 1 : 0) << ','
            << (r.converged_all ? 1 : 0) << ','
            << (r.failed ? 1 : 0) << ',' << format_number(r.mr) << ','
            << format_number(r.press) << ',' << format_number(r.press_sum);
        if (with_timings) out << ',' << format_number(r.seconds);
        out << '\n';
    }
}

}  // namespace gocre
