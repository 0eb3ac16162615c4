#include "gocre/errors.hpp"
#include "gocre/io.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace gocre;
using namespace gocre::testing;

namespace {

Dataset parse(const std::string& text, const std::string& response) {
    std::istringstream in(text);
    return read_csv(in, response);
}

GocreModel small_model(BiasMode mode = BiasMode::ClosedFormDelta) {
    Rng rng(101);
    Dataset d;
    d.X = random_matrix(20, 6, rng);
    d.y = random_binary_response(d.X, rng);
    d.column_names = {"a", "b", "c", "d", "e", "f"};
    return fit(d, LinkFamily::logit(), FitConfig{.kappa_max = 3, .bias_mode = mode});
}

}  // namespace

TEST_CASE("read_csv") {
    const std::string text = "y,x1,x2\n1,2,3\n0,4.5,-6e-1\n1,7,8\n";
    const Dataset d = parse(text, "y");
    CHECK(d.n() == 3);
    CHECK(d.p() == 2);
    CHECK(d.column_names == std::vector<std::string>{"x1", "x2"});
    CHECK(d.response_name == "y");
    CHECK(d.y == (Vector(3) << 1, 0, 1).finished());
    CHECK(d.X(1, 1) == -0.6);

    const Dataset by_index = parse(text, "0");
    CHECK(by_index.X == d.X);
    CHECK(by_index.y == d.y);

    const Dataset middle = parse(text, "x1");
    CHECK(middle.column_names == std::vector<std::string>{"y", "x2"});
    CHECK(middle.y[2] == 7.0);

    CHECK(parse("\xEF\xBB\xBFy,x\n1,2\n0,3\n", "y").n() == 2);
    CHECK(parse("y,x\r\n1,2\r\n\r\n0,3\r\n", "y").n() == 2);
}

TEST_CASE("read_csv errors") {
    CHECK_THROWS_AS(parse("y,x1\n1,2\n", "z"), MissingColumnError);
    CHECK_THROWS_AS(parse("y,x1\n1,2\n", "5"), MissingColumnError);
    CHECK_THROWS_AS(parse("", "y"), FormatError);
    CHECK_THROWS_AS(parse("y,x1,x2\n1,2,3\n0,4\n", "y"), FormatError);

    try {
        parse("y,x1,x2\n1,2,3\n0,NA,3\n", "y");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 3);
        CHECK(e.column() == 2);
        CHECK(std::string(e.what()).find("NA") != std::string::npos);
    }
}

TEST_CASE("write_csv round trip") {
    Rng rng(102);
    Dataset d;
    d.X = random_matrix(7, 3, rng);
    d.X(0, 0) = 1e-300;
    d.X(1, 1) = -123456789.123456789;
    d.X(2, 2) = 0.1;
    d.y = random_binary_response(d.X, rng);
    d.column_names = {"g1", "g2", "g3"};
    d.response_name = "status";
    std::stringstream buf;
    write_csv(buf, d);
    const Dataset back = read_csv(buf, "status");
    CHECK(back.X == d.X);
    CHECK(back.y == d.y);
    CHECK(back.column_names == d.column_names);
}

TEST_CASE("format_number") {
    CHECK(format_number(1.0 / 3.0) == "0.3333333333");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(12345678901.0) == "1.23456789e+10");
}

TEST_CASE("model JSON round trip") {
    const GocreModel m = small_model();
    const GocreModel back = model_from_json(model_to_json(m));
    Rng rng(103);
    const Matrix Xnew = random_matrix(9, 6, rng);
    CHECK(predict(back, Xnew).eta == predict(m, Xnew).eta);
    CHECK(predict(back, Xnew).mean == predict(m, Xnew).mean);
    CHECK(back.beta_hat == m.beta_hat);
    CHECK(back.weights == m.weights);
    CHECK(back.column_names == m.column_names);
    CHECK(back.family == m.family);
    CHECK(back.config.bias_mode == m.config.bias_mode);
    CHECK(back.config.kappa_max == m.config.kappa_max);
    CHECK(back.diagnostics.stop_reason == m.diagnostics.stop_reason);
    CHECK(back.diagnostics.inner_iters == m.diagnostics.inner_iters);
    REQUIRE(back.components.size() == m.components.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
        CHECK(back.components[j].alpha == m.components[j].alpha);
        CHECK(back.components[j].P_row == m.components[j].P_row);
        CHECK(back.components[j].gamma == m.components[j].gamma);
        CHECK(back.loadings[j] == m.loadings[j]);
    }
    // truncation survives the trip too
    CHECK(back.truncated(2).beta_hat == m.truncated(2).beta_hat);

    const std::string text = model_to_json(m);
    CHECK(text.find("\"number_format\"") != std::string::npos);
    CHECK(text.find("\"version\": 1") != std::string::npos);
}

TEST_CASE("model files on disk") {
    const auto dir = std::filesystem::temp_directory_path() / "gocre_test_io";
    std::filesystem::create_directories(dir);
    const auto path = dir / "m.json";
    const GocreModel m = small_model(BiasMode::FullDelta);
    save_model(path, m);
    const GocreModel back = load_model(path);
    CHECK(predict(back, m.column_offsets.transpose()).eta == predict(m, m.column_offsets.transpose()).eta);
    CHECK_THROWS(load_model(dir / "missing.json"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("model JSON errors") {
    std::string text = model_to_json(small_model());
    const auto pos = text.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    std::string v999 = text;
    v999.replace(pos, 12, "\"version\": 999");
    CHECK_THROWS_AS(model_from_json(v999), UnsupportedVersionError);

    CHECK_THROWS_AS(model_from_json(text.substr(0, text.size() / 2)), FormatError);
    CHECK_THROWS_AS(model_from_json("[]"), FormatError);
    CHECK_THROWS_AS(model_from_json("{\"format\": \"gocre-model\", \"version\": 1}"), FormatError);
    CHECK_THROWS_AS(model_from_json(""), FormatError);
}

TEST_CASE("model with no components") {
    Dataset d;
    d.X = Matrix::Zero(6, 3);
    d.y = (Vector(6) << 1, 0, 1, 1, 0, 0).finished();
    const GocreModel m = fit(d, LinkFamily::logit(), FitConfig{.kappa_max = 2});
    REQUIRE(m.components.empty());
    CHECK(m.diagnostics.stop_reason == StopReason::Uncorrelated);
    const GocreModel back = model_from_json(model_to_json(m));
    CHECK(back.components.empty());
    CHECK(back.beta_hat == Vector::Zero(3));
    CHECK(back.intercept == m.intercept);
    CHECK(predict(back, Matrix::Ones(2, 3)).eta == predict(m, Matrix::Ones(2, 3)).eta);
}

TEST_CASE("report CSV") {
    BenchmarkReport rep;
    ReportRow row;
    row.method = Method::IrplsDG;
    row.rho = 0.3;
    row.replicates = 20;
    row.convergence_frequency = 0.85;
    row.convergence_frequency_all = 0.5;
    row.median_mr = 1.0 / 3.0;
    row.mean_seconds = 2.0;
    rep.rows.push_back(row);
    std::ostringstream plain, timed;
    write_report_csv(plain, rep, false);
    write_report_csv(timed, rep, true);
    CHECK(plain.str() ==
          "method,rho,replicates,convergence_frequency,convergence_frequency_all,median_mr,se_mr,median_press,se_press,median_press_sum\n"
          "irpls-dg,0.3,20,0.85,0.5,0.3333333333,0,0,0,0\n");
    CHECK(timed.str().find(",mean_seconds\n") != std::string::npos);
    CHECK(timed.str().find(",2\n") != std::string::npos);
}
