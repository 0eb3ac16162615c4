#include "gocre/cli.hpp"
#include "gocre/io.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace gocre;
using namespace gocre::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "gocre");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("gocre_cli_" + std::to_string(std::rand()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_dataset(const std::string& path, int n, int p, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.X = random_matrix(n, p, rng);
    d.y = random_binary_response(d.X, rng);
    d.response_name = "label";
    for (int j = 0; j < p; ++j) d.column_names.push_back("g" + std::to_string(j));
    std::ofstream out(path);
    write_csv(out, d);
}

}  // namespace

TEST_CASE("cli: fit then predict") {
    TempDir tmp;
    write_dataset(tmp / "train.csv", 30, 12, 1);
    const Run f = run({"fit", "--data", tmp / "train.csv", "--response", "label", "--kappa-max", "3",
                       "--out-model", tmp / "m.json"});
    REQUIRE(f.code == 0);
    CHECK(f.out.find("components,3") != std::string::npos);
    const GocreModel m = load_model(tmp / "m.json");
    CHECK(m.config.bias_mode == BiasMode::ClosedFormDelta);
    CHECK(m.components.size() == 3);

    const Run p = run({"predict", "--model", tmp / "m.json", "--data", tmp / "train.csv"});
    REQUIRE(p.code == 0);
    std::istringstream lines(p.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "eta,mean");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == 30);

    const Run to_file = run({"predict", "--model", tmp / "m.json", "--data", tmp / "train.csv", "--out", tmp / "p.csv"});
    CHECK(to_file.code == 0);
    CHECK(slurp(tmp / "p.csv") == p.out);

    // predictions line up with the library on the same rows
    std::ifstream in(tmp / "train.csv");
    const Dataset d = read_csv(in, "label");
    const Prediction pr = predict(m, d.X);
    std::istringstream again(p.out);
    std::getline(again, line);
    std::getline(again, line);
    CHECK(line == format_number(pr.eta[0]) + "," + format_number(pr.mean[0]));
}

TEST_CASE("cli: fit options") {
    TempDir tmp;
    write_dataset(tmp / "d.csv", 25, 8, 2);
    CHECK(run({"fit", "--data", tmp / "d.csv", "--response", "0", "--bias", "full", "--weights", "two-run",
               "--out-model", tmp / "a.json"}).code == 0);
    const GocreModel a = load_model(tmp / "a.json");
    CHECK(a.config.bias_mode == BiasMode::FullDelta);
    CHECK(a.diagnostics.runs == 2);

    CHECK(run({"fit", "--data", tmp / "d.csv", "--response", "label", "--family", "identity",
               "--kappa-max", "2", "--out-model", tmp / "b.json"}).code == 0);
    CHECK(load_model(tmp / "b.json").family.kind() == FamilyKind::IdentityGaussian);

    // bias correction with a non-logit family is a runtime error
    CHECK(run({"fit", "--data", tmp / "d.csv", "--response", "label", "--family", "identity", "--bias", "closed",
               "--out-model", tmp / "c.json"}).code == 1);
}

TEST_CASE("cli: simulate is byte-for-byte reproducible") {
    TempDir tmp;
    const std::vector<std::string> args{"simulate", "--rho", "0.5", "--replicates", "5", "--base-seed", "7",
                                        "--n-train", "30", "--n-valid", "20", "--n-test", "30", "--p", "40",
                                        "--n-blocks", "4", "--kappa-max", "3"};
    std::vector<std::string> a1 = args, a2 = args;
    a1.insert(a1.end(), {"--out-report", tmp / "r1.csv", "--out-replicates", tmp / "l1.csv"});
    a2.insert(a2.end(), {"--out-report", tmp / "r2.csv", "--out-replicates", tmp / "l2.csv"});
    REQUIRE(run(a1).code == 0);
    REQUIRE(run(a2).code == 0);
    CHECK(slurp(tmp / "r1.csv") == slurp(tmp / "r2.csv"));
    CHECK(slurp(tmp / "l1.csv") == slurp(tmp / "l2.csv"));
    const std::string report = slurp(tmp / "r1.csv");
    CHECK(report.rfind("method,rho,replicates,convergence_frequency", 0) == 0);
    CHECK(report.find("gocre,0.5,5,") != std::string::npos);
    CHECK(report.find("mean_seconds") == std::string::npos);

    const Run stdout_run = run(args);
    CHECK(stdout_run.out == report);

    const std::vector<std::string> b{"bench", "--timings", "--methods", "gocre,irpls-m", "--rho", "0,0.5",
                                     "--replicates", "2", "--n-train", "30", "--n-valid", "20", "--n-test", "30",
                                     "--p", "40", "--n-blocks", "4", "--kappa-max", "3"};
    const Run bench = run(b);
    REQUIRE(bench.code == 0);
    CHECK(bench.out.find("mean_seconds") != std::string::npos);
    CHECK(bench.out.find("irpls-dg") == std::string::npos);
    CHECK(bench.out.find("irpls-m,0,2,") != std::string::npos);
    CHECK(bench.out.find("gocre,0.5,2,") != std::string::npos);
}

TEST_CASE("cli: rank-features keeps the top columns") {
    TempDir tmp;
    write_dataset(tmp / "d.csv", 40, 30, 3);
    const Run r = run({"rank-features", "--data", tmp / "d.csv", "--response", "label", "--top", "5",
                       "--out", tmp / "top.csv", "--out-pvalues", tmp / "p.csv"});
    REQUIRE(r.code == 0);
    std::ifstream in(tmp / "top.csv");
    const Dataset top = read_csv(in, "label");
    CHECK(top.p() == 5);
    CHECK(top.n() == 40);

    // every column appears exactly once in the p-value listing
    std::istringstream pv(slurp(tmp / "p.csv"));
    std::string line;
    std::getline(pv, line);
    CHECK(line == "rank,column,name,p_value");
    std::vector<int> seen(30, 0);
    int rows = 0;
    while (std::getline(pv, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        ++seen[static_cast<std::size_t>(std::stoi(line.substr(c1 + 1, c2 - c1 - 1)))];
        ++rows;
    }
    CHECK(rows == 30);
    for (int v : seen) CHECK(v == 1);

    const Run all = run({"rank-features", "--data", tmp / "d.csv", "--response", "label"});
    REQUIRE(all.code == 0);
    std::istringstream all_in(all.out);
    CHECK(read_csv(all_in, "label").p() == 30);
}

TEST_CASE("cli: usage and runtime errors") {
    CHECK(run({}).code == 2);
    const Run unknown = run({"fit", "--data", "d.csv", "--response", "y", "--out-model", "m.json", "--nope"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("--nope") != std::string::npos);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"fit", "--data", "x.csv", "--response", "y", "--family", "probit", "--out-model", "m.json"}).code == 2);
    CHECK(run({"simulate", "--rho", "abc"}).code == 2);
    CHECK(run({"simulate", "--methods", "gocre,bogus"}).code == 2);
    CHECK(run({"fit", "--data", "/nonexistent/x.csv", "--response", "y", "--out-model", "/tmp/never.json"}).code == 1);
    CHECK(run({"simulate", "--p", "1001", "--replicates", "1"}).code == 1);
    const Run help = run({"--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("rank-features") != std::string::npos);
}
