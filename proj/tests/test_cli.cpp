#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cqed/cli.hpp"

namespace fs = std::filesystem;
using cqed::report::Json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cqed::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path data(const std::string& name) { return fs::path(CQED_TEST_DATA_DIR) / name; }

class TempDir {
public:
    explicit TempDir(const std::string& tag) : path_(fs::temp_directory_path() / ("cqed_cli_" + tag)) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

TEST(Cli, PurcellExample) {
    const auto r = run({"purcell", "--C", "0.14", "--eta-dw", "0.02"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["command"], "purcell");
    EXPECT_NEAR(j["results"][0]["C_ZPL"].get<double>(), 7.0, 1e-12);
    EXPECT_NEAR(j["results"][0]["F_ZPL"].get<double>(), 8.0, 1e-12);
}

TEST(Cli, LinkBudgetElements) {
    const auto r = run({"link-budget", "--element", "coupler:efficiency=0.8", "--element", "collection:efficiency=0.197",
                        "--db-per-cm", "1.9", "--length-cm", "0.35"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_NEAR(j["total_efficiency"].get<double>(), 0.8 * 0.197 * 0.858025, 1e-6);
    EXPECT_EQ(j["elements"].size(), 3u);
}

TEST(Cli, LinkBudgetTable) {
    const auto r = run({"link-budget", "--element", "a:efficiency=0.6", "--element", "b:loss_db=2.2184874962",
                        "--element", "c:efficiency=0.7", "--measured-total", "0.2", "--table"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("total"), std::string::npos);
    EXPECT_NE(r.out.find("0.2520"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("unexplained"), std::string::npos);
}

TEST(Cli, LinkBudgetChainFile) {
    TempDir dir("chain");
    const auto chain = dir.path() / "chain.json";
    std::ofstream(chain) << R"({"elements": [{"name": "wg", "loss_db_per_cm": 1.9, "length_cm": 1.0}]})";
    const auto r = run({"link-budget", "--chain", chain.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(Json::parse(r.out)["total_efficiency"].get<double>(), 0.645654, 1e-6);

    std::ofstream(chain) << R"([{"name": "x", "efficiency": 0.5, "loss_db": 3}])";
    EXPECT_EQ(run({"link-budget", "--chain", chain.string()}).code, 2);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"purcell", "--C", "-1"}).code, 1);
    EXPECT_EQ(run({"purcell", "--C", "0.1", "--bogus"}).code, 2);
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"fit-decay", "/nonexistent/trace.csv"}).code, 2);
    EXPECT_EQ(run({"link-budget", "--element", "x:efficiency=1.5"}).code, 1);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, MalformedCsvReportsLocation) {
    TempDir dir("bad");
    const auto f = dir.path() / "bad.csv";
    std::ofstream(f) << "delta_hz,tau_s\n0,1.4e-8\n1e11,oops\n";
    const auto r = run({"fit-detuning", f.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.csv:3:6"), std::string::npos) << r.err;
}

TEST(Cli, FitDetuningOnShippedData) {
    const auto r = run({"fit-detuning", data("tau_detuning.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    EXPECT_NEAR(j["C"].get<double>(), 0.14, 0.03);
    EXPECT_NEAR(j["tau1"].get<double>(), 15.9e-9, 0.3e-9);
    EXPECT_NEAR(j["kappa_hz"].get<double>(), 940e9, 3 * j["fit"]["standard_errors"]["kappa_hz"].get<double>());
    EXPECT_TRUE(j["fit"]["converged"].get<bool>());
}

TEST(Cli, FitDecayOnShippedData) {
    const auto r = run({"fit-decay", data("decay_0ghz.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    const double tau0 = 15.9e-9 / 1.14;
    EXPECT_NEAR(j["tau_s"].get<double>() / tau0, 1.0, 0.02);
    EXPECT_GT(j["fit"]["reduced_chi2"].get<double>(), 0.5);
    EXPECT_LT(j["fit"]["reduced_chi2"].get<double>(), 1.5);
}

TEST(Cli, FitSpectrumOnShippedData) {
    const auto r = run({"fit-spectrum", data("spectrum.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(Json::parse(r.out)["cavity_center_nm"].get<double>(), 636.0, 0.1);
}

TEST(Cli, GridCommandsOnShippedData) {
    const auto mv = run({"mode-volume", data("field_grid.csv").string()});
    ASSERT_EQ(mv.code, 0) << mv.err;
    EXPECT_GT(Json::parse(mv.out)["mode_volume_m3"].get<double>(), 0.0);
    const auto ew = run({"ensemble-weight", data("field_grid.csv").string()});
    ASSERT_EQ(ew.code, 0) << ew.err;
    const double f = Json::parse(ew.out)["weighting"].get<double>();
    EXPECT_GT(f, 0.0);
    EXPECT_LE(f, 1.0 / std::sqrt(3.0));
}

TEST(Cli, ShippedFixturesAreReproducible) {
    TempDir dir("gen");
    const auto r = run({"gen-synthetic", "--out-dir", dir.path().string(), "--seed", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const auto& f : Json::parse(r.out)["files"]) {
        const auto name = f.get<std::string>();
        EXPECT_EQ(slurp(dir.path() / name), slurp(data(name))) << name;
    }
}

TEST(Cli, SimulateDecayMatchesAnalyticRate) {
    const auto r = run({"simulate-decay", "--C", "0.14", "--detuning-ghz", "0,940", "--n-max", "1", "--horizon-ns",
                        "40"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(r.out);
    ASSERT_EQ(j["traces"].size(), 2u);
    for (const auto& t : j["traces"]) {
        EXPECT_LT(std::abs(t["relative_difference"].get<double>()), 0.02);
        EXPECT_LT(t["max_trace_deviation"].get<double>(), 1e-7);
    }
}

TEST(Cli, RepeatedRunsAreByteIdentical) {
    const std::vector<std::vector<std::string>> cmds{
        {"purcell", "--C", "0.14", "--tau-on-ns", "13.95", "--tau-off-ns", "15.9"},
        {"g0", "--eta-dw", "0.02,0.025,0.03"},
        {"fit-detuning", data("tau_detuning.csv").string()},
        {"fit-decay", data("decay_500ghz.csv").string(), "--background"},
    };
    for (const auto& c : cmds) {
        const auto a = run(c), b = run(c);
        EXPECT_EQ(a.code, 0) << c[0] << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << c[0];
    }
}

TEST(Cli, OutWritesSameBytesAsStdout) {
    TempDir dir("out");
    const auto path = dir.path() / "sub" / "g0.json";
    const auto stdout_run = run({"g0"});
    const auto file_run = run({"g0", "--out", path.string()});
    ASSERT_EQ(file_run.code, 0) << file_run.err;
    EXPECT_TRUE(file_run.out.empty());
    EXPECT_EQ(slurp(path), stdout_run.out);
}

TEST(Cli, SimulateFromFitResult) {
    TempDir dir("fromfit");
    const auto fit = dir.path() / "fit.json";
    ASSERT_EQ(run({"fit-detuning", data("tau_detuning.csv").string(), "--out", fit.string()}).code, 0);
    const auto r = run({"simulate-decay", "--from-fit", fit.string(), "--n-max", "1", "--horizon-ns", "20"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto fitted = Json::parse(slurp(fit));
    EXPECT_DOUBLE_EQ(Json::parse(r.out)["params"]["kappa_hz"].get<double>(), fitted["kappa_hz"].get<double>());
}
