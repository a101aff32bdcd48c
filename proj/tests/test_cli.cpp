#include "doctest.h"

#include "quasilab/cli.hpp"
#include "quasilab/errors.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace quasilab;
using namespace quasilab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "quasilab_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string write_config(const fs::path& dir, const json& j) {
    const auto path = dir / "config.json";
    std::ofstream(path) << j.dump(2);
    return path.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int invoke(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    args.insert(args.begin(), "quasilab");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int rc = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

json gordon_config(double gamma, double delta) {
    return {{"experiment", "gordon-check"},
            {"frequencies", json::array({{{"rule", "golden"}}})},
            {"potential", {{"family", "constant"}, {"d", 1}, {"value", 1.0}}},
            {"params", {{"taus", json::array({json::array({2}), json::array({5}), json::array({3})})},
                        {"gamma", gamma},
                        {"delta", delta}}}};
}

json golden_cos_config(const json& taus) {
    return {{"experiment", "gordon-check"},
            {"frequencies", json::array({{{"rule", "golden"}}})},
            {"potential",
             {{"family", "trig_polynomial"}, {"d", 1}, {"terms", json::array({{{"wave", {1}}, {"cos", 1.0}}})}}},
            {"params", {{"taus", taus}, {"gamma", 1.0}, {"delta", 0.5}}}};
}

} // namespace

TEST_CASE("gordon-check on a constant potential exits 0") {
    const auto dir = scratch("gordon_const");
    const auto cfg = write_config(dir, gordon_config(1.0, 0.5));
    CHECK(invoke({"gordon-check", "--config", cfg, "--out", (dir / "out").string()}) == kPass);
    const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    CHECK(manifest.at("status") == "pass");
    CHECK(manifest.at("gordon").size() == 3);
    CHECK(fs::exists(dir / "out" / "gordon-report.txt"));
}

TEST_CASE("gordon-check that fails exits 1") {
    const auto dir = scratch("gordon_fail");
    const auto cfg = write_config(dir, golden_cos_config(json::array({json::array({5})})));
    CHECK(invoke({"gordon-check", "--config", cfg, "--out", (dir / "out").string()}) == kGordonFail);
    CHECK(json::parse(slurp(dir / "out" / "manifest.json")).at("status") == "fail");
}

TEST_CASE("gordon-check in direct mode") {
    const auto dir = scratch("gordon_direct");
    const json j = {{"experiment", "gordon-check"},
                    {"params", {{"rho", 0.0}, {"m", 1.0}, {"d", 1}, {"tau", {4}}, {"gamma", 1.0}, {"lambda0", 3.0}}}};
    CHECK(invoke({"gordon-check", "--config", write_config(dir, j), "--out", (dir / "out").string()}) == kPass);
}

TEST_CASE("gamma <= delta is a config error with exit 2") {
    const auto dir = scratch("gamma_delta");
    std::string err;
    CHECK(invoke({"gordon-check", "--config", write_config(dir, gordon_config(0.5, 0.5))}, nullptr, &err) == kFault);
    CHECK(err.find("gamma > delta > 0") != std::string::npos);
    CHECK_THROWS_AS(parse_config(gordon_config(0.4, 0.5)), ConfigError);
    CHECK_THROWS_AS(parse_config(gordon_config(1.0, 0.0)), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
    auto j = gordon_config(1.0, 0.5);
    j["colour"] = "blue";
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = gordon_config(1.0, 0.5);
    j["params"]["gama"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = gordon_config(1.0, 0.5);
    j["potential"]["heigth"] = 1.0;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = gordon_config(1.0, 0.5);
    j["frequencies"][0]["base"] = 2;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = gordon_config(1.0, 0.5);
    j["mc"] = {{"sample", 10}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("malformed configs") {
    CHECK_THROWS_AS(parse_config({{"experiment", "warp"}}), ConfigError);
    CHECK_THROWS_AS(parse_config({{"experiment", "interleave"},
                                  {"frequencies", json::array({{{"rule", "golden"}}})},
                                  {"params", {{"epsilon", 0.1}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"experiment", "measure-zero"}, {"params", {{"m", {2, 0}}, {"epsilon", 0.1}}}}),
                    ConfigError);
    CHECK_THROWS_AS(parse_config({{"experiment", "measure-zero"}, {"params", {{"m", {2}}, {"epsilon", "small"}}}}),
                    ConfigError);
    auto j = gordon_config(1.0, 0.5);
    j["potential"] = {{"family", "inverse_power_singularity"}, {"d", 1}, {"center", {0.5}}, {"exponent", 0.25}};
    CHECK_THROWS_AS(parse_config(j), ConfigError); // unbounded without lambda0
    j["params"]["lambda0"] = 10.0;
    CHECK_NOTHROW(parse_config(j));

    const auto dir = scratch("malformed");
    std::ofstream(dir / "broken.json") << "{\"experiment\": ";
    CHECK(invoke({"gordon-check", "--config", (dir / "broken.json").string()}) == kFault);
    CHECK(invoke({"gordon-check", "--config", (dir / "absent.json").string()}) == kFault);
    CHECK(invoke({"spectrum", "--config", write_config(dir, gordon_config(1.0, 0.5))}) == kFault);
    CHECK(invoke({"gordon-check"}) == kFault);
}

TEST_CASE("frequency rules parse") {
    CHECK(parse_frequency({{"rule", "silver"}}).quotient(3) == 2);
    CHECK(parse_frequency({{"rule", "periodic"}, {"period", {1, 3}}}).quotient(2) == 3);
    const auto e = parse_frequency({{"rule", "explicit"}, {"quotients", {1, "2^70"}}, {"tail", {{"rule", "golden"}}}});
    CHECK(e.quotient(2) == BigInt(1) << 70);
    CHECK(e.quotient(5) == 1);
    CHECK_THROWS_AS(parse_frequency({{"rule", "explicit"}, {"quotients", {"two"}}}), ConfigError);
    CHECK_THROWS_AS(parse_frequency({{"rule", "golden"}, {"depth", 1}}), ConfigError);
}

TEST_CASE("measure-zero reproduces the closed form") {
    const auto dir = scratch("measure_zero");
    const json j = {{"experiment", "measure-zero"},
                    {"params", {{"m", {2, 2, 2}}, {"epsilon", 0.1}}},
                    {"mc", {{"samples", 400000}, {"seed", 11}}}};
    REQUIRE(invoke({"measure-zero", "--config", write_config(dir, j), "--out", (dir / "out").string()}) == kPass);
    std::istringstream csv(slurp(dir / "out" / "measure-zero.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() >= 7);
    CHECK(std::stod(cells[3]) == doctest::Approx(1.25e-4).epsilon(1e-12));
    CHECK(std::stod(cells[5]) <= 1.25e-4);
    CHECK(1.25e-4 <= std::stod(cells[6]));
}

TEST_CASE("report sorts by tau product and handles empty input") {
    const auto dir = scratch("report");
    std::string text;
    CHECK(invoke({"report"}, &text) == kPass);
    CHECK(text == "tau_product,tau,margin_log,pass,manifest\n");

    std::vector<std::string> manifests;
    for (const int t : {8, 2, 5}) {
        const auto out = dir / ("run" + std::to_string(t));
        const auto cfg = write_config(dir, golden_cos_config(json::array({json::array({t})})));
        invoke({"gordon-check", "--config", cfg, "--out", out.string()});
        manifests.push_back((out / "manifest.json").string());
    }
    CHECK(collect_trend({manifests[0]}).size() == 1);
    const auto rows = collect_trend(manifests);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].tau_product == 2);
    CHECK(rows[1].tau_product == 5);
    CHECK(rows[2].tau_product == 8);
    CHECK(rows[0].margin_log > rows[2].margin_log);

    std::vector<std::string> args{"report", "--out", (dir / "trend").string()};
    args.insert(args.end(), manifests.begin(), manifests.end());
    CHECK(invoke(args, &text) == kPass);
    CHECK(slurp(dir / "trend" / "report.csv") == text);
    CHECK(invoke({"report", (dir / "nothing.json").string()}) == kFault);
}

TEST_CASE("outputs do not depend on the thread count") {
    const auto dir = scratch("threads");
    const json z = {{"experiment", "measure-zero"},
                    {"params", {{"m", {3, 2}}, {"epsilon", 0.2}}},
                    {"mc", {{"samples", 100000}, {"seed", 5}, {"chunk_size", 1000}}}};
    const auto cfg = write_config(dir, z);
    invoke({"measure-zero", "--config", cfg, "--out", (dir / "t1").string(), "--threads", "1"});
    invoke({"measure-zero", "--config", cfg, "--out", (dir / "t8").string(), "--threads", "8"});
    CHECK(slurp(dir / "t1" / "measure-zero.csv") == slurp(dir / "t8" / "measure-zero.csv"));

    const auto gcfg = write_config(dir, golden_cos_config(json::array({json::array({13})})));
    invoke({"gordon-check", "--config", gcfg, "--out", (dir / "g1").string(), "--threads", "1"});
    invoke({"gordon-check", "--config", gcfg, "--out", (dir / "g8").string(), "--threads", "8"});
    CHECK(slurp(dir / "g1" / "gordon-check.csv") == slurp(dir / "g8" / "gordon-check.csv"));
}

TEST_CASE("manifest echoes a config that validates again") {
    const auto dir = scratch("manifest");
    const json z = {{"experiment", "measure-zero"}, {"params", {{"m", {2}}, {"epsilon", 0.1}}}};
    REQUIRE(invoke({"measure-zero", "--config", write_config(dir, z), "--out", (dir / "a").string(), "--seed", "99"}) ==
            kPass);
    const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
    CHECK(manifest.at("seed") == 99);
    CHECK(manifest.at("version") == kVersion);
    const auto echo = parse_config(manifest.at("config"));
    CHECK(echo.mc.seed == 99);

    const auto rerun = write_config(dir, manifest.at("config"));
    REQUIRE(invoke({"measure-zero", "--config", rerun, "--out", (dir / "b").string()}) == kPass);
    CHECK(slurp(dir / "a" / "measure-zero.csv") == slurp(dir / "b" / "measure-zero.csv"));
}

TEST_CASE("spectrum, transport and probe experiments write their tables") {
    const auto dir = scratch("lattice");
    const json pot = {{"family", "trig_polynomial"}, {"d", 1}, {"terms", json::array({{{"wave", {1}}, {"cos", 2.0}}})}};
    const json freq = json::array({{{"rule", "golden"}}});
    const json s = {{"experiment", "spectrum"},
                    {"frequencies", freq},
                    {"potential", pot},
                    {"params", {{"sides", {20}}, {"vectors", true}, {"dump", true}}}};
    REQUIRE(invoke({"spectrum", "--config", write_config(dir, s), "--out", (dir / "s").string()}) == kPass);
    CHECK(fs::file_size(dir / "s" / "eigenvectors.bin") == 16 + 8 * (20 + 400));
    CHECK(json::parse(slurp(dir / "s" / "manifest.json")).at("max_residual").get<double>() < 1e-10);

    const json t = {{"experiment", "transport"},
                    {"params", {{"sides", {41}}, {"times", {0.0, 1.0, 2.0}}, {"disorder", {{"half_width", 1.0}}}}}};
    REQUIRE(invoke({"transport", "--config", write_config(dir, t), "--out", (dir / "t").string()}) == kPass);
    CHECK(slurp(dir / "t" / "transport.csv").rfind("t,norm,mean_abs_x,mean_x2\n0,1,0,0\n", 0) == 0);

    const json p = {{"experiment", "measure-probe"},
                    {"potential", pot},
                    {"params",
                     {{"shifts", json::array({json::array({0.1}), json::array({0.3})})},
                      {"epsilons", {0.5}},
                      {"levels", {1.0}},
                      {"kappa", {{"epsilon", 0.1}, {"eta", 0.05}}}}},
                    {"mc", {{"samples", 20000}, {"seed", 3}}}};
    REQUIRE(invoke({"measure-probe", "--config", write_config(dir, p), "--out", (dir / "p").string()}) == kPass);
    CHECK(fs::exists(dir / "p" / "measure-probe.csv"));
    CHECK(fs::exists(dir / "p" / "levels.csv"));
    CHECK(fs::exists(dir / "p" / "kappa.csv"));
}

TEST_CASE("frequency search and interleave experiments") {
    const auto dir = scratch("freq");
    const json f = {{"experiment", "freq-search"},
                    {"frequencies", json::array({{{"rule", "golden"}}})},
                    {"params", {{"target", 1e-12}, {"depth", 5}}}};
    REQUIRE(invoke({"freq-search", "--config", write_config(dir, f), "--out", (dir / "f").string()}) == kPass);
    CHECK(slurp(dir / "f" / "freq-search.csv").find("\nfalse,") != std::string::npos);
    const json i = {{"experiment", "interleave"},
                    {"frequencies", json::array({{{"rule", "golden"}}, {{"rule", "silver"}}})},
                    {"params", {{"epsilon", 0.5}}}};
    REQUIRE(invoke({"interleave", "--config", write_config(dir, i), "--out", (dir / "i").string()}) == kPass);
    CHECK(fs::exists(dir / "i" / "interleave.csv"));
}
