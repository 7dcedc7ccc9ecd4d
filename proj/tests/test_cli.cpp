#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fuplab/errors.hpp"
#include "runner.hpp"

using namespace fuplab;
using namespace fuplab::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "fuplab_cli_tests" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int line_count(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

RunRequest request(const std::string& kind, const fs::path& out, json params = json::object()) {
    RunRequest r;
    r.kind = kind;
    r.out = out.string();
    r.params = std::move(params);
    return r;
}

int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("value parsing") {
    const auto& e = find_experiment("fup-scan");
    const Param& k = e.params[1];
    REQUIRE(k.name == "k");
    CHECK(parse_value(k, "1..3,5") == json::array({1, 2, 3, 5}));
    CHECK_THROWS_AS(parse_value(k, "3..1"), ConfigError);
    CHECK_THROWS_AS(parse_value(k, "1.5"), ConfigError);
    const auto& c = find_experiment("constants");
    const Param& alpha = *std::find_if(c.params.begin(), c.params.end(), [](const Param& p) { return p.name == "alpha"; });
    CHECK(parse_value(alpha, "auto").is_null());
    CHECK(parse_value(alpha, "0.7") == json(0.7));
    CHECK_THROWS_AS(parse_value(alpha, "abc"), ConfigError);
    CHECK_THROWS_AS(find_experiment("nope"), ConfigError);
}

TEST_CASE("parameter resolution fills defaults and rejects unknown keys") {
    const auto& e = find_experiment("cantor");
    const json p = resolve_params(e, {{"depth", 2}});
    CHECK(p["depth"] == 2);
    CHECK(p["base"] == 3);
    CHECK(p["alphabet"] == json::array({0, 2}));
    CHECK_THROWS_AS(resolve_params(e, {{"deep", 2}}), ConfigError);
    CHECK_THROWS_AS(resolve_params(e, {{"depth", "two"}}), ConfigError);
}

TEST_CASE("configuration errors write nothing") {
    const auto out = scratch("bad");
    std::ostringstream log;
    CHECK(run(request("cantor", out, {{"bogus", 1}}), log) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run(request("cantor", out, {{"depth", -1}}), log) == 2);
    CHECK_FALSE(fs::exists(out));
    CHECK(run(request("damping", out), log) == 2);
    CHECK_FALSE(fs::exists(out));
    auto r = request("constants", out);
    r.precision = "half";
    CHECK(run(r, log) == 2);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("constants run writes a manifest") {
    const auto out = scratch("constants");
    std::ostringstream log;
    CHECK(run(request("constants", out), log) == 0);
    const json m = json::parse(slurp(out / "manifest.json"));
    CHECK(m["exit_code"] == 0);
    CHECK(m["kind"] == "constants");
    CHECK(m["params"]["d"] == 2);
    CHECK(m["params"]["alpha"].is_null());
    CHECK(m["outputs"] == json::array({"constants.json"}));
    CHECK(m["checks"]["chain_dominates_headline"] == true);
    const json c = json::parse(slurp(out / "constants.json"));
    CHECK(c.is_object());
}

TEST_CASE("reruns are byte-identical apart from the manifest") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    std::ostringstream log;
    REQUIRE(run(request("cantor", a, {{"depth", 3}}), log) == 0);
    REQUIRE(run(request("cantor", b, {{"depth", 3}}), log) == 0);
    CHECK(slurp(a / "gridset.json") == slurp(b / "gridset.json"));
    CHECK(slurp(a / "cubes.csv") == slurp(b / "cubes.csv"));
    CHECK(line_count(slurp(a / "cubes.csv")) == 1 + 8);
    const auto c = scratch("rerun_c"), d = scratch("rerun_d");
    auto rc = request("localization", c, {{"seeds", "0..3"}, {"n", 1024}});
    auto rd = rc;
    rd.out = d.string();
    rd.threads = 2;
    REQUIRE(run(rc, log) == 0);
    REQUIRE(run(rd, log) == 0);
    CHECK(slurp(c / "localization.csv") == slurp(d / "localization.csv"));
}

TEST_CASE("fup-scan writes the curve and the fit") {
    const auto out = scratch("fup");
    std::ostringstream log;
    CHECK(run(request("fup-scan", out, {{"k", "1..4"}}), log) == 0);
    const std::string csv = slurp(out / "curve.csv");
    CHECK(csv.rfind("k,N,dim,norm,method,residual\n", 0) == 0);
    CHECK(line_count(csv) == 5);
    const json beta = json::parse(slurp(out / "beta.json"));
    CHECK(beta["beta_hat"].get<double>() > 0.0);

    const auto spec_path = scratch("spec.json");
    fs::create_directories(spec_path.parent_path());
    std::ofstream(spec_path) << R"({"dimension": 1, "colour": 2})";
    CHECK(run(request("fup-scan", scratch("fup_bad"), {{"spec", spec_path.string()}}), log) == 2);
}

TEST_CASE("output path naming the main result") {
    const auto dir = scratch("named");
    std::ostringstream log;
    CHECK(run(request("conformal-check", dir / "asym.csv"), log) == 0);
    CHECK(fs::exists(dir / "asym.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(line_count(slurp(dir / "asym.csv")) == 4);
}

TEST_CASE("default output root from the environment") {
    const auto root = scratch("root");
    ::setenv(kOutputRootEnv, root.string().c_str(), 1);
    std::ostringstream log;
    CHECK(run(request("porosity", ""), log) == 0);
    ::unsetenv(kOutputRootEnv);
    CHECK(fs::exists(root / "porosity" / "porosity.json"));
}

TEST_CASE("config files") {
    const auto dir = scratch("ini");
    fs::create_directories(dir);
    const auto good = dir / "good.ini";
    std::ofstream(good) << "[experiment]\nkind = cantor\nseed = 7\nout = " << (dir / "out").string()
                        << "\n\n[cantor]\ndepth = 2\nalphabet = 0,2\n";
    const auto req = parse_config_file(good.string());
    CHECK(req.kind == "cantor");
    CHECK(req.seed == 7);
    CHECK(req.params["depth"] == 2);
    std::ostringstream log;
    CHECK(run(req, log) == 0);
    CHECK(json::parse(slurp(dir / "out" / "manifest.json"))["config_source"] == good.string());

    const auto bad_key = dir / "bad_key.ini";
    std::ofstream(bad_key) << "[experiment]\nkind = cantor\n[cantor]\ndepht = 2\n";
    CHECK_THROWS_AS(parse_config_file(bad_key.string()), ConfigError);
    const auto bad_section = dir / "bad_section.ini";
    std::ofstream(bad_section) << "[experiment]\nkind = cantor\n[porosity]\nL = 3\n";
    CHECK_THROWS_AS(parse_config_file(bad_section.string()), ConfigError);
    const auto no_kind = dir / "no_kind.ini";
    std::ofstream(no_kind) << "[experiment]\nseed = 1\n";
    CHECK_THROWS_AS(parse_config_file(no_kind.string()), ConfigError);
}

TEST_CASE("schema lists every experiment") {
    const json s = schema();
    CHECK(s.size() == experiments().size());
    std::vector<std::string> kinds;
    for (const auto& e : s) kinds.push_back(e["kind"]);
    for (const char* k : {"cantor", "regularity", "porosity", "conformal-check", "cartan-check", "localization",
                          "damping", "fup-scan", "constants", "distort-scan"})
        CHECK(std::find(kinds.begin(), kinds.end(), k) != kinds.end());
}

TEST_CASE("command-line executable") {
    const std::string cli = FUPLAB_CLI_PATH;
    const auto out = scratch("exe");
    CHECK(shell(cli + " --out " + out.string() + " cantor --depth 2 2>/dev/null") == 0);
    CHECK(fs::exists(out / "gridset.json"));
    const auto bad = scratch("exe_bad");
    CHECK(shell(cli + " --out " + bad.string() + " cantor --bogus 1 >/dev/null 2>&1") == 2);
    CHECK(shell(cli + " --out " + bad.string() + " cantor --depth x >/dev/null 2>&1") == 2);
    CHECK_FALSE(fs::exists(bad));
    CHECK(shell(cli + " schema >/dev/null") == 0);

    const auto echo = scratch("exe_echo");
    fs::create_directories(echo);
    CHECK(shell(cli + " --out " + (echo / "run").string() + " constants --json > " + (echo / "stdout.json").string() +
                " 2>/dev/null") == 0);
    CHECK(slurp(echo / "stdout.json") == slurp(echo / "run" / "constants.json"));

    const auto set_out = scratch("exe_set");
    REQUIRE(shell(cli + " --out " + set_out.string() + " cantor --depth 3 --lo=-27 --hi=27 2>/dev/null") == 0);
    const auto damp = scratch("exe_damp");
    CHECK(shell(cli + " --out " + damp.string() + " damping --set " + (set_out / "gridset.json").string() +
                " 2>/dev/null") == 0);
    const json psi = json::parse(slurp(damp / "psi.json"));
    CHECK(psi["report"]["pass"] == true);
    CHECK(fs::exists(damp / "psi_spectral.csv"));
}
