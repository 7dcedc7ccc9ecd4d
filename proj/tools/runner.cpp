#include "runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "fuplab/conformal.hpp"
#include "fuplab/constants.hpp"
#include "fuplab/damping.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/fup_operator.hpp"
#include "fuplab/localization.hpp"
#include "fuplab/parallel.hpp"
#include "fuplab/potential_theory.hpp"
#include "fuplab/regular_sets.hpp"

namespace fuplab::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- schema

const std::vector<Param> kCantorParams{
    {"dimension", ParamType::Int, 1, "1 or 2"},
    {"base", ParamType::Int, 3, "subdivision base M"},
    {"alphabet", ParamType::IntList, json::array({0, 2}), "kept digits"},
    {"depth", ParamType::Int, 4, "construction depth k"},
    {"lo", ParamType::Real, 0.0, "left end of the unit interval per axis"},
    {"hi", ParamType::Real, 1.0, "right end per axis"},
};

std::vector<Param> with_cantor(std::vector<Param> extra) {
    std::vector<Param> p = kCantorParams;
    p.insert(p.end(), extra.begin(), extra.end());
    return p;
}

std::vector<Experiment> build_experiments() {
    return {
        {"cantor", "build a Cantor-type grid set", kCantorParams},
        {"regularity", "check delta-regularity of a Cantor set with its natural measure",
         with_cantor({{"delta", ParamType::OptionalReal, nullptr, "exponent; auto = log|A| / log M"},
                      {"alpha0", ParamType::OptionalReal, nullptr, "smallest scale; auto = resolution"},
                      {"alpha1", ParamType::Real, 1.0, "largest scale"},
                      {"CR", ParamType::Real, 8.0, "constant to certify"},
                      {"sample_budget", ParamType::Int, 1000000, "cube samples per scale"}})},
        {"porosity", "check porosity of a Cantor set",
         with_cantor({{"L", ParamType::Int, 3, "scale"},
                      {"depths", ParamType::IntList, json::array(), "depths; empty = all admissible"}})},
        {"conformal-check", "rectangle map asymptotics",
         {{"q", ParamType::RealList, json::array({0.3, 0.2, 0.1}), "half-heights"}}},
        {"cartan-check", "Cartan disk cover and lower bound for one seeded mass configuration",
         {{"H", ParamType::RealList, json::array({0.1, 0.01}), "cover parameters"},
          {"grid", ParamType::Int, 128, "probe grid points per axis on [-1,1]^2"}}},
        {"localization", "local mass inequality per case",
         {{"d", ParamType::Int, 1, "dimension"},
          {"q", ParamType::RealList, json::array({0.1, 0.05, 0.025}), "q values"},
          {"lambda", ParamType::RealList, json::array({0.25}), "interval fractions"},
          {"seeds", ParamType::IntList, json::array({0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19}),
           "seeds"},
          {"band", ParamType::Real, 1.0, "spectral band"},
          {"c_tilde", ParamType::Real, 1.0, "constant in the default kappa"},
          {"n", ParamType::Int, 4096, "grid points per axis"},
          {"dx", ParamType::Real, 0.0625, "grid spacing"}}},
        {"damping", "build and verify a damping function",
         {{"set", ParamType::Text, "", "1D grid set JSON"},
          {"m", ParamType::Text, "", "admissible cover JSON (2D product damping)"},
          {"c1", ParamType::Real, 0.2, "support half-width parameter"},
          {"iota", ParamType::Real, 1e-2, "small absolute constant"},
          {"delta1", ParamType::OptionalReal, nullptr, "regularity exponent; auto = box dimension"},
          {"CR", ParamType::OptionalReal, nullptr, "regularity constant; auto = measured"},
          {"leakage_tolerance", ParamType::Real, 1e-6, "support leakage tolerance"},
          {"export_csv", ParamType::Bool, true, "write spectral and physical samples"}}},
        {"fup-scan", "operator norm decay curve",
         {{"spec", ParamType::Text, "", "curve spec JSON; empty = 1D Cantor (3, {0,2})"},
          {"k", ParamType::IntList, json::array({1, 2, 3, 4, 5, 6}), "depths"},
          {"rotate", ParamType::Real, 0.0, "rotation of Y in degrees (2D)"},
          {"diffeo", ParamType::Text, "", "kind[:strength[:D0[:width]]]"}}},
        {"constants", "constant chain audit trail",
         {{"d", ParamType::Int, 2, "dimension"},
          {"delta", ParamType::Real, 1.0, "regularity of X"},
          {"delta1", ParamType::Real, 0.5, "regularity of Y"},
          {"CR", ParamType::Real, 1.0, "regularity constant"},
          {"eps0", ParamType::Real, 0.1, "frame separation"},
          {"iota", ParamType::Real, 1e-2, "small absolute constant"},
          {"m", ParamType::Int, 1, "number of covers"},
          {"q_star", ParamType::Real, 0.05, "localization threshold"},
          {"alpha", ParamType::OptionalReal, nullptr, "auto = (1 + delta1) / 2"},
          {"c1", ParamType::OptionalReal, nullptr, "auto = 1 / (2 L)"}}},
        {"distort-scan", "straight versus distorted operator norms",
         {{"dimension", ParamType::Int, 1, "1 or 2"},
          {"k", ParamType::IntList, json::array({1, 2, 3}), "depths"},
          {"diffeo", ParamType::Text, "shear:0.15:1.2", "kind[:strength[:D0[:width]]]"}}},
    };
}

std::string type_name(ParamType t) {
    switch (t) {
        case ParamType::Int: return "int";
        case ParamType::Real: return "real";
        case ParamType::OptionalReal: return "real or auto";
        case ParamType::Bool: return "bool";
        case ParamType::Text: return "text";
        case ParamType::IntList: return "int list";
        case ParamType::RealList: return "real list";
    }
    return "text";
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

long long parse_int(const std::string& name, const std::string& text) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(t, &pos);
    } catch (...) {
        pos = 0;
    }
    if (t.empty() || pos != t.size()) throw ConfigError(name + ": expected an integer, got '" + text + "'");
    return v;
}

double parse_real(const std::string& name, const std::string& text) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &pos);
    } catch (...) {
        pos = 0;
    }
    if (t.empty() || pos != t.size() || !std::isfinite(v))
        throw ConfigError(name + ": expected a finite number, got '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

// Checks a JSON value against a parameter type; numbers are normalized.
json check_value(const Param& p, const json& v) {
    auto fail = [&]() -> json { throw ConfigError(p.name + ": expected " + type_name(p.type)); };
    switch (p.type) {
        case ParamType::Int:
            if (v.is_number_integer()) return v;
            if (v.is_string()) return parse_int(p.name, v.get<std::string>());
            return fail();
        case ParamType::Real:
            if (v.is_number()) return v.get<double>();
            if (v.is_string()) return parse_real(p.name, v.get<std::string>());
            return fail();
        case ParamType::OptionalReal:
            if (v.is_null()) return v;
            if (v.is_number()) return v.get<double>();
            if (v.is_string()) return parse_value(p, v.get<std::string>());
            return fail();
        case ParamType::Bool:
            if (v.is_boolean()) return v;
            if (v.is_string()) return parse_value(p, v.get<std::string>());
            return fail();
        case ParamType::Text:
            if (v.is_string()) return v;
            return fail();
        case ParamType::IntList:
        case ParamType::RealList: {
            if (v.is_string()) return parse_value(p, v.get<std::string>());
            if (!v.is_array()) return fail();
            json out = json::array();
            for (const auto& e : v) {
                if (p.type == ParamType::IntList && !e.is_number_integer()) return fail();
                if (p.type == ParamType::RealList && !e.is_number()) return fail();
                out.push_back(p.type == ParamType::IntList ? json(e.get<long long>()) : json(e.get<double>()));
            }
            return out;
        }
    }
    return fail();
}

// ---------------------------------------------------------------- output

std::string num(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Csv {
    std::ostringstream out;
    explicit Csv(const std::vector<std::string>& header) { row_strings(header); }
    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << "\n";
    }
    std::string str() const { return out.str(); }
};

struct Result {
    std::vector<std::pair<std::string, std::string>> files;  // first entry is the main result
    json checks = json::object();
    bool pass() const {
        for (const auto& [k, v] : checks.items())
            if (!v.get<bool>()) return false;
        return true;
    }
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_file(const std::string& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) throw ConfigError(what + ": cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path, const std::string& what) {
    try {
        return json::parse(read_file(path, what));
    } catch (const json::exception& e) {
        throw ConfigError(what + ": invalid JSON in '" + path + "': " + e.what());
    }
}

void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError(what + ": unknown key '" + k + "'");
}

// ---------------------------------------------------------------- experiments

regular_sets::CantorSpec cantor_spec(const json& p) {
    regular_sets::CantorSpec cs;
    cs.dimension = p["dimension"].get<int>();
    cs.depth = p["depth"].get<int>();
    for (auto& ax : cs.axes) {
        ax.base = p["base"].get<int>();
        ax.alphabet = p["alphabet"].get<std::vector<int>>();
        ax.lo = p["lo"].get<double>();
        ax.hi = p["hi"].get<double>();
    }
    return cs;
}

Result run_cantor(const json& p) {
    const auto cs = cantor_spec(p);
    const auto set = regular_sets::build_cantor(cs);
    Result r;
    r.files.push_back({"gridset.json", regular_sets::to_json(set).dump(2) + "\n"});
    Csv csv(cs.dimension == 1 ? std::vector<std::string>{"lo", "hi"}
                              : std::vector<std::string>{"x_lo", "x_hi", "y_lo", "y_hi"});
    for (const auto& c : set.cubes) {
        std::vector<std::string> row;
        for (int a = 0; a < cs.dimension; ++a) {
            const double lo = set.origin[a] + static_cast<double>(c[a]) * set.resolution;
            row.push_back(num(lo));
            row.push_back(num(lo + set.resolution));
        }
        csv.row_strings(row);
    }
    r.files.push_back({"cubes.csv", csv.str()});
    return r;
}

Result run_regularity(const json& p) {
    const auto cs = cantor_spec(p);
    const auto set = regular_sets::build_cantor(cs);
    const auto mu = regular_sets::natural_measure(cs);
    const double delta = p["delta"].is_null() ? regular_sets::default_delta(cs) : p["delta"].get<double>();
    const double a0 = p["alpha0"].is_null() ? set.resolution : p["alpha0"].get<double>();
    const auto rep = regular_sets::check_regularity(set, mu, delta, a0, p["alpha1"].get<double>(),
                                                    p["sample_budget"].get<std::size_t>(), p["CR"].get<double>());
    Result r;
    r.files.push_back({"regularity.json", regular_sets::to_json(rep).dump(2) + "\n"});
    r.checks["regular"] = rep.pass;
    return r;
}

Result run_porosity(const json& p) {
    const auto cs = cantor_spec(p);
    const auto set = regular_sets::build_cantor(cs);
    const int L = p["L"].get<int>();
    auto depths = p["depths"].get<std::vector<int>>();
    if (depths.empty()) {
        for (int n = 0; std::pow(static_cast<double>(L), n + 1) * set.resolution <= 1.0 + 1e-12; ++n) depths.push_back(n);
        if (depths.empty()) throw ConfigError("porosity: set too coarse for any depth at this L");
    }
    const auto rep = regular_sets::check_porosity(set, L, depths);
    Result r;
    r.files.push_back({"porosity.json", regular_sets::to_json(rep).dump(2) + "\n"});
    r.checks["porous"] = rep.porous();
    return r;
}

Result run_conformal(const json& p) {
    auto qs = p["q"].get<std::vector<double>>();
    if (qs.empty()) throw ConfigError("conformal-check: q list is empty");
    Csv csv({"q", "k", "L_k", "H_k", "theta_num", "theta_asym", "delta1_num", "delta1_asym", "delta2_num",
             "delta2_asym", "rel_dev_theta", "rel_dev_delta1", "rel_dev_delta2"});
    std::vector<conformal::AsymptoticsReport> reps;
    bool within = true;
    for (double q : qs) {
        const auto a = conformal::asymptotics_report(q);
        reps.push_back(a);
        csv.row_strings({num(a.q), num(a.k), num(a.L_k), num(a.H_k), num(a.theta_num), num(a.theta_asym),
                         num(a.delta1_num), num(a.delta1_asym), num(a.delta2_num), num(a.delta2_asym),
                         num(a.rel_dev_theta), num(a.rel_dev_delta1), num(a.rel_dev_delta2)});
        within = within && a.rel_dev_theta <= 3 * q && a.rel_dev_delta1 <= 3 * q && a.rel_dev_delta2 <= 3 * q;
    }
    std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.q > b.q; });
    bool decreasing = true;
    for (std::size_t i = 1; i < reps.size(); ++i)
        decreasing = decreasing && reps[i].rel_dev_theta < reps[i - 1].rel_dev_theta &&
                     reps[i].rel_dev_delta1 < reps[i - 1].rel_dev_delta1 &&
                     reps[i].rel_dev_delta2 < reps[i - 1].rel_dev_delta2;
    Result r;
    r.files.push_back({"conformal.csv", csv.str()});
    r.checks["relative_deviation_within_3q"] = within;
    r.checks["deviation_decreases_with_q"] = decreasing;
    return r;
}

Result run_cartan(const json& p, std::uint64_t seed) {
    const auto pm = potential::seeded_masses(seed);
    json masses = json::array();
    for (std::size_t i = 0; i < pm.points.size(); ++i)
        masses.push_back({{"re", pm.points[i].real()}, {"im", pm.points[i].imag()}, {"weight", pm.weights[i]}});
    json runs = json::array();
    bool no_violation = true, radii_ok = true;
    for (double H : p["H"].get<std::vector<double>>()) {
        const auto cover = potential::cartan_disks(pm, H);
        const auto probe = potential::probe_cartan_cover(pm, cover, p["grid"].get<int>());
        runs.push_back({{"H", H},
                        {"cover", potential::to_json(cover)},
                        {"radius_sum", cover.radius_sum()},
                        {"radius_bound", 5.0 * H},
                        {"probe", potential::to_json(probe)}});
        no_violation = no_violation && probe.violations == 0;
        radii_ok = radii_ok && cover.radius_sum() <= 5.0 * H;
    }
    Result r;
    r.files.push_back({"cartan.json", json{{"seed", seed}, {"total_mass", pm.total()}, {"masses", masses}, {"runs", runs}}
                                          .dump(2) + "\n"});
    r.checks["no_probe_below_floor"] = no_violation;
    r.checks["radius_sum_within_5H"] = radii_ok;
    return r;
}

Result run_localization(const json& p, int threads) {
    const int d = p["d"].get<int>();
    const localization::Grid grid{p["n"].get<int>(), p["dx"].get<double>()};
    const auto qs = p["q"].get<std::vector<double>>();
    const auto lambdas = p["lambda"].get<std::vector<double>>();
    const auto seeds = p["seeds"].get<std::vector<long long>>();
    if (qs.empty() || lambdas.empty() || seeds.empty()) throw ConfigError("localization: empty case list");
    const std::size_t nq = qs.size(), nl = lambdas.size(), ns = seeds.size();
    std::vector<localization::LocalizationReport> reps(nq * nl * ns);
    parallel_for(ns, threads, [&](std::size_t s) {
        const auto seed = static_cast<std::uint64_t>(seeds[s]);
        const auto f = localization::band_limited_sample(seed, p["band"].get<double>(), d, grid);
        for (std::size_t l = 0; l < nl; ++l) {
            localization::IntervalFamily fam;
            fam.dimension = d;
            fam.lambda = lambdas[l];
            fam.random = true;
            fam.seed = seed;
            for (std::size_t i = 0; i < nq; ++i) {
                const double kappa = localization::default_kappa(qs[i], lambdas[l], d, p["c_tilde"].get<double>());
                reps[(i * nl + l) * ns + s] = localization::localization_check(f, fam, qs[i], kappa);
            }
        }
    });
    Csv csv({"q", "lambda", "seed", "kappa", "lhs", "sum_local", "empirical_constant", "finite"});
    bool finite = true;
    for (std::size_t i = 0; i < nq; ++i)
        for (std::size_t l = 0; l < nl; ++l)
            for (std::size_t s = 0; s < ns; ++s) {
                const auto& r = reps[(i * nl + l) * ns + s];
                csv.row_strings({num(qs[i]), num(lambdas[l]), std::to_string(seeds[s]), num(r.kappa_used), num(r.lhs),
                                 num(r.sum_local), num(r.empirical_constant), r.finite ? "true" : "false"});
                finite = finite && r.finite;
            }
    Result r;
    r.files.push_back({"localization.csv", csv.str()});
    r.checks["constants_finite"] = finite;
    return r;
}

damping::AdmissibleSpec admissible_from_json(const json& j) {
    require_keys(j, {"covers", "delta1", "eps0"}, "cover file");
    damping::AdmissibleSpec spec;
    if (j.contains("delta1")) spec.delta1 = j["delta1"].get<double>();
    if (j.contains("eps0")) spec.eps0 = j["eps0"].get<double>();
    if (!j.contains("covers") || !j["covers"].is_array() || j["covers"].empty())
        throw ConfigError("cover file: 'covers' must be a nonempty array");
    for (const auto& c : j["covers"]) {
        require_keys(c, {"axes", "sets"}, "cover");
        damping::AdmissibleCover cover;
        cover.axes = c.at("axes").get<std::array<std::array<double, 2>, 2>>();
        const auto& sets = c.at("sets");
        if (!sets.is_array() || sets.size() != 2) throw ConfigError("cover: 'sets' must hold two grid sets");
        cover.sets = {regular_sets::gridset_from_json(sets[0]), regular_sets::gridset_from_json(sets[1])};
        spec.covers.push_back(cover);
    }
    return spec;
}

Result run_damping(const json& p, int threads) {
    const std::string set_path = p["set"].get<std::string>(), cover_path = p["m"].get<std::string>();
    if (set_path.empty() == cover_path.empty()) throw ConfigError("damping: give exactly one of set or m");
    damping::MultiplierOptions mo;
    mo.leakage_tolerance = p["leakage_tolerance"].get<double>();
    damping::DampingFunction psi;
    damping::DampingReport rep;
    if (!set_path.empty()) {
        const auto Y = regular_sets::gridset_from_json(read_json(set_path, "set"));
        if (Y.dimension != 1) throw ConfigError("damping: set must be one-dimensional; use m for 2D covers");
        damping::RegularDampingOptions opt;
        opt.iota = p["iota"].get<double>();
        if (!p["delta1"].is_null()) opt.delta1 = p["delta1"].get<double>();
        if (!p["CR"].is_null()) opt.C_R = p["CR"].get<double>();
        opt.multiplier = mo;
        psi = damping::build_regular_damping(Y, p["c1"].get<double>(), opt);
        auto bp = damping::bullet_params(psi);
        bp.leakage_tolerance = mo.leakage_tolerance;
        bp.threads = threads;
        rep = damping::verify_damping(psi, Y, bp);
    } else {
        const auto spec = admissible_from_json(read_json(cover_path, "m"));
        damping::ProductOptions opt;
        opt.iota = p["iota"].get<double>();
        if (!p["CR"].is_null()) opt.C_R = p["CR"].get<double>();
        opt.multiplier = mo;
        psi = damping::product_damping(spec, p["c1"].get<double>(), opt);
        auto bp = damping::bullet_params(psi);
        bp.leakage_tolerance = mo.leakage_tolerance;
        bp.threads = threads;
        rep = damping::verify_damping(psi, damping::admissible_points(spec), bp);
    }
    const json out{{"dimension", psi.dimension},
                   {"c1", psi.c1},
                   {"c2", psi.c2},
                   {"c3", psi.c3},
                   {"alpha", psi.alpha},
                   {"C_R", psi.C_R},
                   {"delta1", psi.delta1},
                   {"support", {psi.support_lo, psi.support_hi}},
                   {"n", psi.n},
                   {"spectral_spacing", psi.spectral_spacing},
                   {"physical_spacing", psi.physical_spacing()},
                   {"multiplier", damping::to_json(psi.multiplier)},
                   {"report", damping::to_json(rep)}};
    Result r;
    r.files.push_back({"psi.json", out.dump(2) + "\n"});
    if (p["export_csv"].get<bool>()) {
        // 1D: full arrays; 2D: the slice along the first axis through the origin
        const int n = psi.n;
        auto at = [&](const std::vector<cplx>& a, int i) {
            return psi.dimension == 1 ? a[static_cast<std::size_t>(i)]
                                      : a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                                          static_cast<std::size_t>(n / 2)];
        };
        Csv spec({"xi", "re", "im"}), phys({"x", "re", "im"});
        for (int i = 0; i < n; ++i) {
            const cplx s = at(psi.spectral, i);
            spec.row_strings({num(psi.spectral_abscissa(i)), num(s.real()), num(s.imag())});
            if (!psi.physical.empty()) {
                const cplx v = at(psi.physical, i);
                phys.row_strings({num(psi.physical_abscissa(i)), num(v.real()), num(v.imag())});
            }
        }
        r.files.push_back({"psi_spectral.csv", spec.str()});
        if (!psi.physical.empty()) r.files.push_back({"psi_physical.csv", phys.str()});
    }
    r.checks["support"] = rep.bullets[0];
    r.checks["lower_bound"] = rep.bullets[1];
    r.checks["global_decay"] = rep.bullets[2];
    r.checks["decay_on_Y"] = rep.bullets[3];
    return r;
}

fup::CurveSpec curve_spec_from(const std::string& path, int threads, std::uint64_t seed) {
    fup::CurveSpec spec;
    spec.threads = threads;
    spec.power.seed = seed;
    if (path.empty()) return spec;
    const json j = read_json(path, "spec");
    require_keys(j, {"dimension", "base", "alphabet", "oversampling", "period", "eps0", "cross_check",
                     "power_tolerance", "max_iterations", "dense_cap"},
                 "curve spec");
    try {
        if (j.contains("dimension")) spec.dimension = j["dimension"].get<int>();
        if (j.contains("base")) spec.base = j["base"].get<int>();
        if (j.contains("alphabet")) spec.alphabet = j["alphabet"].get<std::vector<int>>();
        if (j.contains("oversampling")) spec.grid.oversampling = j["oversampling"].get<int>();
        if (j.contains("period")) spec.grid.period = j["period"].get<int>();
        if (j.contains("eps0")) spec.eps0 = j["eps0"].get<double>();
        if (j.contains("cross_check")) spec.cross_check = j["cross_check"].get<bool>();
        if (j.contains("power_tolerance")) spec.power.tolerance = j["power_tolerance"].get<double>();
        if (j.contains("max_iterations")) spec.power.max_iterations = j["max_iterations"].get<int>();
        if (j.contains("dense_cap")) spec.dense_cap = j["dense_cap"].get<std::size_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("curve spec: ") + e.what());
    }
    return spec;
}

json curve_spec_json(const fup::CurveSpec& s) {
    return {{"dimension", s.dimension},
            {"base", s.base},
            {"alphabet", s.alphabet},
            {"rotation_deg", s.rotation_deg},
            {"oversampling", s.grid.oversampling},
            {"period", s.grid.period},
            {"eps0", s.eps0},
            {"cross_check", s.cross_check},
            {"power_tolerance", s.power.tolerance},
            {"max_iterations", s.power.max_iterations},
            {"power_seed", s.power.seed},
            {"dense_cap", s.dense_cap}};
}

fup::DiffeoSpec diffeo_from_string(const std::string& text, int dimension) {
    const auto parts = split(text, ':');
    if (parts.empty() || parts.size() > 4) throw ConfigError("diffeo: expected kind[:strength[:D0[:width]]]");
    fup::DiffeoSpec d;
    d.dimension = dimension;
    d.kind = fup::diffeo_kind_from_string(parts[0]);
    if (parts.size() > 1) d.strength = parse_real("diffeo strength", parts[1]);
    if (parts.size() > 2) d.D0 = parse_real("diffeo D0", parts[2]);
    if (parts.size() > 3) d.width = parse_real("diffeo width", parts[3]);
    return d;
}

struct DistortRow {
    int k = 0;
    double N = 0.0;
    int period = 0;
    double straight = 0.0, distorted = 0.0;
    fup::DistortedNorm info;
};

std::vector<DistortRow> distortion_rows(const fup::CurveSpec& spec, const fup::DiffeoSpec& diffeo,
                                        const std::vector<int>& ks) {
    std::vector<DistortRow> rows(ks.size());
    parallel_for(ks.size(), spec.threads, [&](std::size_t i) {
        auto inst = fup::curve_instance(spec, ks[i]);
        inst.grid.period = std::max(inst.grid.period, fup::resolving_period(inst, diffeo));
        DistortRow row;
        row.k = ks[i];
        row.N = inst.N;
        row.period = inst.grid.period;
        row.straight = fup::operator_norm(fup::assemble_operator(inst), fup::NormMethod::Svd).norm;
        inst.distortion = diffeo;
        row.info = fup::distorted_fup_norm(inst);
        row.distorted = row.info.norm;
        rows[i] = row;
    });
    return rows;
}

Result run_fup_scan(const json& p, int threads, std::uint64_t seed) {
    auto spec = curve_spec_from(p["spec"].get<std::string>(), threads, seed);
    spec.rotation_deg = p["rotate"].get<double>();
    if (spec.rotation_deg != 0.0 && spec.dimension != 2) throw ConfigError("fup-scan: rotate needs dimension 2");
    const auto ks = p["k"].get<std::vector<int>>();
    Csv csv({"k", "N", "dim", "norm", "method", "residual"});
    Result r;
    json diag{{"curve_spec", curve_spec_json(spec)}};
    const std::string diffeo_text = p["diffeo"].get<std::string>();
    if (diffeo_text.empty()) {
        const auto curve = fup::fup_decay_curve(spec, ks);
        bool converged = true;
        for (const auto& row : curve.rows) {
            csv.row_strings({std::to_string(row.k), num(row.N), std::to_string(row.dim()), num(row.norm),
                             fup::to_string(row.method), num(row.residual)});
            converged = converged && row.converged;
        }
        diag["beta_hat"] = curve.fit.beta;
        diag["curve"] = fup::to_json(curve);
        r.checks["norms_in_range"] = curve.norms_in_range;
        r.checks["power_iteration_converged"] = converged;
        r.checks["methods_agree_1e-7"] = curve.max_agreement <= 1e-7;
    } else {
        if (ks.size() < 3) throw ConfigError("fup-scan: at least 3 depths are needed for the fit");
        const auto diffeo = diffeo_from_string(diffeo_text, spec.dimension);
        const auto rows = distortion_rows(spec, diffeo, ks);
        std::vector<double> Ns, norms;
        json jr = json::array();
        bool in_range = true;
        for (const auto& row : rows) {
            csv.row_strings({std::to_string(row.k), num(row.N), std::to_string(std::max(row.info.rows, row.info.cols)),
                             num(row.distorted), "distorted-svd", num(0.0)});
            Ns.push_back(row.N);
            norms.push_back(row.distorted);
            in_range = in_range && row.distorted > 0.0 && row.distorted <= 1.0 + 1e-12;
            jr.push_back({{"k", row.k}, {"period", row.period}, {"straight_norm", row.straight},
                          {"distorted", fup::to_json(row.info)}});
        }
        const auto fit = fup::fit_beta(ks, Ns, norms);
        diag["beta_hat"] = fit.beta;
        diag["fit"] = fup::to_json(fit);
        diag["diffeo"] = diffeo_text;
        diag["rows"] = jr;
        r.checks["norms_in_range"] = in_range;
    }
    r.files.push_back({"curve.csv", csv.str()});
    r.files.push_back({"beta.json", diag.dump(2) + "\n"});
    return r;
}

Result run_distort_scan(const json& p, int threads, std::uint64_t seed) {
    fup::CurveSpec spec;
    spec.dimension = p["dimension"].get<int>();
    spec.threads = threads;
    spec.power.seed = seed;
    const auto diffeo = diffeo_from_string(p["diffeo"].get<std::string>(), spec.dimension);
    const auto ks = p["k"].get<std::vector<int>>();
    if (ks.empty()) throw ConfigError("distort-scan: k list is empty");
    const auto rows = distortion_rows(spec, diffeo, ks);
    Csv csv({"k", "N", "period", "straight_norm", "distorted_norm", "ratio", "phase_step"});
    bool in_range = true;
    for (const auto& row : rows) {
        csv.row_strings({std::to_string(row.k), num(row.N), std::to_string(row.period), num(row.straight),
                         num(row.distorted), num(row.straight > 0.0 ? row.distorted / row.straight : 0.0),
                         num(row.info.phase_step)});
        in_range = in_range && row.distorted <= 1.0 + 1e-12;
    }
    Result r;
    r.files.push_back({"distort.csv", csv.str()});
    r.files.push_back({"diffeo.json", fup::to_json(rows.front().info.diffeo).dump(2) + "\n"});
    r.checks["norms_at_most_one"] = in_range;
    return r;
}

Result run_constants(const json& p, const std::string& precision) {
    constants::ChainInputs in;
    in.d = p["d"].get<int>();
    in.delta = p["delta"].get<double>();
    in.delta1 = p["delta1"].get<double>();
    in.C_R = p["CR"].get<double>();
    in.eps0 = p["eps0"].get<double>();
    in.iota = p["iota"].get<double>();
    in.m = p["m"].get<int>();
    in.q_star = p["q_star"].get<double>();
    if (!p["alpha"].is_null()) in.alpha = p["alpha"].get<double>();
    if (!p["c1"].is_null()) in.c1 = p["c1"].get<double>();
    const auto chain =
        constants::beta_chain(in, precision == "quad" ? constants::Precision::Quad : constants::Precision::Double);
    Result r;
    r.files.push_back({"constants.json", constants::to_json(chain).dump(2) + "\n"});
    r.checks["chain_dominates_headline"] = chain.chain_dominates_headline;
    return r;
}

Result dispatch(const std::string& kind, const json& p, const RunRequest& req) {
    if (kind == "cantor") return run_cantor(p);
    if (kind == "regularity") return run_regularity(p);
    if (kind == "porosity") return run_porosity(p);
    if (kind == "conformal-check") return run_conformal(p);
    if (kind == "cartan-check") return run_cartan(p, req.seed);
    if (kind == "localization") return run_localization(p, req.threads);
    if (kind == "damping") return run_damping(p, req.threads);
    if (kind == "fup-scan") return run_fup_scan(p, req.threads, req.seed);
    if (kind == "distort-scan") return run_distort_scan(p, req.threads, req.seed);
    if (kind == "constants") return run_constants(p, req.precision);
    throw ConfigError("unknown experiment kind: " + kind);
}

}  // namespace

const std::vector<Experiment>& experiments() {
    static const std::vector<Experiment> all = build_experiments();
    return all;
}

const Experiment& find_experiment(const std::string& kind) {
    for (const auto& e : experiments())
        if (e.kind == kind) return e;
    throw ConfigError("unknown experiment kind: " + kind);
}

json parse_value(const Param& p, const std::string& text) {
    const std::string t = trim(text);
    switch (p.type) {
        case ParamType::Int: return parse_int(p.name, t);
        case ParamType::Real: return parse_real(p.name, t);
        case ParamType::OptionalReal:
            if (t == "auto") return nullptr;
            return parse_real(p.name, t);
        case ParamType::Bool:
            if (t == "true" || t == "1" || t == "yes") return true;
            if (t == "false" || t == "0" || t == "no") return false;
            throw ConfigError(p.name + ": expected true or false, got '" + text + "'");
        case ParamType::Text: return t;
        case ParamType::IntList: {
            json out = json::array();
            if (t.empty()) return out;
            for (const auto& item : split(t, ',')) {
                const auto dots = item.find("..");
                if (dots != std::string::npos) {
                    const long long a = parse_int(p.name, item.substr(0, dots));
                    const long long b = parse_int(p.name, item.substr(dots + 2));
                    if (b < a) throw ConfigError(p.name + ": empty range '" + item + "'");
                    if (b - a > 1000000) throw ConfigError(p.name + ": range too long");
                    for (long long v = a; v <= b; ++v) out.push_back(v);
                } else {
                    out.push_back(parse_int(p.name, item));
                }
            }
            return out;
        }
        case ParamType::RealList: {
            json out = json::array();
            if (t.empty()) return out;
            for (const auto& item : split(t, ',')) out.push_back(parse_real(p.name, item));
            return out;
        }
    }
    throw ConfigError(p.name + ": unsupported type");
}

json resolve_params(const Experiment& e, const json& given) {
    if (!given.is_object()) throw ConfigError(e.kind + ": parameters must be key/value pairs");
    for (const auto& [k, v] : given.items()) {
        const bool known = std::any_of(e.params.begin(), e.params.end(), [&](const Param& p) { return p.name == k; });
        if (!known) throw ConfigError(e.kind + ": unknown key '" + k + "'");
    }
    json out = json::object();
    for (const auto& p : e.params) out[p.name] = given.contains(p.name) ? check_value(p, given[p.name]) : p.default_value;
    return out;
}

RunRequest parse_config_file(const std::string& path) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    RunRequest req;
    req.source = path;
    const auto exp = tree.get_child_optional("experiment");
    if (!exp) throw ConfigError("config: missing [experiment] section");
    for (const auto& [key, node] : tree) {
        if (node.empty() && !node.data().empty()) throw ConfigError("config: key '" + key + "' outside any section");
    }
    const std::set<std::string> exp_keys{"kind", "out", "seed", "threads", "precision"};
    for (const auto& [key, node] : *exp) {
        if (!exp_keys.count(key)) throw ConfigError("config: unknown key '" + key + "' in [experiment]");
    }
    const auto kind = exp->get_optional<std::string>("kind");
    if (!kind) throw ConfigError("config: [experiment] needs a kind");
    req.kind = trim(*kind);
    const Experiment& e = find_experiment(req.kind);
    if (auto v = exp->get_optional<std::string>("out")) req.out = trim(*v);
    if (auto v = exp->get_optional<std::string>("seed")) req.seed = static_cast<std::uint64_t>(parse_int("seed", *v));
    if (auto v = exp->get_optional<std::string>("threads")) req.threads = static_cast<int>(parse_int("threads", *v));
    if (auto v = exp->get_optional<std::string>("precision")) req.precision = trim(*v);
    for (const auto& [section, node] : tree) {
        if (section == "experiment") continue;
        if (section != req.kind) throw ConfigError("config: unexpected section [" + section + "]");
        for (const auto& [key, value] : node) {
            const auto it = std::find_if(e.params.begin(), e.params.end(), [&](const Param& p) { return p.name == key; });
            if (it == e.params.end()) throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            req.params[key] = parse_value(*it, value.data());
        }
    }
    return req;
}

json schema() {
    json out = json::array();
    for (const auto& e : experiments()) {
        json params = json::array();
        for (const auto& p : e.params)
            params.push_back({{"name", p.name}, {"type", type_name(p.type)}, {"default", p.default_value}, {"help", p.help}});
        out.push_back({{"kind", e.kind}, {"summary", e.summary}, {"params", params}});
    }
    return out;
}

int run(const RunRequest& req, std::ostream& log) {
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    json params;
    fs::path dir;
    std::string main_name;
    try {
        const Experiment& e = find_experiment(req.kind);
        params = resolve_params(e, req.params);
        if (req.threads < 1) throw ConfigError("threads must be at least 1");
        if (req.precision != "double" && req.precision != "quad") throw ConfigError("precision must be double or quad");
        if (req.out.empty()) {
            const char* root = std::getenv(kOutputRootEnv);
            dir = fs::path(root && *root ? root : "fuplab-out") / req.kind;
        } else {
            const fs::path out(req.out);
            const auto ext = out.extension().string();
            if (ext == ".json" || ext == ".csv") {
                dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
                main_name = out.filename().string();
            } else {
                dir = out;
            }
        }
    } catch (const ConfigError& err) {
        log << "configuration error: " << err.what() << "\n";
        return 2;
    }

    Result result;
    try {
        result = dispatch(req.kind, params, req);
    } catch (const ConfigError& err) {
        log << "configuration error: " << err.what() << "\n";
        return 2;
    } catch (const ContractViolation& err) {
        log << "numerical contract violation: " << err.what() << "\n";
        return 3;
    }
    if (!main_name.empty() && !result.files.empty()) result.files.front().first = main_name;

    const int code = result.pass() ? 0 : 1;
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json outputs = json::array();
    for (const auto& f : result.files) outputs.push_back(f.first);
    const json manifest{{"tool", "fuplab_cli"},
                        {"kind", req.kind},
                        {"config_source", req.source},
                        {"params", params},
                        {"seed", req.seed},
                        {"threads", req.threads},
                        {"precision", req.precision},
                        {"outputs", outputs},
                        {"checks", result.checks},
                        {"status", code == 0 ? "pass" : "fail"},
                        {"exit_code", code},
                        {"started_utc", started},
                        {"finished_utc", utc_now()},
                        {"duration_seconds", seconds}};
    try {
        fs::create_directories(dir);
        for (const auto& [name, content] : result.files) {
            std::ofstream f(dir / name, std::ios::binary);
            f << content;
            if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        }
        std::ofstream m(dir / "manifest.json", std::ios::binary);
        m << manifest.dump(2) << "\n";
        if (!m) throw std::runtime_error("cannot write manifest");
    } catch (const std::exception& err) {
        log << "output error: " << err.what() << "\n";
        return 2;
    }
    if (req.echo && !result.files.empty()) std::cout << result.files.front().second;
    for (const auto& [k, v] : result.checks.items()) log << (v.get<bool>() ? "PASS " : "FAIL ") << k << "\n";
    log << "wrote " << result.files.size() + 1 << " files to " << dir.string() << "\n";
    return code;
}

}  // namespace fuplab::cli
