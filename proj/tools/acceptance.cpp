#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fuplab/conformal.hpp"
#include "fuplab/constants.hpp"
#include "fuplab/damping.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/fup_operator.hpp"
#include "fuplab/localization.hpp"
#include "fuplab/potential_theory.hpp"
#include "fuplab/regular_sets.hpp"

using namespace fuplab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

regular_sets::CantorSpec cantor_spec(int dim, int depth, double lo, double hi, std::vector<int> alphabet = {0, 2}) {
    regular_sets::CantorSpec cs;
    cs.dimension = dim;
    cs.depth = depth;
    for (auto& ax : cs.axes) {
        ax.base = 3;
        ax.alphabet = alphabet;
        ax.lo = lo;
        ax.hi = hi;
    }
    return cs;
}

Outcome conformal_asymptotics() {
    std::vector<conformal::AsymptoticsReport> reps;
    for (double q : {0.3, 0.2, 0.1}) reps.push_back(conformal::asymptotics_report(q));
    bool pass = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& a = reps[i];
        const double dev = std::max({a.rel_dev_theta, a.rel_dev_delta1, a.rel_dev_delta2});
        pass = pass && dev <= 3.0 * a.q;
        if (i > 0) {
            const auto& b = reps[i - 1];
            pass = pass && a.rel_dev_theta < b.rel_dev_theta && a.rel_dev_delta1 < b.rel_dev_delta1 &&
                   a.rel_dev_delta2 < b.rel_dev_delta2;
        }
        d << "q=" << a.q << " max_dev=" << fmt("%.3e", dev) << " ";
    }
    return {pass, d.str() + "(bound 3q, decreasing in q)"};
}

Outcome hilbert_log_derivative() {
    const damping::SymmetricGrid g{std::ldexp(1.0, -10), 1024 * 1024};
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::log1p(g.at(i) * g.at(i));
    const auto out = damping::hilbert_modified(f, g.spacing);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double x = g.at(i);
        if (std::abs(x) > 10.0) continue;
        const double deriv = (out[i + 1] - out[i - 1]) / (2.0 * g.spacing);
        worst = std::max(worst, std::abs(deriv + 2.0 / (x * x + 1.0)));
    }
    return {worst <= 1e-3, "max |d/dx H - (-2/(1+x^2))| on [-10,10] = " + fmt("%.3e", worst) + " (bound 1e-3)"};
}

Outcome multiplier_family() {
    bool pass = true;
    std::ostringstream d;
    for (double sigma : {0.02, 0.05}) {
        const double h = damping::default_spacing(sigma);
        const damping::SymmetricGrid g{h, static_cast<std::int64_t>(damping::default_extent(sigma) / h)};
        const auto w = damping::subexponential_weight(0.01, g);
        const auto psi = damping::build_multiplier(w, sigma);
        const double at_zero = std::abs(psi.spectral[static_cast<std::size_t>(psi.n / 2)]);
        const double floor = std::pow(sigma, 10) / 4e11 * w.omega_at_zero();
        pass = pass && psi.multiplier.leakage <= 1e-6 && at_zero >= floor;
        d << "sigma=" << sigma << " leakage=" << fmt("%.2e", psi.multiplier.leakage)
          << " |psihat(0)|/floor=" << fmt("%.3g", at_zero / floor) << " ";
    }
    return {pass, d.str()};
}

Outcome cantor_damping() {
    const double N = std::pow(3.0, 6);
    const auto Y = regular_sets::build_cantor(cantor_spec(1, 6, -N, N));
    damping::RegularDampingOptions opt;
    opt.iota = 1e-2;
    const auto psi = damping::build_regular_damping(Y, 0.2, opt);
    const auto rep = damping::verify_damping(psi, Y, damping::bullet_params(psi));
    std::ostringstream d;
    d << "bullets=" << rep.bullets[0] << rep.bullets[1] << rep.bullets[2] << rep.bullets[3]
      << " leakage=" << fmt("%.2e", rep.support_leakage) << " Y points=" << rep.y_points
      << " decay margin on Y=" << fmt("%.3e", rep.Y_decay_margin);
    return {rep.pass, d.str()};
}

Outcome cartan_lower_bound() {
    bool pass = true;
    std::size_t violations = 0, probes = 0;
    double worst_ratio = 0.0;
    for (unsigned long long seed = 100; seed < 150; ++seed) {
        const auto pm = potential::seeded_masses(seed);
        for (double H : {0.1, 0.01}) {
            const auto cover = potential::cartan_disks(pm, H);
            const auto rep = potential::probe_cartan_cover(pm, cover, 128);
            violations += rep.violations;
            probes += rep.probes;
            worst_ratio = std::max(worst_ratio, cover.radius_sum() / H);
            pass = pass && rep.violations == 0 && cover.radius_sum() <= 5.0 * H;
        }
    }
    return {pass, "100 configurations, " + std::to_string(probes) + " probes, violations=" + std::to_string(violations) +
                      ", max radius sum / H=" + fmt("%.3f", worst_ratio) + " (bound 5)"};
}

Outcome riesz_bounds() {
    int used = 0;
    bool pass = true;
    for (unsigned long long seed = 0; used < 20; ++seed) {
        const auto F = potential::seeded_polynomial(seed);
        bool on_circle = false;
        for (const auto& a : F.zeros) on_circle |= std::fabs(std::abs(a) - 1.0) < 1e-3;
        if (on_circle) continue;
        ++used;
        for (auto [rho, r, r1] : {std::tuple{0.5, 0.8, 0.65}, std::tuple{0.3, 0.9, 0.6}})
            pass = pass && potential::verify_riesz_bounds(F, rho, r, r1).pass();
    }
    return {pass, "20 polynomials x 2 radius triples: mass, deviation and lower constant bounds"};
}

Outcome cartan2_trace() {
    bool pass = true;
    double worst = 0.0;
    for (unsigned long long seed = 200; seed < 205; ++seed) {
        const auto F = potential::seeded_polynomial2(seed, 2, 3);
        for (double H : {0.05, 0.005}) {
            const auto set = potential::build_cartan2(F, H, 0.5, 0.8);
            const double trace = potential::trace_measure(set.sample_real_slices(128));
            worst = std::max(worst, trace / H);
            pass = pass && trace <= 40.0 * H;
        }
    }
    return {pass, "max trace / H=" + fmt("%.3f", worst) + " (bound 40)"};
}

Outcome fup_decay() {
    fup::CurveSpec one;
    const auto c1 = fup::fup_decay_curve(one, {1, 2, 3, 4, 5, 6});
    bool below = true, agree = true;
    for (const auto& row : c1.rows) {
        if (row.k >= 2) below = below && row.norm < 1.0;
        agree = agree && row.agreement.has_value() && *row.agreement <= 1e-7;
    }
    fup::CurveSpec two;
    two.dimension = 2;
    two.rotation_deg = 30.0;
    const auto c2 = fup::fup_decay_curve(two, {1, 2, 3, 4});
    for (const auto& row : c2.rows) agree = agree && (!row.agreement || *row.agreement <= 1e-7);
    const bool pass = below && c1.monotone && c1.fit.beta > 0.05 && c2.fit.beta > 0.0 && agree;
    std::ostringstream d;
    d << "1D beta=" << fmt("%.4f", c1.fit.beta) << " monotone=" << c1.monotone << " norms<1=" << below
      << "; 2D rotated beta=" << fmt("%.4f", c2.fit.beta) << "; methods agree within 1e-7=" << agree;
    return {pass, d.str()};
}

Outcome distortion() {
    auto instance = [](int k) {
        fup::FupInstance inst;
        inst.N = std::pow(3.0, k);
        inst.X = regular_sets::build_cantor(cantor_spec(1, k, 0.0, 1.0));
        inst.Y = regular_sets::build_cantor(cantor_spec(1, k, 0.0, inst.N));
        return inst;
    };
    auto inst = instance(3);
    const fup::DiffeoSpec id;
    inst.grid.period = fup::resolving_period(inst, id);
    const double straight_id = fup::operator_norm(fup::assemble_operator(inst), fup::NormMethod::Svd).norm;
    inst.distortion = id;
    const double dist_id = fup::distorted_fup_norm(inst).norm;

    auto sh = instance(3);
    const fup::DiffeoSpec shear{1, fup::DiffeoKind::Shear, 0.15, 1.0, 1.2};
    sh.grid.period = fup::resolving_period(sh, shear);
    const double straight = fup::operator_norm(fup::assemble_operator(sh), fup::NormMethod::Svd).norm;
    sh.distortion = shear;
    const auto dn = fup::distorted_fup_norm(sh);
    const double ratio = dn.norm / straight;
    const bool pass = std::abs(dist_id - straight_id) <= 1e-6 && dn.diffeo.pass && ratio >= 0.5 && ratio <= 2.0;
    return {pass, "identity |diff|=" + fmt("%.2e", std::abs(dist_id - straight_id)) + " (bound 1e-6); shear D0 bound " +
                      fmt("%.3f", dn.diffeo.bound) + " <= 1.2, distorted/straight=" + fmt("%.4f", ratio)};
}

Outcome constants_chain() {
    constants::ChainInputs in;
    in.d = 2;
    in.delta = 1.0;
    in.delta1 = 0.5;
    in.C_R = 1.0;
    in.iota = 1e-2;
    const auto a = constants::beta_chain(in, constants::Precision::Double);
    const auto b = constants::beta_chain(in, constants::Precision::Quad);
    double worst = 0.0;
    bool same_shape = a.trail.size() == b.trail.size();
    auto rel = [](double x, double y) {
        if (std::isinf(x) || std::isinf(y)) return x == y ? 0.0 : INFINITY;
        return std::fabs(x - y) / std::max({std::fabs(x), std::fabs(y), 1e-300});
    };
    for (std::size_t i = 0; same_shape && i < a.trail.size(); ++i) {
        worst = std::max(worst, rel(a.trail[i].log_abs, b.trail[i].log_abs));
        if (a.trail[i].has_loglog) worst = std::max(worst, rel(a.trail[i].loglog_abs, b.trail[i].loglog_abs));
    }
    const bool pass = a.L == 20 && a.chain_dominates_headline && same_shape && worst <= 1e-6;
    return {pass, "L=" + std::to_string(a.L) + " chain dominates=" + (a.chain_dominates_headline ? "yes" : "no") +
                      " double/quad max rel diff=" + fmt("%.2e", worst) + " (bound 1e-6)"};
}

Outcome localization_envelope() {
    localization::EnvelopeConfig cfg;
    cfg.seeds = 20;
    cfg.lambda = 0.25;
    cfg.qs = {0.1, 0.05, 0.025};
    const auto rep = localization::localization_envelope(cfg);
    bool finite = true;
    double worst = 0.0;
    for (const auto& row : rep.rows) {
        finite = finite && row.finite;
        worst = std::max(worst, row.relative_change);
    }
    const bool pass = finite && rep.stable(0.1) && rep.growth_at_most_linear;
    return {pass, "max refinement change=" + fmt("%.2e", worst) + " (bound 0.1), growth at most linear in 1/q=" +
                      (rep.growth_at_most_linear ? "yes" : "no")};
}

Outcome regular_and_porous() {
    const auto cs = cantor_spec(1, 6, 0.0, 1.0);
    const auto set = regular_sets::build_cantor(cs);
    const auto reg = regular_sets::check_regularity(set, regular_sets::natural_measure(cs),
                                                    regular_sets::default_delta(cs), set.resolution, 1.0, 1000000, 8.0);
    // every depth n with 3^{n+1} h <= 1
    std::vector<int> depths;
    for (int n = 0; std::pow(3.0, n + 1) * set.resolution <= 1.0 + 1e-12; ++n) depths.push_back(n);
    const auto por = regular_sets::check_porosity(set, 3, depths);
    const auto square = regular_sets::build_cantor(cantor_spec(2, 2, -1.0, 1.0, {0, 1, 2}));
    const bool square_fails = !regular_sets::check_porosity(square, 3, {0}).porous_at(0);
    const bool pass = reg.pass && reg.constant() <= 8.0 && por.porous() && square_fails;
    return {pass, "C_R=" + fmt("%.4f", reg.constant()) + " (bound 8), porous at L=3 for depths 0.." + std::to_string(depths.back()) + "=" + (por.porous() ? "yes" : "no") +
                      ", full square rejected at depth 0=" + (square_fails ? "yes" : "no")};
}

std::vector<Criterion> criteria() {
    return {
        {1, "rectangle map asymptotics", 60, conformal_asymptotics},
        {2, "modified Hilbert transform of log(1+x^2)", 10, hilbert_log_derivative},
        {3, "multiplier on the subexponential weight", 120, multiplier_family},
        {4, "damping function on the depth-6 Cantor set", 300, cantor_damping},
        {5, "Cartan lower bound over seeded masses", 60, cartan_lower_bound},
        {6, "Riesz bounds over seeded polynomials", 60, riesz_bounds},
        {7, "two-variable Cartan trace bound", 60, cartan2_trace},
        {8, "operator norm decay curves", 600, fup_decay},
        {9, "distorted operator", 300, distortion},
        {10, "constant chain at the benchmark", 5, constants_chain},
        {11, "localization envelope", 600, localization_envelope},
        {12, "regularity and porosity of the depth-6 Cantor set", 60, regular_and_porous},
    };
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--list") {
            for (const auto& c : criteria()) std::cout << c.id << " " << c.name << "\n";
            return 0;
        }
        try {
            selected.insert(std::stoi(arg));
        } catch (...) {
            std::cerr << "usage: fuplab_acceptance [--list] [criterion ids...]\n";
            return 2;
        }
    }
    int failures = 0;
    for (const auto& c : criteria()) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s > c.budget_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.budget_seconds) + " s budget";
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
                  << fmt("%.1f", s) << " s of " << fmt("%.0f", c.budget_seconds) << " s)" << std::endl;
        failures += o.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
