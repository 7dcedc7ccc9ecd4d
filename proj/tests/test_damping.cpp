#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fuplab/constants.hpp"
#include "fuplab/damping.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/regular_sets.hpp"

using namespace fuplab;
using namespace fuplab::damping;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> sample(const SymmetricGrid& g, double (*f)(double)) {
    std::vector<double> out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = f(g.at(i));
    return out;
}

double bump(double x) { return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0; }

regular_sets::GridSet cantor_set(int depth) {
    regular_sets::CantorSpec spec;
    spec.depth = depth;
    const double N = std::pow(3.0, depth);
    spec.axes[0].lo = -N;
    spec.axes[0].hi = N;
    return regular_sets::build_cantor(spec);
}

}  // namespace

TEST_CASE("hilbert of zero is zero") {
    const SymmetricGrid g{1.0 / 64.0, 4096};
    const auto out = hilbert_modified(std::vector<double>(g.size(), 0.0), g.spacing);
    for (double v : out) REQUIRE(v == 0.0);
}

TEST_CASE("hilbert derivative of log(1 + x^2) is -2/(1 + x^2)") {
    const SymmetricGrid g{std::ldexp(1.0, -10), 1024 * 1024};
    const auto out = hilbert_modified(sample(g, [](double x) { return std::log1p(x * x); }), g.spacing);
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double x = g.at(i);
        if (std::abs(x) > 10.0) continue;
        const double d = (out[i + 1] - out[i - 1]) / (2.0 * g.spacing);
        worst = std::max(worst, std::abs(d + 2.0 / (x * x + 1.0)));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("hilbert of an odd input against frozen quadrature and a direct sum") {
    const SymmetricGrid g{1.0 / 64.0, 256 * 64};
    auto f = [](double x) { return x / (1.0 + x * x); };
    std::vector<double> in(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) in[i] = f(g.at(i));
    const auto out = hilbert_modified(in, g.spacing);
    // high-precision adaptive quadrature of the principal value, frozen
    const std::vector<std::pair<double, double>> frozen = {{0.0, -0.5}, {0.5, -0.3}, {2.0, 0.3}, {7.0, 0.48}, {-3.0, 0.4}};
    for (const auto& [x, want] : frozen) {
        const auto i = static_cast<std::size_t>(std::llround(x / g.spacing) + g.half);
        CHECK(std::abs(out[i] - want) <= 1e-3);
    }
    // direct O(n^2)-style odd-offset sum at a few points, no FFT
    const double c = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) s += in[j] * g.at(j) / (g.at(j) * g.at(j) + 1.0);
        return s * g.spacing / kPi;
    }();
    for (std::int64_t i : {g.half - 640, g.half, g.half + 64, g.half + 3000}) {
        double direct = c;
        for (std::int64_t j = 0; j < static_cast<std::int64_t>(g.size()); ++j)
            if ((i - j) % 2 != 0) direct += 2.0 / kPi * in[j] / static_cast<double>(i - j);
        // the FFT path adds only the closed tail model, which is small here
        CHECK(std::abs(out[i] - direct) <= 5e-3);
    }
    // parity: output minus its centre value is even (odd input)
    const double mid = out[g.half];
    for (std::int64_t k : {1, 100, 5000})
        CHECK(std::abs((out[g.half + k] - mid) - (out[g.half - k] - mid)) <= 1e-9);
}

TEST_CASE("hilbert of log(x^2 + T^2) is -2 arctan(x / T)") {
    const double T = 5.0;
    const SymmetricGrid g{1.0 / 64.0, 1024 * 64};
    const auto out = hilbert_modified(sample(g, [](double x) { return std::log(x * x + 25.0); }), g.spacing);
    CHECK(std::abs(out[g.half]) <= 1e-9);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.at(i);
        if (std::abs(x) > 50.0) continue;
        if (std::abs(x) <= 10.0) worst = std::max(worst, std::abs(out[i] + 2.0 * std::atan(x / T)));
        const std::size_t mirror = g.size() - 1 - i;
        CHECK(std::abs(out[i] + out[mirror]) <= 1e-9);
    }
    CHECK(worst <= 5e-3);
}

TEST_CASE("hilbert inversion: H(H(f)) + f is constant") {
    const SymmetricGrid g{1.0 / 128.0, 512 * 128};
    const auto f = sample(g, bump);
    ModifiedHilbert H(g);
    const auto hf = H.apply(f);
    const auto hhf = H.apply(hf);
    const double c = hhf[g.half] + f[g.half];
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (std::abs(g.at(i)) <= 0.5 * g.extent()) worst = std::max(worst, std::abs(hhf[i] + f[i] - c));
    CHECK(worst <= 1e-3);
}

TEST_CASE("hilbert rejects non-finite samples and fast tails") {
    const SymmetricGrid g{1.0 / 16.0, 1024};
    auto v = std::vector<double>(g.size(), 1.0);
    v[5] = std::nan("");
    CHECK_THROWS_AS(hilbert_modified(v, g.spacing), ConfigError);
    CHECK_THROWS_AS(hilbert_modified(sample(g, [](double x) { return x * x; }), g.spacing), ConfigError);
    CHECK_THROWS_AS(hilbert_modified(std::vector<double>(10, 0.0), g.spacing), ConfigError);
}

TEST_CASE("grid defaults") {
    CHECK(default_spacing(0.05) == std::ldexp(1.0, -11));
    CHECK(default_spacing(0.02) == std::ldexp(1.0, -12));
    CHECK(default_spacing(0.09) == std::ldexp(1.0, -10));
    CHECK(default_extent(0.05) == 512.0);
    CHECK(default_extent(0.04, 729.0) == 2944.0);
}

TEST_CASE("multiplier on the subexponential family") {
    for (double sigma : {0.05, 0.02}) {
        CAPTURE(sigma);
        const double h = default_spacing(sigma);
        const SymmetricGrid g{h, static_cast<std::int64_t>(default_extent(sigma) / h)};
        const Weight w = subexponential_weight(0.01, g);
        const auto psi = build_multiplier(w, sigma);
        const auto& m = psi.multiplier;
        CHECK(m.T == doctest::Approx(20.0 / (kPi * sigma)));
        CHECK(m.leakage <= 1e-6);
        CHECK(m.hypothesis_value <= m.hypothesis_bound);
        CHECK(std::abs(psi.spectral[psi.n / 2]) >= std::pow(sigma, 10) / 4e11 * w.omega_at_zero());
        CHECK(m.lower_bound_ratio >= 1.0);
        CHECK(m.k_nondecreasing);
        CHECK(m.k_central_min == m.k_central_max);
        CHECK(m.s0_max_drop <= 1e-9);
        CHECK(std::abs(m.M_central_min) < 7.0);
        CHECK(std::abs(m.M_central_max) < 7.0);
        CHECK(m.M_lower_margin > 0.0);
        // Parseval between the two sides
        double a = 0, b = 0;
        for (const auto& v : psi.spectral) a += std::norm(v) * psi.spectral_spacing;
        for (const auto& v : psi.physical) b += std::norm(v) * psi.physical_spacing();
        CHECK(std::abs(a - b) <= 1e-10 * a);
    }
}

TEST_CASE("multiplier scaling and errors") {
    CHECK(20.0 / (kPi * 0.025) == doctest::Approx(2.0 * 20.0 / (kPi * 0.05)));
    const double h = default_spacing(0.05);
    const SymmetricGrid g{h, static_cast<std::int64_t>(64.0 / h)};
    CHECK_THROWS_AS(build_multiplier(subexponential_weight(0.01, g), 0.2), ConfigError);
    CHECK_THROWS_AS(build_multiplier(subexponential_weight(0.01, SymmetricGrid{0.01, 6400}), 0.05), ConfigError);
    // a weight far too steep for sigma fails the hypothesis check
    CHECK_THROWS_AS(build_multiplier(subexponential_weight(5.0, g), 0.05), ConfigError);
}

TEST_CASE("regular damping on a Cantor set") {
    const auto Y = cantor_set(4);
    const double c1 = 0.2;
    const auto psi = build_regular_damping(Y, c1);
    CHECK(psi.c2 == doctest::Approx(1e-2 * std::pow(0.2, 10)).epsilon(1e-12));
    const double d1 = std::log(2.0) / std::log(3.0);
    CHECK(psi.delta1 == doctest::Approx(d1).epsilon(1e-12));
    CHECK(psi.c3 == doctest::Approx(1e-2 * c1 / (psi.C_R * psi.C_R) * d1 * (1 - d1)).epsilon(1e-12));
    const auto rep = verify_damping(psi, Y, bullet_params(psi));
    CHECK(rep.bullets[0]);
    CHECK(rep.bullets[1]);
    CHECK(rep.bullets[2]);
    CHECK(rep.bullets[3]);
    CHECK(rep.pass);
    CHECK(rep.subexponential_margin >= 0.0);
    CHECK(rep.y_points > 0);
    CHECK(psi.multiplier.leakage <= 1e-6);
    CHECK_FALSE(psi.multiplier.sigma_clamped);
}

TEST_CASE("regular damping with a vacuous Y clause") {
    regular_sets::GridSet Y;
    Y.resolution = 2.0;
    Y.origin = {-2.0, 0.0};
    Y.cubes = {{0, 0}, {1, 0}};
    regular_sets::canonicalize(Y);
    RegularDampingOptions opt;
    opt.delta1 = 0.5;
    opt.C_R = 1.0;
    const auto psi = build_regular_damping(Y, 0.2, opt);
    const auto rep = verify_damping(psi, Y, bullet_params(psi));
    CHECK(rep.bullets[0]);
    CHECK(rep.bullets[1]);
    CHECK(rep.bullets[2]);
    CHECK(rep.bullets[3]);
}

TEST_CASE("sigma clamp for large c1") {
    regular_sets::GridSet Y;
    Y.resolution = 2.0;
    Y.origin = {-2.0, 0.0};
    Y.cubes = {{0, 0}, {1, 0}};
    regular_sets::canonicalize(Y);
    RegularDampingOptions opt;
    opt.delta1 = 0.5;
    opt.C_R = 1.0;
    const auto psi = build_regular_damping(Y, 0.6, opt);
    CHECK(psi.multiplier.sigma_clamped);
    CHECK(psi.multiplier.sigma == doctest::Approx(0.1 - 1e-6));
    CHECK(verify_damping(psi, Y, bullet_params(psi)).pass);
}

TEST_CASE("verify_damping negative controls") {
    regular_sets::GridSet Y;
    Y.resolution = 4.0;
    Y.origin = {0.0, 0.0};
    Y.cubes = {{-50, 0}, {-5, 0}, {5, 0}, {15, 0}, {50, 0}};
    regular_sets::canonicalize(Y);
    BulletParams p;
    p.c1 = 0.2;
    p.c2 = 1e-9;
    p.c3 = 1.0;
    p.alpha = 0.8;
    // Gaussian of width c1/40 in space, unit height in frequency
    const double s = 0.2 / 40.0;
    const auto gauss = from_spectral([&](double xi) { return cplx(std::exp(-2.0 * kPi * kPi * s * s * xi * xi), 0.0); },
                                     1 << 14, 1.0 / 8.0, -0.1, 0.1);
    const auto rg = verify_damping(gauss, Y, p);
    CHECK_FALSE(rg.bullets[3]);
    CHECK(rg.Y_decay_margin < 0.0);
    CHECK_FALSE(rg.pass);

    const auto zero = from_spectral([](double) { return cplx(0.0, 0.0); }, 1 << 10, 1.0 / 8.0, -0.1, 0.1);
    const auto rz = verify_damping(zero, Y, p);
    CHECK_FALSE(rz.bullets[1]);
    CHECK(rz.bullets[2]);
    CHECK(std::isfinite(rz.support_leakage));
}

TEST_CASE("product damping on standard and rotated frames") {
    const auto Y1 = cantor_set(3);
    const double c1 = 0.2;
    for (double angle : {0.0, kPi / 6.0}) {
        CAPTURE(angle);
        AdmissibleSpec spec;
        spec.delta1 = std::log(2.0) / std::log(3.0);
        spec.eps0 = 0.1;
        AdmissibleCover cov;
        cov.axes = {{{std::cos(angle), std::sin(angle)}, {-std::sin(angle), std::cos(angle)}}};
        cov.sets = {Y1, Y1};
        spec.covers.push_back(cov);
        const auto psi = product_damping(spec, c1);
        CHECK(psi.factors.size() == 1);
        CHECK(psi.factors[0][0] == psi.factors[0][1]);  // identical sets share one factor
        const auto pts = admissible_points(spec);
        const auto rep = verify_damping(psi, pts, bullet_params(psi));
        CHECK(rep.bullets[0]);
        CHECK(rep.bullets[1]);
        CHECK(rep.bullets[2]);
        CHECK(rep.bullets[3]);
        CHECK(rep.y_points == pts.size());
        // support inside the factor parallelogram E^{-T}[-c/10, c/10]^2, one cell of slack
        const auto& E = psi.frames[0];
        const double reach = psi.factors[0][0]->c1 / 10.0 + psi.physical_spacing() * 2.0;
        double out = 0.0, total = 0.0;
        for (int i = 0; i < psi.n; ++i)
            for (int j = 0; j < psi.n; ++j) {
                const double x0 = psi.physical_abscissa(i), x1 = psi.physical_abscissa(j);
                const double m = std::norm(psi.physical[static_cast<std::size_t>(i) * psi.n + j]);
                total += m;
                const double p0 = E[0][0] * x0 + E[0][1] * x1, p1 = E[1][0] * x0 + E[1][1] * x1;
                if (std::abs(p0) > reach || std::abs(p1) > reach) out += m;
            }
        CHECK(out / total <= 1e-6);
    }
}

TEST_CASE("product damping rejects degenerate frames") {
    AdmissibleSpec spec;
    AdmissibleCover cov;
    cov.axes = {{{1.0, 0.0}, {std::cos(0.1), std::sin(0.1)}}};
    cov.sets = {cantor_set(2), cantor_set(2)};
    spec.covers.push_back(cov);
    spec.eps0 = 0.1;
    CHECK_THROWS_AS(product_damping(spec, 0.2), ConfigError);
}
