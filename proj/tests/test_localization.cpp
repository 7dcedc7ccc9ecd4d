#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fuplab/errors.hpp"
#include "fuplab/localization.hpp"

using namespace fuplab;
using namespace fuplab::localization;

namespace {

constexpr double kPi = std::numbers::pi;

const Grid kGrid1{4096, 1.0 / 16.0};
const Grid kGrid2{256, 1.0 / 8.0};

IntervalFamily fixed_family(int d, double lambda, double offset) {
    IntervalFamily fam;
    fam.dimension = d;
    fam.lambda = lambda;
    fam.offset = offset;
    return fam;
}

IntervalFamily random_family(int d, double lambda, std::uint64_t seed) {
    IntervalFamily fam;
    fam.dimension = d;
    fam.lambda = lambda;
    fam.random = true;
    fam.seed = seed;
    return fam;
}

void check_same(const LocalizationReport& a, const LocalizationReport& b) {
    CHECK(std::fabs(a.lhs - b.lhs) <= 1e-10);
    CHECK(std::fabs(a.sum_local - b.sum_local) <= 1e-10);
    CHECK(std::fabs(a.weight_norm - b.weight_norm) <= 1e-10 * a.weight_norm);
    CHECK(std::fabs(a.empirical_constant - b.empirical_constant) <= 1e-10);
    CHECK(a.quantization == b.quantization);
    CHECK(a.kappa_used == b.kappa_used);
}

}  // namespace

TEST_CASE("band-limited samples") {
    const SampledFunction f = band_limited_sample(0, 1.0, 1, kGrid1);
    CHECK(std::fabs(f.norm_squared() - 1.0) <= 1e-12);
    CHECK(parseval_defect(f) <= 1e-10);
    for (int l = 0; l < kGrid1.n; ++l) {
        const double xi = (l - kGrid1.n / 2) / (kGrid1.n * kGrid1.dx);
        if (std::fabs(xi) > 1.0) CHECK(f.spectral[l] == cplx(0.0));
    }
    CHECK(f.central_mass >= 1.0 - 1e-6);

    const SampledFunction again = band_limited_sample(0, 1.0, 1, kGrid1);
    CHECK(again.samples == f.samples);
    const SampledFunction other = band_limited_sample(1, 1.0, 1, kGrid1);
    CHECK(other.samples != f.samples);

    // spectral samples agree with a direct Riemann sum of the transform at a few frequencies
    for (int l : {kGrid1.n / 2, kGrid1.n / 2 + 37, kGrid1.n / 2 - 200}) {
        const double xi = (l - kGrid1.n / 2) / (kGrid1.n * kGrid1.dx);
        cplx s = 0.0;
        for (int j = 0; j < kGrid1.n; ++j)
            s += f.samples[j] * std::polar(kGrid1.dx, -2.0 * kPi * ((j - kGrid1.n / 2) * kGrid1.dx) * xi);
        CHECK(std::abs(s - f.spectral[l]) <= 1e-10);
    }

    const SampledFunction g = band_limited_sample(4, 2.0, 2, kGrid2);
    CHECK(std::fabs(g.norm_squared() - 1.0) <= 1e-12);
    CHECK(parseval_defect(g) <= 1e-10);
    int support = 0;
    for (int a = 0; a < kGrid2.n; ++a)
        for (int b = 0; b < kGrid2.n; ++b) {
            const double l1 = std::fabs((a - kGrid2.n / 2) / 32.0) + std::fabs((b - kGrid2.n / 2) / 32.0);
            const cplx v = g.spectral[static_cast<std::size_t>(a) * kGrid2.n + b];
            if (l1 > 2.0) CHECK(v == cplx(0.0));
            if (v != cplx(0.0)) ++support;
        }
    CHECK(support > 100);

    CHECK_THROWS_AS(band_limited_sample(0, 9.0, 1, kGrid1), ConfigError);
    CHECK_THROWS_AS(band_limited_sample(0, 1.0, 3, kGrid1), ConfigError);
}

TEST_CASE("zero function is degenerate") {
    const SampledFunction z = zero_function(1, kGrid1);
    const auto r = localization_check(z, fixed_family(1, 0.25, 0.0), 0.05, 0.1);
    CHECK(r.lhs == 0.0);
    CHECK(r.sum_local == 0.0);
    CHECK(r.weight_norm == 0.0);
    CHECK(r.degenerate);
    CHECK(!r.finite);
    CHECK(parseval_defect(z) == 0.0);
    const auto u = up_theta_check(z, 0.5, 1.0, fixed_family(1, 0.25, 0.0));
    CHECK(u.degenerate);
}

TEST_CASE("single mode with half cells") {
    const int mode = 8;
    const SampledFunction f = plane_wave({mode}, 1, kGrid1);
    const double q = 0.05, kappa = 0.3;
    const auto r = localization_check(f, fixed_family(1, 0.5, 0.25), q, kappa);
    // |f| = 1 everywhere, so exactly half the mass sits on the sub-cells
    CHECK(r.sum_local == doctest::Approx(0.5 * r.lhs).epsilon(1e-12));
    CHECK(r.quantization == 0.0);
    const double xi = mode / f.period();
    CHECK(r.weight_norm == doctest::Approx(std::exp(4.0 * kPi * q * xi) * r.lhs).epsilon(1e-10));
    const double expected = std::pow(0.5, -kappa) * std::exp(-4.0 * kPi * q * xi * (1.0 - kappa));
    CHECK(r.empirical_constant == doctest::Approx(expected).epsilon(1e-10));
    CHECK(r.empirical_constant <= std::pow(0.5, -kappa));
    CHECK(r.constant_form == "12*exp(10*C1/q)");
}

TEST_CASE("default kappa and argument checks") {
    CHECK(default_kappa(0.1, 0.25, 1) == doctest::Approx(std::exp(-10.0) / std::log(4.0)));
    CHECK(default_kappa(0.1, 0.25, 2, 0.5) == doctest::Approx(std::exp(-5.0) / std::pow(std::log(4.0), 2)));
    const SampledFunction f = band_limited_sample(0, 1.0, 1, kGrid1);
    CHECK_THROWS_AS(localization_check(f, fixed_family(1, 0.25, 0.0), 0.0, 0.1), ConfigError);
    CHECK_THROWS_AS(localization_check(f, fixed_family(1, 0.25, 0.0), 0.9, 0.1), ConfigError);
    CHECK_THROWS_AS(localization_check(f, fixed_family(1, 0.25, 0.0), 0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(localization_check(f, fixed_family(1, 0.75, 0.0), 0.1, 0.1), ConfigError);
    CHECK_THROWS_AS(localization_check(f, fixed_family(1, 0.25, 0.9), 0.1, 0.1), ConfigError);
    CHECK_THROWS_AS(localization_check(f, fixed_family(2, 0.25, 0.0), 0.1, 0.1), ConfigError);
}

TEST_CASE("random seeds: constants stable under refinement") {
    const Grid fine{kGrid1.n * 2, kGrid1.dx / 2};
    const double q = 0.05, lambda = 0.25;
    const double kappa = default_kappa(q, lambda, 1);
    double worst = 0.0, worst_fine = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto fam = random_family(1, lambda, seed);
        const auto a = localization_check(band_limited_sample(seed, 1.0, 1, kGrid1), fam, q, kappa);
        const auto b = localization_check(band_limited_sample(seed, 1.0, 1, fine), fam, q, kappa);
        CHECK(a.finite);
        CHECK(a.lhs >= 0.0);
        CHECK(a.sum_local >= 0.0);
        CHECK(a.sum_local <= a.lhs);
        CHECK(a.weight_norm >= a.lhs);
        CHECK(std::fabs(b.sum_local - a.sum_local) <= 1e-2 * a.sum_local);
        worst = std::max(worst, a.empirical_constant);
        worst_fine = std::max(worst_fine, b.empirical_constant);
    }
    CHECK(std::fabs(worst_fine - worst) <= 0.1 * worst);
}

TEST_CASE("property: translation invariance") {
    const SampledFunction f = band_limited_sample(3, 1.0, 1, kGrid1);
    const SampledFunction g = shift_lattice(f, {5});
    CHECK(parseval_defect(g) <= 1e-10);
    for (bool random : {false, true}) {
        IntervalFamily fam = random ? random_family(1, 0.25, 9) : fixed_family(1, 0.25, 0.5);
        const auto a = localization_check(f, fam, 0.05, 0.2);
        fam.shift = {5};
        const auto b = localization_check(g, fam, 0.05, 0.2);
        check_same(a, b);
    }
    const SampledFunction f2 = band_limited_sample(3, 1.0, 2, kGrid2);
    const SampledFunction g2 = shift_lattice(f2, {-2, 3});
    IntervalFamily fam2 = random_family(2, 0.25, 4);
    const auto a2 = localization_check(f2, fam2, 0.1, 0.2);
    fam2.shift = {-2, 3};
    const auto b2 = localization_check(g2, fam2, 0.1, 0.2);
    check_same(a2, b2);
    CHECK(a2.constant_form == "exp(2*C/q)");
}

TEST_CASE("property: nested families increase local mass") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SampledFunction f = band_limited_sample(seed, 1.0, 1, kGrid1);
        double prev = 0.0;
        for (double lambda : {0.0625, 0.125, 0.25, 0.375, 0.5}) {
            const double m = local_mass(f, fixed_family(1, lambda, 0.25));
            CHECK(m >= prev);
            prev = m;
        }
        const SampledFunction g = band_limited_sample(seed, 1.0, 2, kGrid2);
        prev = 0.0;
        for (double lambda : {0.0625, 0.25}) {
            const double m = local_mass(g, fixed_family(2, lambda, 0.25));
            CHECK(m >= prev);
            prev = m;
        }
    }
}

TEST_CASE("property: parseval on stored pairs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(parseval_defect(band_limited_sample(seed, 0.5 + 0.1 * seed, 1, kGrid1)) <= 1e-10);
        CHECK(parseval_defect(band_limited_sample(seed, 1.0, 2, kGrid2)) <= 1e-10);
        CHECK(parseval_defect(damped_sample(seed, 1.0, 0.5, 1, kGrid1)) <= 1e-10);
    }
}

TEST_CASE("grid quantization is recorded") {
    const SampledFunction f = band_limited_sample(0, 1.0, 1, Grid{1024, 1.0 / 8.0});
    double quant = -1.0;
    local_mass(f, fixed_family(1, 0.3, 0.0), &quant);
    CHECK(quant == doctest::Approx(0.05));
    local_mass(f, fixed_family(1, 0.25, 0.0), &quant);
    CHECK(quant == 0.0);
    CHECK_THROWS_AS(local_mass(f, fixed_family(1, 0.01, 0.0)), ConfigError);
    CHECK_THROWS_AS(local_mass(band_limited_sample(0, 1.0, 1, Grid{1000, 0.3}), fixed_family(1, 0.25, 0.0)), ConfigError);
}

TEST_CASE("uncertainty under theta decay") {
    const double alpha = 0.5;
    const SampledFunction f = damped_sample(2, 2.0, alpha, 1, kGrid1);
    const auto fam = random_family(1, 0.25, 2);
    const auto probe = up_theta_check(f, alpha, 1e6, fam);
    CHECK(probe.A_measured >= 1.0);
    CHECK(std::isfinite(probe.ratio));
    CHECK(probe.ratio >= 1.0);
    const auto tight = up_theta_check(f, alpha, probe.A_measured * (1.0 + 1e-12), fam);
    CHECK(tight.ratio == probe.ratio);
    CHECK_THROWS_AS(up_theta_check(f, alpha, 0.5 * probe.A_measured, fam), ConfigError);
    // refinement leaves the ratio nearly unchanged
    const SampledFunction g = damped_sample(2, 2.0, alpha, 1, Grid{kGrid1.n * 2, kGrid1.dx / 2});
    CHECK(std::fabs(up_theta_check(g, alpha, 1e6, fam).ratio - probe.ratio) <= 0.02 * probe.ratio);

    // slowly varying f against half of every cell
    const SampledFunction slow = band_limited_sample(6, 0.02, 1, Grid{16384, 1.0 / 8.0});
    const auto half = up_theta_check(slow, alpha, 1e6, fixed_family(1, 0.5, 0.0));
    CHECK(half.ratio <= std::sqrt(2.0) + 0.01);
    CHECK(half.ratio >= std::sqrt(2.0) - 0.01);
}

TEST_CASE("envelope over seeds") {
    EnvelopeConfig cfg;
    cfg.seeds = 20;
    const auto rep = localization_envelope(cfg);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.min_central_mass >= 1.0 - 1e-6);
    CHECK(rep.stable(0.1));
    CHECK(rep.growth_at_most_linear);
    for (const auto& row : rep.rows) {
        CHECK(row.finite);
        CHECK(row.K > 0.0);
    }
    CHECK(growth_at_most_linear({0.1, 0.05, 0.025}, {1.0, std::exp(1.0), std::exp(3.0)}));
    CHECK(!growth_at_most_linear({0.1, 0.05, 0.025}, {1.0, std::exp(1.0), std::exp(5.0)}));
}
