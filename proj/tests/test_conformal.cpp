#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/random/sobol.hpp>

#include "fuplab/conformal.hpp"
#include "fuplab/errors.hpp"

using namespace fuplab;
using namespace fuplab::conformal;

namespace {

constexpr double kPi = std::numbers::pi;

// independent quadrature: t = sin u on [0,1], s = sinh v on [0,inf)
double quad_L(double k) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([k](double u) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(u) * std::sin(u)); }, 0.0,
                        kPi / 2);
}

double quad_H(double k) {
    boost::math::quadrature::tanh_sinh<double> ts;
    double total = 0.0;
    // split so each piece is resolved; the tail decays like e^{-v}/k
    for (double a = 0.0; a < 80.0; a += 8.0)
        total += ts.integrate(
            [k](double v) {
                const double s = std::sinh(v);
                return 1.0 / std::sqrt(1.0 + k * k * s * s);
            },
            a, a + 8.0);
    return total;
}

}  // namespace

TEST_CASE("quarter period") {
    CHECK(elliptic_L(0.0) == doctest::Approx(kPi / 2).epsilon(1e-15));
    CHECK(std::fabs(elliptic_L(1e-3) - kPi / 2) <= 1e-5);
    // 40-digit reference
    CHECK(std::fabs(elliptic_L(0.5) - 1.6857503548125960429) <= 1e-12);
    CHECK(std::fabs(elliptic_L(0.5) - quad_L(0.5)) <= 1e-12);
    CHECK_THROWS_AS(elliptic_L(1.0), ConfigError);
    CHECK_THROWS_AS(elliptic_L(-0.1), ConfigError);
}

TEST_CASE("conjugate period") {
    CHECK(std::fabs(elliptic_H(0.01) - std::log(400.0)) <= 0.05);
    CHECK(std::fabs(elliptic_H(0.01) - 5.9915893405069964024) <= 1e-12);
    CHECK(std::fabs(elliptic_H(0.5) - 2.1565156474996432354) <= 1e-12);
    CHECK(std::fabs(elliptic_H(0.5) - quad_H(0.5)) <= 1e-11);
    CHECK(elliptic_H(0.01) > elliptic_H(0.1));
    for (double k : {1e-6, 1e-3, 0.05})
        CHECK(std::fabs(elliptic_H(k) - (std::log(4.0) - std::log(k))) <= 5.0 * k);
    CHECK_THROWS_AS(elliptic_H(0.0), ConfigError);
    CHECK_THROWS_AS(elliptic_H(1.0), ConfigError);
}

TEST_CASE("modulus from aspect ratio") {
    const double k2 = solve_k_for_q(0.2);
    CHECK(std::fabs(k2 / (4.0 * std::exp(-kPi / 0.4)) - 1.0) <= 3.0 * 0.2);
    // 40-digit reference from root finding on L/H
    CHECK(solve_k_for_q(0.1) == doctest::Approx(6.028069101559710829e-7).epsilon(1e-8));
    CHECK(solve_k_for_q(0.3) == doctest::Approx(0.021283850926535315456).epsilon(1e-8));
    double prev = 1.0;
    for (double q : {1.0, 0.5, 0.3, 0.2, 0.1, 0.05, 0.025}) {
        const double k = solve_k_for_q(q);
        CHECK(k < prev);
        prev = k;
        CHECK(std::fabs(elliptic_L(k) / elliptic_H(k) - q) <= 1e-10 * q);
        CHECK(elliptic_L(k) >= kPi / 2);
    }
    CHECK_THROWS_AS(solve_k_for_q(0.0), ConfigError);
    CHECK_THROWS_AS(solve_k_for_q(1.5), ConfigError);
}

TEST_CASE("arcsn values") {
    CHECK(std::abs(arcsn(0.0, 0.3)) == 0.0);
    const complex one = arcsn(1.0, 0.5);
    CHECK(std::fabs(one.real() - elliptic_L(0.5)) <= 1e-12);
    CHECK(one.imag() == 0.0);
    const complex vert = arcsn(complex(0.0, 1.0), 0.3);
    CHECK(std::fabs(vert.real()) <= 1e-14);
    CHECK(std::fabs(vert.imag() - 0.86982854974091008963) <= 1e-12);
    const complex a = arcsn(complex(0.5, 0.5), 0.3);
    CHECK(std::abs(a - complex(0.44808678533467424367, 0.53364638218568067729)) <= 1e-12);
    const complex b = arcsn(complex(2.0, 0.5), 0.3);
    CHECK(std::abs(b - complex(1.2609719013823729882, 1.4765738095798486693)) <= 1e-12);

    // rectangle corners as limits from above
    const double k = 0.3, L = elliptic_L(k), H = elliptic_H(k);
    CHECK(std::abs(arcsn(1.0 / k, k, true) - complex(L, H)) <= 1e-10);
    CHECK(std::abs(arcsn(-1.0 / k, k, true) - complex(-L, H)) <= 1e-10);
    CHECK(std::abs(arcsn(1e12, k, true) - complex(0.0, H)) <= 1e-10);
    // odd symmetry across the imaginary axis
    const complex c = arcsn(complex(-2.0, 0.5), 0.3);
    CHECK(std::abs(c + std::conj(b)) <= 1e-13);

    CHECK_THROWS_AS(arcsn(complex(0.3, -0.1), k), ConfigError);
    CHECK_THROWS_AS(arcsn(2.0, k), ConfigError);
    CHECK_THROWS_AS(arcsn(0.5, 1.0), ConfigError);
}

TEST_CASE("rectangle map normalization") {
    for (double q : {0.3, 0.2, 0.1}) {
        const ConformalRectangleMap map(q);
        CHECK(std::abs(map.phi_q(-1.0)) <= 1e-12);
        CHECK(std::abs(map.phi_q(1.0) - 1.0) <= 1e-12);
        CHECK(std::abs(map.phi_q(complex(0.0, 1.0)) - complex(0.0, q)) <= 1e-10);
        CHECK(std::abs(map.phi_q(complex(0.0, -1.0)) - complex(0.0, -q)) <= 1e-10);
        const complex centre = map.phi_q(0.0);
        CHECK(centre.real() > 0.0);
        CHECK(centre.real() < 1.0);
        CHECK(std::fabs(centre.imag()) < q);
        const double theta = 2.0 * std::atan(map.k());
        CHECK(std::abs(map.phi_q(std::polar(1.0, theta)) - complex(1.0, q)) <= 1e-8);
        CHECK(std::abs(map.phi_q(std::polar(1.0, -theta)) - complex(1.0, -q)) <= 1e-8);
        CHECK(std::fabs(map.L_k() / map.H_k() - q) <= 1e-10 * q);
        CHECK(std::fabs(map.H_k() - (std::log(4.0) - std::log(map.k()))) <= 5.0 * map.k());
    }
    const ConformalRectangleMap m(0.2);
    CHECK_THROWS_AS(m.phi_q(complex(1.0, 0.1)), ConfigError);
}

TEST_CASE("preimages of 1/4 and 3/4") {
    // 40-digit references from root finding on the radial integral
    const struct {
        double q, d1, d2;
    } refs[] = {{0.1, 0.075851935793087602920, 3.0582529000978080824e-5},
                {0.2, 0.44524221193246876929, 0.010786156743937729529},
                {0.3, 0.73611931219741310255, 0.070509983088600018820}};
    for (const auto& r : refs) {
        const ConformalRectangleMap map(r.q);
        const double d1 = preimage_on_radius(map, 0.25);
        const double d2 = preimage_on_radius(map, 0.75);
        CHECK(d1 == doctest::Approx(r.d1).epsilon(1e-9));
        CHECK(d2 == doctest::Approx(r.d2).epsilon(1e-9));
        CHECK(std::fabs(map.phi_q(1.0 - d1).real() - 0.25) <= 0.3 * r.q);
    }
}

TEST_CASE("asymptotic expansions") {
    double prev[3] = {1e9, 1e9, 1e9};
    for (double q : {0.3, 0.2, 0.1}) {
        const auto r = asymptotics_report(q);
        CHECK(r.theta_num == doctest::Approx(2.0 * std::atan(r.k)).epsilon(1e-9));
        CHECK(r.rel_dev_theta <= 3.0 * q);
        CHECK(r.rel_dev_delta1 <= 3.0 * q);
        CHECK(r.rel_dev_delta2 <= 3.0 * q);
        CHECK(r.rel_dev_theta <= prev[0]);
        CHECK(r.rel_dev_delta1 <= prev[1]);
        CHECK(r.rel_dev_delta2 <= prev[2]);
        prev[0] = r.rel_dev_theta;
        prev[1] = r.rel_dev_delta1;
        prev[2] = r.rel_dev_delta2;
        if (q == 0.2) CHECK(r.rel_dev_theta <= 0.6);
        if (q == 0.1) CHECK(r.rel_dev_delta1 <= 0.3);
    }
    CHECK_THROWS_AS(asymptotics_report(0.5), ConfigError);
}

TEST_CASE("property: conformality at sobol points") {
    boost::random::sobol gen(2);
    const ConformalRectangleMap map(0.2);
    const double h = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double u = static_cast<double>(gen()) / 18446744073709551616.0;
        const double v = static_cast<double>(gen()) / 18446744073709551616.0;
        const complex w = std::polar(0.9 * std::sqrt(u), 2.0 * kPi * v);
        const complex fx = (map.phi_q(w + h) - map.phi_q(w - h)) / (2.0 * h);
        const complex fy = (map.phi_q(w + complex(0.0, h)) - map.phi_q(w - complex(0.0, h))) / (2.0 * h);
        worst = std::max(worst, std::abs(fy - complex(0.0, 1.0) * fx));
        CHECK(std::abs(fx - map.derivative(w)) <= 1e-6);
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("property: boundary goes to boundary") {
    for (double q : {0.3, 0.1}) {
        const ConformalRectangleMap map(q);
        double worst = 0.0;
        for (int j = 0; j < 256; ++j) {
            const complex w = std::polar(1.0, 2.0 * kPi * j / 256.0);
            worst = std::max(worst, distance_to_rectangle_boundary(map.phi_q(w), q));
        }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("property: derivative bound on the radius") {
    for (double q : {0.3, 0.2, 0.1}) {
        const ConformalRectangleMap map(q);
        for (int j = 1; j < 200; ++j) {
            const double w = j / 200.0;
            CHECK(std::abs(map.derivative(w)) * (1.0 - w) * (1.0 - w) <= 2.0 + 1e-6);
        }
    }
}

TEST_CASE("property: measure distortion on [a1, a2]") {
    for (double q : {0.2, 0.1}) {
        const ConformalRectangleMap map(q);
        const double d1 = preimage_on_radius(map, 0.25), d2 = preimage_on_radius(map, 0.75);
        const double a1 = 1.0 - d1, a2 = 1.0 - d2;
        const double bound = 2.0 / (d2 * d2);
        for (int parts : {1, 7, 50}) {
            for (int j = 0; j < parts; ++j) {
                const double lo = a1 + (a2 - a1) * j / parts, hi = a1 + (a2 - a1) * (j + 1) / parts;
                const double image = map.phi_q(hi).real() - map.phi_q(lo).real();
                CHECK(image > 0.0);
                CHECK(image <= bound * (hi - lo));
            }
        }
    }
}
