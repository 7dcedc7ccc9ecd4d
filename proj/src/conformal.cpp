#include "fuplab/conformal.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/ellint_1.hpp>

#include "fuplab/errors.hpp"
#include "fuplab/quadrature.hpp"

namespace fuplab::conformal {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kQuadTol = 1e-13;

template <class F>
auto integrate(F f, double a, double b) {
    return integrate_adaptive(f, a, b, kQuadTol);
}

double agm(double a, double b) {
    for (int i = 0; i < 64 && std::fabs(a - b) > 1e-16 * a; ++i) {
        const double m = 0.5 * (a + b);
        b = std::sqrt(a * b);
        a = m;
    }
    return 0.5 * (a + b);
}

// integrand 1/sqrt((1-t^2)(1-k^2 t^2)) with principal roots, valid for Im t > 0
complex integrand(complex t, double k) {
    const complex kt = k * t;
    return 1.0 / (std::sqrt((1.0 - t) * (1.0 + t)) * std::sqrt((1.0 - kt) * (1.0 + kt)));
}

struct Periods {
    double k, L, H;
};

// integral along the real axis from 0 to X >= 0, X <= 1/sqrt(k), limit from above
complex real_segment(double X, const Periods& p) {
    if (X <= 1.0) return boost::math::ellint_1(p.k, std::asin(X));
    const double vmax = std::acosh(X);
    const double k = p.k;
    const double im = integrate(
        [k](double v) {
            const double c = k * std::cosh(v);
            return 1.0 / std::sqrt((1.0 - c) * (1.0 + c));
        },
        0.0, vmax);
    return {p.L, im};
}

// |z| <= 1/sqrt(k), Im z >= 0
complex arcsn_core(complex z, const Periods& p) {
    if (std::abs(z) < 1e-3) {
        // Taylor series; the next term is O(|z|^7)
        const double k2 = p.k * p.k;
        const complex z2 = z * z;
        return z * (1.0 + z2 * ((1.0 + k2) / 6.0 + z2 * (3.0 + 2.0 * k2 + 3.0 * k2 * k2) / 40.0));
    }
    if (z.real() < 0.0) return -std::conj(arcsn_core(complex(-z.real(), z.imag()), p));
    const double X = z.real(), Y = z.imag();
    if (Y == 0.0) return real_segment(X, p);
    const double k = p.k;
    if (std::fabs(X - 1.0) >= Y) {
        // up from the real axis; the singularity at 1 is at least as far as the segment is long
        const complex vertical = integrate([&](double s) { return integrand(complex(X, s), k); }, 0.0, Y);
        return real_segment(X, p) + complex(0.0, 1.0) * vertical;
    }
    // up the imaginary axis, then across at height Y
    const double up = integrate(
        [k](double tau) {
            const double ks = k * std::sinh(tau);
            return 1.0 / std::sqrt(1.0 + ks * ks);
        },
        0.0, std::asinh(Y));
    complex across = 0.0;
    const double head = std::min(X, 1.0);
    if (head > 0.0) {
        // x = 1 - sigma^2 resolves the approach to the branch point at 1
        const double s_lo = std::sqrt(1.0 - head);
        across += integrate(
            [&](double sigma) { return 2.0 * sigma * integrand(complex(1.0 - sigma * sigma, Y), k); }, s_lo, 1.0);
    }
    if (X > 1.0) across += integrate([&](double x) { return integrand(complex(x, Y), k); }, 1.0, X);
    return complex(0.0, up) + across;
}

complex arcsn_upper(complex z, const Periods& p) {
    if (std::norm(z) * p.k > 1.0) {
        // sn(u + iH) = 1 / (k sn(u)) maps the outer region back inside |z| <= 1/sqrt(k)
        const complex u = 1.0 / (p.k * z);
        const complex v(u.real(), std::fabs(u.imag()));
        return complex(0.0, p.H) + std::conj(arcsn_core(v, p));
    }
    return arcsn_core(z, p);
}

void check_modulus(double k) {
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("modulus k must lie in (0,1)");
}

}  // namespace

double elliptic_L(double k) {
    if (!(k >= 0.0 && k < 1.0)) throw ConfigError("elliptic_L requires 0 <= k < 1");
    return kPi / (2.0 * agm(1.0, std::sqrt((1.0 - k) * (1.0 + k))));
}

double elliptic_H(double k) {
    check_modulus(k);
    return kPi / (2.0 * agm(1.0, k));
}

double solve_k_for_q(double q) {
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("q must lie in (0,1]");
    const double seed = std::log(4.0) - kPi / (2.0 * q);
    if (seed < -700.0) throw ConfigError("q too small for double precision modulus");
    auto excess = [q](double logk) {
        const double k = std::exp(logk);
        return elliptic_L(k) / elliptic_H(k) - q;
    };
    const double top = std::log1p(-1e-15);
    double lo = seed - 1.0, hi = std::min(seed + 1.0, top);
    while (excess(lo) > 0.0) lo -= 1.0;
    while (hi < top && excess(hi) < 0.0) hi = std::min(hi + 1.0, top);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e = excess(mid);
        if (std::fabs(e) <= 1e-10 * q) return std::exp(mid);
        (e < 0.0 ? lo : hi) = mid;
    }
    throw ContractViolation("solve_k_for_q did not converge in 200 iterations");
}

complex arcsn(complex z, double k, bool limit_from_above) {
    check_modulus(k);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ConfigError("arcsn argument must be finite");
    if (z.imag() < 0.0) throw ConfigError("arcsn is defined on the closed upper half-plane");
    if (z.imag() == 0.0 && std::fabs(z.real()) > 1.0 && !limit_from_above)
        throw ConfigError("arcsn argument lies on a branch segment; request the limit from above");
    const Periods p{k, elliptic_L(k), elliptic_H(k)};
    return arcsn_upper(complex(z.real(), 0.0 + z.imag()), p);
}

ConformalRectangleMap::ConformalRectangleMap(double q) : q_(q) {
    k_ = solve_k_for_q(q);
    L_ = elliptic_L(k_);
    H_ = elliptic_H(k_);
}

complex ConformalRectangleMap::F_q(complex z) const {
    if (z.imag() < 0.0) throw ConfigError("F_q is defined on the closed upper half-plane");
    const Periods p{k_, L_, H_};
    return complex(0.0, -1.0 / H_) * arcsn_upper(z, p);
}

complex ConformalRectangleMap::phi_q(complex w) const {
    const double r2 = std::norm(w);
    if (!(r2 <= 1.0 + 1e-12)) throw ConfigError("phi_q requires |w| <= 1");
    const double d = std::norm(1.0 - w);
    if (d == 0.0) return 1.0;
    // i(1+w)/(1-w); |w| = 1 up to rounding is the circle, whose image is the real axis
    const double gap = 1.0 - r2;
    const complex z(-2.0 * w.imag() / d, gap > 4e-16 ? gap / d : 0.0);
    return F_q(z);
}

complex ConformalRectangleMap::derivative(complex w) const {
    if (!(std::norm(w) < 1.0)) throw ConfigError("derivative requires |w| < 1");
    const complex z = complex(0.0, 1.0) * (1.0 + w) / (1.0 - w);
    return (2.0 / H_) * integrand(z, k_) / ((1.0 - w) * (1.0 - w));
}

double preimage_on_radius(const ConformalRectangleMap& map, double target) {
    if (!(target > 0.0 && target < 1.0)) throw ConfigError("target must lie in (0,1)");
    // phi_q(1 - delta) = F_q(i (2 - delta)/delta), increasing as delta decreases
    auto value = [&](double log_delta) {
        const double delta = std::exp(log_delta);
        return map.F_q(complex(0.0, (2.0 - delta) / delta)).real();
    };
    double lo = std::log(1e-300), hi = std::log(2.0) - 1e-15;
    if (!(value(lo) > target && value(hi) < target)) throw ContractViolation("radial preimage not bracketed");
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (value(mid) > target ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

namespace {

// boundary angle of the corner 1 + iq: phi_q(e^{i t}) stays on Re = 1 for t below it and
// leaves the edge like a square root above it, so a 1e-12 band moves the angle by ~1e-24
double corner_angle(const ConformalRectangleMap& map) {
    auto on_right_edge = [&](double log_t) {
        return map.phi_q(std::polar(1.0, std::exp(log_t))).real() >= 1.0 - 1e-12;
    };
    double lo = std::log(1e-300), hi = std::log(kPi / 2.0);
    if (!on_right_edge(lo) || on_right_edge(hi)) throw ContractViolation("corner angle not bracketed");
    for (int it = 0; it < 400 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (on_right_edge(mid) ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

}  // namespace

AsymptoticsReport asymptotics_report(double q) {
    if (!(q > 0.0 && q <= 0.3)) throw ConfigError("asymptotics report requires 0 < q <= 0.3");
    const ConformalRectangleMap map(q);
    AsymptoticsReport r;
    r.q = q;
    r.k = map.k();
    r.L_k = map.L_k();
    r.H_k = map.H_k();
    r.theta_num = corner_angle(map);
    r.theta_asym = 8.0 * std::exp(-kPi / (2.0 * q));
    r.theta_two_k = 2.0 * map.k();
    r.delta1_num = preimage_on_radius(map, 0.25);
    r.delta1_asym = 4.0 * std::exp(-kPi / (8.0 * q));
    r.delta2_num = preimage_on_radius(map, 0.75);
    r.delta2_asym = 4.0 * std::exp(-3.0 * kPi / (8.0 * q));
    r.rel_dev_theta = std::fabs(r.theta_num / r.theta_asym - 1.0);
    r.rel_dev_delta1 = std::fabs(r.delta1_num / r.delta1_asym - 1.0);
    r.rel_dev_delta2 = std::fabs(r.delta2_num / r.delta2_asym - 1.0);
    r.fitted_c = std::max({r.rel_dev_theta, r.rel_dev_delta1, r.rel_dev_delta2}) / q;
    return r;
}

double distance_to_rectangle_boundary(complex p, double q) {
    const double x = p.real(), y = p.imag();
    const bool inside = x >= 0.0 && x <= 1.0 && y >= -q && y <= q;
    if (inside) return std::min({x, 1.0 - x, q - y, q + y});
    const double dx = std::max({0.0 - x, 0.0, x - 1.0});
    const double dy = std::max({-q - y, 0.0, y - q});
    return std::hypot(dx, dy);
}

nlohmann::json to_json(const AsymptoticsReport& r) {
    return {{"q", r.q},
            {"k", r.k},
            {"L_k", r.L_k},
            {"H_k", r.H_k},
            {"theta_num", r.theta_num},
            {"theta_asym", r.theta_asym},
            {"theta_two_k", r.theta_two_k},
            {"delta1_num", r.delta1_num},
            {"delta1_asym", r.delta1_asym},
            {"delta2_num", r.delta2_num},
            {"delta2_asym", r.delta2_asym},
            {"rel_dev_theta", r.rel_dev_theta},
            {"rel_dev_delta1", r.rel_dev_delta1},
            {"rel_dev_delta2", r.rel_dev_delta2},
            {"fitted_c", r.fitted_c}};
}

}  // namespace fuplab::conformal
