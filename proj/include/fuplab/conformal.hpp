#pragma once

#include <complex>

#include <json.hpp>

namespace fuplab::conformal {

using complex = std::complex<double>;

// Complete integral over [0,1] of dt / sqrt((1-t^2)(1-k^2 t^2)).
double elliptic_L(double k);
// Integral over [0,inf) of ds / sqrt((1+s^2)(1+k^2 s^2)).
double elliptic_H(double k);
// Modulus with L(k)/H(k) = q, by bisection in log k.
double solve_k_for_q(double q);

// Path integral of dt / sqrt((1-t^2)(1-k^2 t^2)) from 0 to z in the closed upper half-plane.
// Real z with |z| > 1 lies on a branch segment and is accepted only with limit_from_above.
complex arcsn(complex z, double k, bool limit_from_above = false);

class ConformalRectangleMap {
public:
    explicit ConformalRectangleMap(double q);

    double q() const { return q_; }
    double k() const { return k_; }
    double L_k() const { return L_; }
    double H_k() const { return H_; }

    // Maps the closed unit disk onto the rectangle with vertices +-iq, 1+-iq.
    complex phi_q(complex w) const;
    // Derivative of phi_q for |w| < 1.
    complex derivative(complex w) const;
    // Rectangle map on the upper half-plane, -i/H arcsn(z).
    complex F_q(complex z) const;

private:
    double q_, k_, L_, H_;
};

struct AsymptoticsReport {
    double q = 0.0;
    double k = 0.0;
    double L_k = 0.0;
    double H_k = 0.0;
    double theta_num = 0.0;
    double theta_asym = 0.0;
    double theta_two_k = 0.0;
    double delta1_num = 0.0;
    double delta1_asym = 0.0;
    double delta2_num = 0.0;
    double delta2_asym = 0.0;
    double rel_dev_theta = 0.0;
    double rel_dev_delta1 = 0.0;
    double rel_dev_delta2 = 0.0;
    // max relative deviation divided by q
    double fitted_c = 0.0;
};

// Requires 0 < q <= 0.3.
AsymptoticsReport asymptotics_report(double q);

// Smallest delta in (0,1) with Re phi_q(1 - delta) = target, target in (0,1).
double preimage_on_radius(const ConformalRectangleMap& map, double target);

// Distance from a point to the boundary of the rectangle [0,1] x [-q,q].
double distance_to_rectangle_boundary(complex p, double q);

nlohmann::json to_json(const AsymptoticsReport& r);

}  // namespace fuplab::conformal
