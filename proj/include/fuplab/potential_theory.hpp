#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <json.hpp>

namespace fuplab::potential {

using complex = std::complex<double>;

struct PointMasses {
    std::vector<complex> points;
    std::vector<double> weights;

    double total() const;
};

// sum_j w_j log|z - z_j|; -inf exactly when z is a point carrying positive weight.
double log_potential(complex z, const PointMasses& masses);

struct Disk {
    complex center;
    double radius = 0.0;
};

struct DiskCover {
    std::vector<Disk> disks;
    double H = 0.0;

    double radius_sum() const;
    // closed disks
    bool contains(complex z) const;
};

// Disks with radius sum <= 5H outside of which log_potential >= total mass * log(H/e).
//
// Grouping rule: every mass point z_j gets the largest R_j with mass(D(z_j, R_j)) >= total R_j / (2H).
// Points are taken in decreasing R_j and kept when D(z_j, R_j) misses every kept disk, so kept
// radii sum to at most 2H. A kept disk is widened to reach the half-radius disks of the points
// it blocked, which is at most 2.5 R_j.
DiskCover cartan_disks(const PointMasses& masses, double H);

double cartan_floor(double mass, double H);

// c * prod (z - a_j); the zero set carries the Riesz mass of log|F|.
struct Polynomial1 {
    complex leading{1.0, 0.0};
    std::vector<complex> zeros;

    complex operator()(complex z) const;
    double log_abs(complex z) const;
    bool is_zero() const { return leading == complex(0.0, 0.0); }
    PointMasses riesz_masses() const;
};

// Roots of sum_i c_i z^i via the companion matrix; an all-zero input gives the zero polynomial.
Polynomial1 polynomial_from_coefficients(const std::vector<complex>& coeffs);

// Poisson average of log|F| over the unit circle at the interior point w (trapezoid rule).
double poisson_average(const Polynomial1& F, complex w, int nodes = 4096);

struct RieszBoundsReport {
    double M = 0.0, m = 0.0, rho = 0.0, r = 0.0, r1 = 0.0;
    double mass_measured = 0.0, mass_bound = 0.0;
    double deviation_measured = 0.0, deviation_bound = 0.0;
    double c_measured = 0.0, c_bound = 0.0;

    bool mass_ok() const { return mass_measured <= mass_bound; }
    bool deviation_ok() const { return deviation_measured <= deviation_bound; }
    bool c_ok() const { return c_measured >= c_bound; }
    bool pass() const { return mass_ok() && deviation_ok() && c_ok(); }
};

// M is the largest Poisson average over |w| <= r, m the largest value of log|F| on |w| <= rho
// from a 512 x 256 polar grid; requires rho < r1 < r < 1.
RieszBoundsReport verify_riesz_bounds(const Polynomial1& F, double rho, double r, double r1);

struct DiskLowerBoundReport {
    double delta = 0.0, H = 0.0, M = 0.0, m = 0.0;
    double bound = 0.0;
    DiskCover cover;
    std::size_t probes = 0;
    std::size_t violations = 0;
    double min_value = 0.0;  // smallest log|F| seen at a probe outside the cover
};

// rho = 1 - 3 delta, r = 1 - delta, r1 = 1 - 2 delta; probes a grid x grid lattice of r1 D.
DiskLowerBoundReport check_disk_lower_bound(const Polynomial1& F, double delta, double H, int grid = 256);

// sum_{i,j} coeff[i][j] z1^i z2^j
struct Polynomial2 {
    std::vector<std::vector<complex>> coeff;

    complex operator()(complex z1, complex z2) const;
    double log_abs(complex z1, complex z2) const;
    bool is_constant() const;
    bool is_zero() const;
    Polynomial1 in_first(complex z2) const;   // z1 -> F(z1, z2)
    Polynomial1 in_second(complex z1) const;  // z2 -> F(z1, z2)
};

// Exceptional set in C^d: disks in the first coordinate, and over sampled good first
// coordinates a (d-1)-dimensional set in the remaining ones.
struct CartanSet {
    int dimension = 1;
    double H = 0.0;
    DiskCover first;
    std::vector<complex> slice_points;
    std::vector<double> slice_weights;
    std::vector<CartanSet> slices;
};

struct Cartan2 {
    Polynomial2 F;
    double H = 0.0, rho = 0.0, r = 0.0, r1 = 0.0, delta = 0.0;
    double M = 0.0, m = 0.0, L = 0.0;
    double bound = 0.0;  // m - (M - m)(L + 1)^2
    bool trivial = false;
    complex z2_star;
    DiskCover first;  // radius sum <= 5 r H

    // Disks in z2 for a first coordinate outside `first`; radius sum <= 5 r H.
    DiskCover second(complex z1) const;
    bool contains(complex z1, complex z2) const;
    // Slices at the midpoints of n equal cells of [-1,1] that avoid the first-level disks.
    CartanSet sample_real_slices(int n) const;
};

// M is the largest double Poisson average over the torus of radius r, m the largest value of
// log|F| on the torus of radius rho; the first level uses F(., z2*) at the maximizing z2*.
Cartan2 build_cartan2(const Polynomial2& F, double H, double rho, double r);

struct Cartan2ProbeReport {
    std::size_t probes = 0, outside = 0, violations = 0;
    double min_value = 0.0;
};

// Uniform probes in r1 D x r1 D (seeded).
Cartan2ProbeReport probe_cartan2(const Cartan2& set, std::size_t probes, unsigned long long seed, int threads = 1);

// Real trace inside [-1,1]^2: exact first-level intervals times the full width 2, plus the
// sampled second-level interval lengths weighted by their slice widths.
double trace_measure(const CartanSet& set);

// Seeded test families shared by the runner and the acceptance suite.
// 1..20 masses uniform in the unit disk with weights in [0.1, 1].
PointMasses seeded_masses(unsigned long long seed);
// Complex Gaussian leading coefficient, 1..8 zeros uniform in the disk of radius 1.8.
Polynomial1 seeded_polynomial(unsigned long long seed);
// Complex Gaussian coefficients of bidegree (d1, d2).
Polynomial2 seeded_polynomial2(unsigned long long seed, int d1, int d2);

struct CoverProbeReport {
    std::size_t probes = 0;      // cell centers of an n x n grid on [-1,1]^2 outside the cover
    std::size_t violations = 0;  // probes with potential below mass log(H / e)
    double min_value = 0.0;
    double floor = 0.0;
};
CoverProbeReport probe_cartan_cover(const PointMasses& masses, const DiskCover& cover, int n);

nlohmann::json to_json(const DiskCover& cover);
nlohmann::json to_json(const CoverProbeReport& r);
nlohmann::json to_json(const RieszBoundsReport& r);
nlohmann::json to_json(const DiskLowerBoundReport& r);
nlohmann::json to_json(const Cartan2ProbeReport& r);

}  // namespace fuplab::potential
