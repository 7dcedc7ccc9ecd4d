#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fuplab/fft.hpp"

namespace fuplab::localization {

// Uniform periodic grid: n points per axis with spacing dx; sample j sits at (j - n/2) dx.
struct Grid {
    int n = 4096;
    double dx = 0.0625;
};

// Row-major samples on a square torus of period n dx. The spectral side uses
// fhat(xi) = int f(x) e^{-2 pi i x.xi} dx sampled at xi_l = (l - n/2) / (n dx).
struct SampledFunction {
    int dimension = 1;
    Grid grid;
    std::vector<cplx> samples;
    std::vector<cplx> spectral;  // empty when not stored
    double central_mass = 1.0;   // fraction of the norm in the window |x|_inf <= period / 16

    double period() const { return grid.n * grid.dx; }
    double dxi() const { return 1.0 / period(); }
    double norm_squared() const;
    double spectral_norm_squared() const;
};

std::vector<cplx> to_spectral(const SampledFunction& f);
std::vector<cplx> from_spectral(const std::vector<cplx>& spectral, int dimension, const Grid& grid);
// |norm^2 - spectral norm^2| / norm^2 (0 for the zero function)
double parseval_defect(const SampledFunction& f);

// Seeded smooth spectrum supported in |xi|_1 <= band: complex Gaussian amplitudes on a few
// C-infinity bumps, so the physical side decays quickly. Unit L2 norm.
SampledFunction band_limited_sample(std::uint64_t seed, double band, int dimension, const Grid& grid);
// e^{2 pi i xi.x} with xi = mode * dxi on every axis.
SampledFunction plane_wave(const std::vector<int>& mode, int dimension, const Grid& grid);
// band_limited_sample multiplied on the spectral side by e^{-2 Theta(xi) |xi|_1}, renormalized.
SampledFunction damped_sample(std::uint64_t seed, double band, double alpha, int dimension, const Grid& grid);
// f(x - shift) for an integer lattice vector; needs an integer number of samples per unit.
SampledFunction shift_lattice(const SampledFunction& f, const std::vector<int>& shift);
SampledFunction zero_function(int dimension, const Grid& grid);

// One sub-cube of side lambda^{1/d} per unit lattice cell, at a fixed offset or at seeded random offsets.
struct IntervalFamily {
    int dimension = 1;
    double lambda = 0.25;
    double offset = 0.0;  // fixed placement, per axis
    bool random = false;
    std::uint64_t seed = 0;
    double offset_step = 1.0 / 16.0;  // random offsets are multiples of this
    std::vector<int> shift;  // lattice translation of the whole family

    void validate() const;
};

struct LocalizationReport {
    int dimension = 1;
    double q = 0.0, lambda = 0.0, kappa_used = 0.0;
    double lhs = 0.0, sum_local = 0.0, weight_norm = 0.0;
    double empirical_constant = 0.0;
    double quantization = 0.0;  // |grid measure of a sub-cube - lambda|
    bool finite = true;
    bool degenerate = false;
    std::string constant_form;  // symbolic size of the theoretical constant
};

// exp(-c_tilde / q) (-log lambda)^{-d}
double default_kappa(double q, double lambda, int dimension, double c_tilde = 1.0);

// Sum over lattice cells of the squared norm on the family's sub-cubes (composite trapezoid).
double local_mass(const SampledFunction& f, const IntervalFamily& family, double* quantization = nullptr);

LocalizationReport localization_check(const SampledFunction& f, const IntervalFamily& family, double q, double kappa,
                                      double q_max = 0.5);

struct UpThetaReport {
    double alpha = 0.0, A = 0.0;
    double A_measured = 0.0;  // |e^{Theta |xi|_1} fhat| / |f|
    double norm = 0.0, local_norm = 0.0, ratio = 0.0;
    bool degenerate = false;
};

// Theta(xi) = log(2 + |xi|_1)^{-alpha}; rejects f when A_measured exceeds A.
UpThetaReport up_theta_check(const SampledFunction& f, double alpha, double A, const IntervalFamily& family);

struct EnvelopeConfig {
    int dimension = 1;
    std::vector<double> qs = {0.1, 0.05, 0.025};
    double lambda = 0.25;
    int seeds = 20;
    double band = 1.0;
    double c_tilde = 1.0;
    Grid grid;
    int threads = 1;
};

struct EnvelopeRow {
    double q = 0.0;
    double K = 0.0;          // max empirical constant over seeds
    double K_refined = 0.0;  // same on the grid with half the spacing
    double relative_change = 0.0;
    bool finite = true;
};

struct EnvelopeReport {
    std::vector<EnvelopeRow> rows;
    double min_central_mass = 1.0;
    bool growth_at_most_linear = true;

    bool stable(double tol) const;
};

// Random offsets seeded by the function seed; kappa from default_kappa.
EnvelopeReport localization_envelope(const EnvelopeConfig& cfg);

// Secant slopes of log K against 1/q never exceed the first (nonnegative part).
bool growth_at_most_linear(const std::vector<double>& qs, const std::vector<double>& K);

nlohmann::json to_json(const LocalizationReport& r);
nlohmann::json to_json(const UpThetaReport& r);
nlohmann::json to_json(const EnvelopeReport& r);

}  // namespace fuplab::localization
