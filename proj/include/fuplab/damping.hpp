#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fuplab/fft.hpp"
#include "fuplab/regular_sets.hpp"

namespace fuplab::damping {

using regular_sets::GridSet;

// Symmetric grid: 2 half + 1 samples at (i - half) spacing.
struct SymmetricGrid {
    double spacing = 0.0;
    std::int64_t half = 0;

    std::size_t size() const { return static_cast<std::size_t>(2 * half + 1); }
    double extent() const { return static_cast<double>(half) * spacing; }
    double at(std::size_t i) const { return (static_cast<double>(i) - static_cast<double>(half)) * spacing; }
};

// Beyond the grid each side is extrapolated by a * |x|^beta (PowerLaw, fitted on the
// outer tenth) or by the mean of the outer tenth (Mean).
enum class TailModel { PowerLaw, Mean };

struct TailFit {
    double amplitude = 0.0;
    double exponent = 0.0;
};

// (1/pi) p.v. int f(t) (1/(x - t) + t/(t^2 + 1)) dt on a symmetric grid. Odd-offset
// quadrature rule evaluated by one FFT convolution, plus the closed tail of the model.
class ModifiedHilbert {
public:
    explicit ModifiedHilbert(const SymmetricGrid& grid);
    ~ModifiedHilbert();
    std::vector<double> apply(const std::vector<double>& f, TailModel model = TailModel::PowerLaw);
    const SymmetricGrid& grid() const { return grid_; }
    // fits used by the last apply: {left, right}
    const std::array<TailFit, 2>& last_tails() const { return tails_; }

private:
    SymmetricGrid grid_;
    std::unique_ptr<RealConvolver> conv_;
    std::array<TailFit, 2> tails_{};
};

std::vector<double> hilbert_modified(const std::vector<double>& f, double spacing,
                                     TailModel model = TailModel::PowerLaw);

// Omega = -log(omega) sampled on a symmetric grid; omega in (0, 1] means Omega >= 0.
struct Weight {
    SymmetricGrid grid;
    std::vector<double> log_inverse;
    double alpha = 0.5;
    std::optional<GridSet> adapted_to;

    void validate() const;
    double omega_at_zero() const;
};

// Largest power of two not above min(2^-10, sigma / 64).
double default_spacing(double sigma);
// Multiple of 64 covering 4 T, 4 N and 64, with T = 20 / (pi sigma).
double default_extent(double sigma, double set_radius = 0.0);

// Omega = c <x>^{1/2}
Weight subexponential_weight(double c, const SymmetricGrid& grid);

// Omega = power * (<x>^{1/2} + chi (Theta(|x|) |x| - <x>^{1/2})), chi a smooth blend equal
// to 1 on Y and 0 at distance >= 1 from Y, switched on over 9 <= |x| <= 10.
Weight regular_set_weight(const GridSet& Y, double alpha, double power, const SymmetricGrid& grid);

struct MultiplierInfo {
    double sigma = 0.0;
    double T = 0.0;
    bool sigma_clamped = false;
    double hypothesis_value = 0.0;  // max |H(Omega)'| over the inner 90% of the grid
    double hypothesis_bound = 0.0;  // (pi / 2) sigma
    double s0_at_zero = 0.0;
    bool half_shift = false;        // staircase uses floor(s0 / pi - 1/2)
    std::vector<double> jumps;      // where the staircase increases by one
    std::int64_t k_central_min = 0, k_central_max = 0;  // over [-5/4, 5/4]
    bool k_nondecreasing = true;
    double s0_max_drop = 0.0;       // largest decrease of s0 between neighbors, inner 90%
    double M_central_min = 0.0, M_central_max = 0.0;    // over [-3/4, 3/4]
    double M_lower_margin = 0.0;    // min of M + 1 + 6 log(|x| + 2)
    double lower_bound_ratio = 0.0; // min over [-3/4, 3/4] of |psihat| / (sigma^10 omega / (4e11))
    double leakage = 0.0;
    double normalization = 1.0;     // constant applied after construction
};

struct DampingFunction {
    int dimension = 1;
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, alpha = 0.5;
    double C_R = 0.0, delta1 = 0.0;  // regularity data the constants came from
    double support_lo = 0.0, support_hi = 0.0;  // per axis

    // n samples per axis (n even) at (i - n/2) spectral_spacing; row-major in 2D
    int n = 0;
    double spectral_spacing = 0.0;
    std::vector<cplx> spectral;
    // physical samples at (k - n/2) / (n spectral_spacing)
    std::vector<cplx> physical;

    MultiplierInfo multiplier;

    // Product structure in 2D: psihat(xi) = prefactor * prod_j prod_i factor_{j,i}(eta_{j,i}),
    // with xi = eta_{j,1} e_{j,1} + eta_{j,2} e_{j,2}.
    std::vector<std::array<std::array<double, 2>, 2>> frames;
    std::vector<std::array<std::shared_ptr<const DampingFunction>, 2>> factors;
    double prefactor = 1.0;

    double physical_spacing() const { return 1.0 / (n * spectral_spacing); }
    double spectral_abscissa(int i) const { return (i - n / 2) * spectral_spacing; }
    double physical_abscissa(int k) const { return (k - n / 2) * physical_spacing(); }
    // Linear interpolation in 1D, zero outside the grid; exact product formula in 2D.
    cplx spectral_at(double xi) const;
    cplx spectral_at(double xi1, double xi2) const;
    // Recomputes physical samples from the spectral ones.
    void synthesize();
};

struct MultiplierOptions {
    double leakage_tolerance = 1e-6;
    double ramp_width = 0.25;   // smoothing scale of the staircase jumps
    double ramp_window = 50.0;  // half-width where jump corrections are applied
};

// Outer function with modulus (1/3) e^{-M} omega / (x^2 + T^2)^5 and phase e^{-i pi sigma x}
// (-1)^{k(x)}; physical support [0, sigma].
DampingFunction build_multiplier(const Weight& omega, double sigma, const MultiplierOptions& opt = {});

struct RegularDampingOptions {
    double iota = 1e-2;
    std::optional<double> delta1;  // default: box-counting dimension of Y
    std::optional<double> C_R;     // default: measured on scales 2..N
    MultiplierOptions multiplier;
};

// Uniform cube masses resolution^delta, checked on scales [max(2, h), radius].
double regularity_constant(const GridSet& Y, double delta);
double box_dimension(const GridSet& Y);

DampingFunction build_regular_damping(const GridSet& Y, double c1, const RegularDampingOptions& opt = {});

struct AdmissibleCover {
    std::array<std::array<double, 2>, 2> axes;  // unit vectors e_{j,1}, e_{j,2}
    std::array<GridSet, 2> sets;               // 1D sets along each axis
};

struct AdmissibleSpec {
    std::vector<AdmissibleCover> covers;
    double delta1 = 0.5;
    double eps0 = 0.1;
};

struct ProductOptions {
    double iota = 1e-2;
    std::optional<double> C_R;
    double spectral_spacing = 0.0;  // 2D grid; default 1 / (4 c1)
    MultiplierOptions multiplier;
};

DampingFunction product_damping(const AdmissibleSpec& Y, double c1, const ProductOptions& opt = {});
// Points eta_1 e_1 + eta_2 e_2 over cube sample points of both sets, for every cover.
std::vector<std::array<double, 2>> admissible_points(const AdmissibleSpec& Y);

struct BulletParams {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, alpha = 0.5;
    double leakage_tolerance = 1e-6;
    int threads = 1;
};

struct DampingReport {
    double support_leakage = 0.0;
    double lower_bound_measured = 0.0;  // 1D: min |psihat| on [-3/4, 3/4]; 2D: L2 norm on [-1,1]^2
    double l2_unit_cube = 0.0;
    double global_decay_margin = 0.0;   // min (<xi>^{-d} - |psihat|)
    double subexponential_margin = 0.0; // min (exp(-c3 <xi>^{1/2}) - |psihat|)
    double Y_decay_margin = 0.0;        // min over Y points of (exp(-c3 Theta |xi|_1 |xi|_1) - |psihat|)
    std::size_t y_points = 0;
    std::array<bool, 4> bullets{};      // support, lower bound, global decay, decay on Y
    bool pass = false;
};

// 1D: Y points are the spectral grid points inside Y. 2D: Y cube sample points.
DampingReport verify_damping(const DampingFunction& psi, const GridSet& Y, const BulletParams& params);
DampingReport verify_damping(const DampingFunction& psi, const std::vector<std::array<double, 2>>& y_points,
                             const BulletParams& params);
BulletParams bullet_params(const DampingFunction& psi);

// 1D container sampling a given spectral profile on n points (controls and tests).
DampingFunction from_spectral(const std::function<cplx(double)>& profile, int n, double spectral_spacing,
                              double support_lo, double support_hi);

nlohmann::json to_json(const MultiplierInfo& m);
nlohmann::json to_json(const DampingReport& r);

}  // namespace fuplab::damping
