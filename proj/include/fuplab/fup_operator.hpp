#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fuplab/fft.hpp"
#include "fuplab/regular_sets.hpp"

namespace fuplab::fup {

using regular_sets::GridSet;
using Point = std::array<double, 2>;
using Matrix2 = std::array<std::array<double, 2>, 2>;  // row-major

// Cyclic: Z_n with n = N, x_j = j / N, xi_l = l, entries e^{-2 pi i j l / n} / sqrt(n);
// masks test the cell centers (j + 1/2) / N and l + 1/2. One axis only.
// Oversampled: n = period N oversampling points per axis,
// x_j = -period/2 + (j + 1/2) / (N oversampling), xi_l = (l - n/2 + 1/2) / period,
// entries e^{2 pi i x_j xi_l} / sqrt(n) per axis.
enum class GridModel { Cyclic, Oversampled };

struct Discretization {
    GridModel model = GridModel::Oversampled;
    int oversampling = 4;
    int period = 2;
};

enum class DiffeoKind { Identity, Shear, RadialBump };

// Identity; Shear: x + s x^2 / 2 in 1D, (x1 + s x2, x2) in 2D;
// RadialBump: x (1 + s exp(-|x|^2 / width^2)).
struct DiffeoSpec {
    int dimension = 1;
    DiffeoKind kind = DiffeoKind::Identity;
    double strength = 0.0;
    double width = 1.0;
    double D0 = 2.0;  // declared bound

    Point map(const Point& x) const;
    Matrix2 jacobian(const Point& x) const;
};

struct DiffeoCheck {
    double max_derivative = 0.0;          // sup |D Psi| (operator norm)
    double max_inverse_derivative = 0.0;  // sup |D Psi^{-1}|
    double max_second_derivative = 0.0;   // sup of the Frobenius norm of D^2 Psi
    double min_jacobian = 0.0;            // inf |det D Psi|
    double bound = 0.0;                   // max of the three norms, compared with D0
    double bound_sum = 0.0;               // sum of the three norms
    int lattice = 0;
    bool pass = false;
};

// Samples a lattice x lattice grid on [-1,1]^d.
DiffeoCheck check_diffeo(const DiffeoSpec& spec, int lattice = 41);
DiffeoKind diffeo_kind_from_string(const std::string& name);
std::string to_string(DiffeoKind kind);

struct FupInstance {
    int dimension = 1;
    double N = 1.0;
    GridSet X;
    GridSet Y;
    std::optional<Matrix2> y_frame;  // Y = frame * (cubes of Y); identity when absent
    Discretization grid;
    std::optional<DiffeoSpec> distortion;

    void validate() const;
    int points_per_axis() const;
    double physical_spacing() const;
    double frequency_spacing() const;
};

bool grid_contains(const GridSet& set, const Point& p);

enum class AssembleMode { Dense, MatrixFree };
inline constexpr std::size_t kDenseCap = 8192;

// A = 1_X U 1_Y for the unitary transform U of the model; rows index X grid points,
// columns index Y grid points (flat row-major indices into the full grid).
class FupOperator {
public:
    FupOperator(const FupInstance& instance, AssembleMode mode, std::size_t dense_cap = kDenseCap);
    ~FupOperator();
    FupOperator(FupOperator&&) noexcept;
    FupOperator& operator=(FupOperator&&) noexcept;

    std::size_t rows() const { return rows_.size(); }
    std::size_t cols() const { return cols_.size(); }
    AssembleMode mode() const { return mode_; }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    // Explicit entries, also available in matrix-free mode below the dense cap.
    Eigen::MatrixXcd dense() const;
    bool dense_allowed() const;

    std::vector<cplx> apply(const std::vector<cplx>& v) const;
    std::vector<cplx> apply_adjoint(const std::vector<cplx>& w) const;

    const std::vector<std::size_t>& row_indices() const { return rows_; }
    const std::vector<std::size_t>& col_indices() const { return cols_; }
    const FupInstance& instance() const { return instance_; }

private:
    std::vector<cplx> transform(const std::vector<cplx>& in, bool adjoint) const;

    FupInstance instance_;
    AssembleMode mode_;
    std::size_t dense_cap_;
    int n_ = 0;
    std::vector<std::size_t> rows_, cols_;
    Eigen::MatrixXcd matrix_;
    std::unique_ptr<Dft> dft_;
};

FupOperator assemble_operator(const FupInstance& instance, AssembleMode mode = AssembleMode::Dense,
                              std::size_t dense_cap = kDenseCap);

enum class NormMethod { Svd, Power };
std::string to_string(NormMethod m);

struct PowerOptions {
    double tolerance = 1e-8;
    int max_iterations = 10000;
    std::uint64_t seed = 1;
};

struct NormResult {
    double norm = 0.0;
    NormMethod method = NormMethod::Svd;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
};

NormResult operator_norm(const FupOperator& op, NormMethod method, const PowerOptions& opt = {});

// Family of test sets for the decay curve.
struct CurveSpec {
    int dimension = 1;
    int base = 3;
    std::vector<int> alphabet{0, 2};
    double rotation_deg = 0.0;  // 2D: Y is the product set rotated by this angle
    double eps0 = 0.1;          // frame condition |e1 . e2| < 1 - eps0
    Discretization grid;
    bool cross_check = true;    // run both methods whenever the dense cap allows
    PowerOptions power;
    std::size_t dense_cap = kDenseCap;
    int threads = 1;
};

// X = depth-k product set in [0,1]^d; Y = N (depth-k set), N = base^k, rotated in 2D and
// scaled by 1 / (|cos| + |sin|) to stay in [-N, N]^2.
FupInstance curve_instance(const CurveSpec& spec, int k);

struct CurveRow {
    int k = 0;
    double N = 0.0;
    std::size_t rows = 0, cols = 0;
    double norm = 0.0;
    NormMethod method = NormMethod::Svd;
    int iterations = 0;
    double residual = 0.0;
    bool converged = true;
    std::optional<double> power_norm;   // when both methods ran
    std::optional<double> agreement;    // |svd - power|
    std::size_t dim() const { return rows > cols ? rows : cols; }
};

struct BetaFit {
    double beta = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double residual_max = 0.0;
    int first_k = 0;
    std::size_t points = 0;
    bool excluded_first = false;
};

struct SubmultiplicativeCheck {
    int k1 = 0, k2 = 0;
    double lhs = 0.0, rhs = 0.0;
    bool holds = false;
};

struct NormCurve {
    std::vector<CurveRow> rows;
    BetaFit fit;
    bool monotone = true;           // nonincreasing norms
    bool norms_in_range = true;     // every norm in (0, 1 + 1e-12]
    double max_agreement = 0.0;
    std::vector<SubmultiplicativeCheck> submultiplicative;
};

// Least squares of -log norm on log N; drops the first point when at least 4 remain.
BetaFit fit_beta(const std::vector<int>& k, const std::vector<double>& N, const std::vector<double>& norms);
NormCurve fup_decay_curve(const CurveSpec& spec, const std::vector<int>& k_values);

// Smallest power of two period >= 2 meeting the phase-resolution rule for the distortion.
int resolving_period(const FupInstance& instance, const DiffeoSpec& diffeo);

struct DistortedNorm {
    double norm = 0.0;
    double phase_step = 0.0;  // largest phase change per frequency cell, in radians
    double max_x = 0.0;
    std::size_t rows = 0, cols = 0;
    DiffeoCheck diffeo;
};

// Dense quadrature of e^{2 pi i x . N Psi(eta / N)} |det D Psi(eta / N)| on X rows and
// Y columns of the oversampled grid; largest singular value.
DistortedNorm distorted_fup_norm(const FupInstance& instance);

// Iteration demo on the 1D grid x_j = (j - n/2) period / n.
struct DemoGrid {
    int n = 0;
    double period = 4.0;
    double spacing() const { return period / n; }
    double x(int j) const { return (j - n / 2) * spacing(); }
    double xi(int l) const { return (l - n / 2) / period; }
};

struct DemoResult {
    std::vector<double> norms;          // ||f_m|| on [-1, 1], m = 0..steps
    std::vector<double> ratios;
    std::vector<double> norms_on_X;
    std::vector<double> mollifier_leakage;
    double max_ratio = 0.0;
    bool contraction = false;           // every ratio < 1 (vacuous for f = 0)
    double C_phi = 0.0;
    double product_floor = 0.0;         // (1 - C_phi / L^{T-1})^steps
    double product_min_on_X = 0.0;      // min over X grid points of prod Psi
    bool product_check = false;
    double X_norm_bound = 0.0;          // product_floor^{-1} ||f_m||_{L2(X)}, when the floor is positive
    bool X_norm_check = false;
};

// f with spectrum on the Y grid points: complex Gaussian coefficients, seeded.
std::vector<cplx> band_limited_sample(const GridSet& Y, const DemoGrid& grid, std::uint64_t seed);

// Mollifier spectrum: normalized cubic B-spline on [-1, 1].
double mollifier_spectrum(double xi);

DemoResult iterate_damping_demo(const std::vector<cplx>& f, const DemoGrid& grid, const GridSet& X, int L,
                                int T, int steps, double leakage_tolerance = 1e-12);

nlohmann::json to_json(const DiffeoCheck& c);
nlohmann::json to_json(const NormCurve& c);
nlohmann::json to_json(const BetaFit& f);
nlohmann::json to_json(const DistortedNorm& d);
nlohmann::json to_json(const DemoResult& r);

}  // namespace fuplab::fup
