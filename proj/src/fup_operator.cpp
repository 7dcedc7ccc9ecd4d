#include "fuplab/fup_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fuplab/constants.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/parallel.hpp"
#include "fuplab/quadrature.hpp"
#include "fuplab/random.hpp"

namespace fuplab::fup {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double op_norm2(const Matrix2& J) {
    const double a = J[0][0], b = J[0][1], c = J[1][0], d = J[1][1];
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
    return std::sqrt(0.5 * (s + disc));
}

double min_singular2(const Matrix2& J) {
    const double a = J[0][0], b = J[0][1], c = J[1][0], d = J[1][1];
    const double s = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double disc = std::sqrt(std::max(0.0, s * s - 4.0 * det * det));
    return std::sqrt(std::max(0.0, 0.5 * (s - disc)));
}

Matrix2 inverse2(const Matrix2& m) {
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det == 0.0) throw ConfigError("frame matrix is singular");
    return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

Point apply2(const Matrix2& m, const Point& p) {
    return {m[0][0] * p[0] + m[0][1] * p[1], m[1][0] * p[0] + m[1][1] * p[1]};
}

bool set_within(const GridSet& s, int d, double bound, const Matrix2* frame) {
    if (s.empty()) return true;
    const double tol = 1e-12 * std::max(1.0, bound);
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            Point c{s.extent[0][a], d == 2 ? s.extent[1][b] : 0.0};
            if (frame) c = apply2(*frame, c);
            for (int i = 0; i < d; ++i)
                if (std::abs(c[i]) > bound + tol) return false;
        }
    }
    return true;
}

// Exact phase e^{2 pi i k / den} through a table indexed by k mod den.
struct PhaseTable {
    std::int64_t den = 1;
    std::vector<cplx> table;
    explicit PhaseTable(std::int64_t d) : den(d), table(static_cast<std::size_t>(d)) {
        for (std::int64_t k = 0; k < d; ++k)
            table[static_cast<std::size_t>(k)] = std::polar(1.0, kTwoPi * static_cast<double>(k) / static_cast<double>(d));
    }
    cplx operator()(std::int64_t k) const {
        k %= den;
        if (k < 0) k += den;
        return table[static_cast<std::size_t>(k)];
    }
};

// Per-axis phase (a i + b)(a l + b) / den of the model.
struct AxisPhase {
    std::int64_t a = 1, b = 0, den = 1;
    int sign = 1;
};

AxisPhase axis_phase(const FupInstance& inst) {
    const std::int64_t n = inst.points_per_axis();
    if (inst.grid.model == GridModel::Cyclic) return {1, 0, n, -1};
    return {2, 1 - n, 4 * n, 1};
}

struct GridPoints {
    std::vector<std::size_t> rows, cols;
    std::vector<Point> x, xi;
};

double x_coord(const FupInstance& inst, std::int64_t j) {
    if (inst.grid.model == GridModel::Cyclic) return static_cast<double>(j) / inst.N;
    return -0.5 * inst.grid.period + (static_cast<double>(j) + 0.5) * inst.physical_spacing();
}

double xi_coord(const FupInstance& inst, std::int64_t l) {
    const std::int64_t n = inst.points_per_axis();
    if (inst.grid.model == GridModel::Cyclic) return static_cast<double>(l);
    return (static_cast<double>(l - n / 2) + 0.5) * inst.frequency_spacing();
}

// Mask sample positions: cell centers in the cyclic model, grid points otherwise.
double x_mask(const FupInstance& inst, std::int64_t j) {
    if (inst.grid.model == GridModel::Cyclic) return (static_cast<double>(j) + 0.5) / inst.N;
    return x_coord(inst, j);
}

double xi_mask(const FupInstance& inst, std::int64_t l) {
    if (inst.grid.model == GridModel::Cyclic) return static_cast<double>(l) + 0.5;
    return xi_coord(inst, l);
}

GridPoints collect_points(const FupInstance& inst) {
    GridPoints g;
    const std::int64_t n = inst.points_per_axis();
    const int d = inst.dimension;
    std::optional<Matrix2> inv;
    if (inst.y_frame) inv = inverse2(*inst.y_frame);
    // axis candidates first, so 2D scans only the X bounding box
    auto axis_range = [&](const GridSet& s, int axis, bool physical, const Matrix2* frame_inv) {
        std::vector<std::int64_t> idx;
        if (s.empty()) return idx;
        double lo = s.extent[axis][0], hi = s.extent[axis][1];
        if (frame_inv) {
            lo = -std::numeric_limits<double>::infinity();
            hi = std::numeric_limits<double>::infinity();
        }
        for (std::int64_t j = 0; j < n; ++j) {
            const double p = physical ? x_mask(inst, j) : xi_mask(inst, j);
            if (p >= lo && p <= hi) idx.push_back(j);
        }
        return idx;
    };
    const auto x0 = axis_range(inst.X, 0, true, nullptr);
    const auto x1 = d == 2 ? axis_range(inst.X, 1, true, nullptr) : std::vector<std::int64_t>{0};
    for (auto j0 : x0) {
        for (auto j1 : x1) {
            const Point p{x_mask(inst, j0), d == 2 ? x_mask(inst, j1) : 0.0};
            if (!grid_contains(inst.X, p)) continue;
            g.rows.push_back(d == 2 ? static_cast<std::size_t>(j0 * n + j1) : static_cast<std::size_t>(j0));
            g.x.push_back({x_coord(inst, j0), d == 2 ? x_coord(inst, j1) : 0.0});
        }
    }
    const Matrix2* fi = inv ? &*inv : nullptr;
    const auto l0 = axis_range(inst.Y, 0, false, fi);
    const auto l1 = d == 2 ? axis_range(inst.Y, 1, false, fi) : std::vector<std::int64_t>{0};
    for (auto i0 : l0) {
        for (auto i1 : l1) {
            Point p{xi_mask(inst, i0), d == 2 ? xi_mask(inst, i1) : 0.0};
            if (fi) p = apply2(*fi, p);
            if (!grid_contains(inst.Y, p)) continue;
            g.cols.push_back(d == 2 ? static_cast<std::size_t>(i0 * n + i1) : static_cast<std::size_t>(i0));
            g.xi.push_back({xi_coord(inst, i0), d == 2 ? xi_coord(inst, i1) : 0.0});
        }
    }
    return g;
}

double largest_singular_value(const Eigen::MatrixXcd& A) {
    if (A.size() == 0) return 0.0;
    if (std::min(A.rows(), A.cols()) <= 1024) {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
        return svd.singularValues()(0);
    }
    // Gram matrix on the smaller side, Hermitian eigendecomposition
    const bool tall = A.rows() >= A.cols();
    const Eigen::Index m = tall ? A.cols() : A.rows();
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(m, m);
    if (tall)
        G.selfadjointView<Eigen::Lower>().rankUpdate(A.adjoint());
    else
        G.selfadjointView<Eigen::Lower>().rankUpdate(A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

// ---------------------------------------------------------------- diffeomorphisms

Point DiffeoSpec::map(const Point& x) const {
    switch (kind) {
        case DiffeoKind::Identity: return x;
        case DiffeoKind::Shear:
            if (dimension == 1) return {x[0] + 0.5 * strength * x[0] * x[0], 0.0};
            return {x[0] + strength * x[1], x[1]};
        case DiffeoKind::RadialBump: {
            const double r2 = dimension == 1 ? x[0] * x[0] : x[0] * x[0] + x[1] * x[1];
            const double g = 1.0 + strength * std::exp(-r2 / (width * width));
            return {x[0] * g, dimension == 1 ? 0.0 : x[1] * g};
        }
    }
    return x;
}

Matrix2 DiffeoSpec::jacobian(const Point& x) const {
    Matrix2 J{{{1.0, 0.0}, {0.0, 1.0}}};
    switch (kind) {
        case DiffeoKind::Identity: break;
        case DiffeoKind::Shear:
            if (dimension == 1)
                J[0][0] = 1.0 + strength * x[0];
            else
                J[0][1] = strength;
            break;
        case DiffeoKind::RadialBump: {
            const double w2 = width * width;
            const double r2 = dimension == 1 ? x[0] * x[0] : x[0] * x[0] + x[1] * x[1];
            const double e = strength * std::exp(-r2 / w2);
            const double g = 1.0 + e;
            if (dimension == 1) {
                J[0][0] = g - 2.0 * e * x[0] * x[0] / w2;
            } else {
                for (int i = 0; i < 2; ++i)
                    for (int k = 0; k < 2; ++k) J[i][k] = (i == k ? g : 0.0) - 2.0 * e * x[i] * x[k] / w2;
            }
            break;
        }
    }
    return J;
}

DiffeoCheck check_diffeo(const DiffeoSpec& spec, int lattice) {
    if (spec.dimension < 1 || spec.dimension > 2) throw ConfigError("diffeo dimension must be 1 or 2");
    if (lattice < 2) throw ConfigError("diffeo lattice needs at least 2 points per axis");
    if (!(spec.width > 0.0)) throw ConfigError("diffeo width must be positive");
    if (!(spec.D0 >= 1.0)) throw ConfigError("diffeo bound D0 must be at least 1");
    DiffeoCheck c;
    c.lattice = lattice;
    c.min_jacobian = std::numeric_limits<double>::infinity();
    const int d = spec.dimension;
    const double h = 1e-5;
    const int m1 = d == 2 ? lattice : 1;
    for (int a = 0; a < lattice; ++a) {
        for (int b = 0; b < m1; ++b) {
            const Point x{-1.0 + 2.0 * a / (lattice - 1), d == 2 ? -1.0 + 2.0 * b / (lattice - 1) : 0.0};
            const Matrix2 J = spec.jacobian(x);
            double norm, inv, det;
            if (d == 1) {
                norm = std::abs(J[0][0]);
                det = J[0][0];
                inv = det != 0.0 ? 1.0 / std::abs(det) : std::numeric_limits<double>::infinity();
            } else {
                norm = op_norm2(J);
                det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
                const double smin = min_singular2(J);
                inv = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
            }
            double second = 0.0;
            for (int k = 0; k < d; ++k) {
                Point xp = x, xm = x;
                xp[k] += h;
                xm[k] -= h;
                const Matrix2 Jp = spec.jacobian(xp), Jm = spec.jacobian(xm);
                for (int i = 0; i < d; ++i)
                    for (int l = 0; l < d; ++l) {
                        const double v = (Jp[i][l] - Jm[i][l]) / (2.0 * h);
                        second += v * v;
                    }
            }
            c.max_derivative = std::max(c.max_derivative, norm);
            c.max_inverse_derivative = std::max(c.max_inverse_derivative, inv);
            c.max_second_derivative = std::max(c.max_second_derivative, std::sqrt(second));
            c.min_jacobian = std::min(c.min_jacobian, std::abs(det));
        }
    }
    c.bound = std::max({c.max_derivative, c.max_inverse_derivative, c.max_second_derivative});
    c.bound_sum = c.max_derivative + c.max_inverse_derivative + c.max_second_derivative;
    c.pass = c.bound <= spec.D0 && c.min_jacobian >= 1.0 / spec.D0;
    return c;
}

DiffeoKind diffeo_kind_from_string(const std::string& name) {
    if (name == "identity") return DiffeoKind::Identity;
    if (name == "shear") return DiffeoKind::Shear;
    if (name == "radial-bump") return DiffeoKind::RadialBump;
    throw ConfigError("unknown diffeomorphism family: " + name);
}

std::string to_string(DiffeoKind kind) {
    switch (kind) {
        case DiffeoKind::Identity: return "identity";
        case DiffeoKind::Shear: return "shear";
        case DiffeoKind::RadialBump: return "radial-bump";
    }
    return "identity";
}

// ---------------------------------------------------------------- instances

bool grid_contains(const GridSet& set, const Point& p) {
    if (set.empty()) return false;
    const int d = set.dimension;
    std::array<std::array<std::int64_t, 2>, 2> cand{};
    std::array<int, 2> count{1, 1};
    for (int a = 0; a < d; ++a) {
        const double t = (p[a] - set.origin[a]) / set.resolution;
        const double f = std::floor(t);
        cand[a][0] = static_cast<std::int64_t>(f);
        if (t == f) cand[a][count[a]++] = cand[a][0] - 1;  // on a cube boundary
    }
    for (int i = 0; i < count[0]; ++i) {
        for (int j = 0; j < (d == 2 ? count[1] : 1); ++j) {
            const regular_sets::Index idx{cand[0][i], d == 2 ? cand[1][j] : 0};
            if (std::binary_search(set.cubes.begin(), set.cubes.end(), idx)) return true;
        }
    }
    return false;
}

int FupInstance::points_per_axis() const {
    if (grid.model == GridModel::Cyclic) return static_cast<int>(std::llround(N));
    return static_cast<int>(std::llround(grid.period * N * grid.oversampling));
}

double FupInstance::physical_spacing() const {
    if (grid.model == GridModel::Cyclic) return 1.0 / N;
    return 1.0 / (N * grid.oversampling);
}

double FupInstance::frequency_spacing() const {
    if (grid.model == GridModel::Cyclic) return 1.0;
    return 1.0 / grid.period;
}

void FupInstance::validate() const {
    if (dimension < 1 || dimension > 2) throw ConfigError("fup instance: dimension must be 1 or 2");
    if (!(N >= 1.0)) throw ConfigError("fup instance: N must be at least 1");
    for (const GridSet* s : {&X, &Y})
        if (!s->empty() && s->dimension != dimension) throw ConfigError("fup instance: set dimension mismatch");
    if (!set_within(X, dimension, 1.0, nullptr)) throw ConfigError("fup instance: X must lie in [-1,1]^d");
    if (!set_within(Y, dimension, N, y_frame ? &*y_frame : nullptr))
        throw ConfigError("fup instance: Y must lie in [-N,N]^d");
    if (y_frame && dimension != 2) throw ConfigError("fup instance: a frame for Y needs d = 2");
    if (grid.model == GridModel::Cyclic) {
        if (dimension != 1) throw ConfigError("fup instance: the cyclic model is one-dimensional");
        if (std::abs(N - std::round(N)) > 1e-9) throw ConfigError("fup instance: cyclic model needs integer N");
        if (distortion) throw ConfigError("fup instance: distortion needs the oversampled model");
        auto aligned = [](double r) { return r >= 1.0 - 1e-9 && std::abs(r - std::round(r)) <= 1e-9; };
        if (!X.empty() && !aligned(X.resolution * N)) throw ConfigError("fup instance: X cubes off the 1/N lattice");
        if (!Y.empty() && !aligned(Y.resolution)) throw ConfigError("fup instance: Y cubes off the integer lattice");
        return;
    }
    if (grid.oversampling < 1 || grid.period < 2) throw ConfigError("fup instance: oversampling >= 1, period >= 2");
    const double n = grid.period * N * grid.oversampling;
    if (std::abs(n - std::round(n)) > 1e-9) throw ConfigError("fup instance: period N oversampling must be an integer");
    if (!X.empty() && X.resolution < 2.0 * physical_spacing() - 1e-12)
        throw ConfigError("fup instance: X cubes must span at least two physical grid cells");
    if (!Y.empty()) {
        const double stretch = y_frame ? min_singular2(*y_frame) : 1.0;
        if (Y.resolution * stretch < 2.0 * frequency_spacing() - 1e-12)
            throw ConfigError("fup instance: Y cubes must span at least two frequency grid cells");
    }
    if (distortion && distortion->dimension != dimension) throw ConfigError("fup instance: diffeo dimension mismatch");
}

// ---------------------------------------------------------------- operator

FupOperator::FupOperator(const FupInstance& instance, AssembleMode mode, std::size_t dense_cap)
    : instance_(instance), mode_(mode), dense_cap_(dense_cap) {
    instance_.validate();
    n_ = instance_.points_per_axis();
    auto pts = collect_points(instance_);
    rows_ = std::move(pts.rows);
    cols_ = std::move(pts.cols);
    if (mode_ == AssembleMode::Dense) {
        if (!dense_allowed())
            throw ConfigError("fup operator: " + std::to_string(rows_.size()) + " x " + std::to_string(cols_.size()) +
                              " exceeds the dense cap; use the matrix-free mode");
        matrix_ = dense();
    } else {
        std::vector<int> dims(static_cast<std::size_t>(instance_.dimension), n_);
        dft_ = std::make_unique<Dft>(dims);
    }
}

FupOperator::~FupOperator() = default;
FupOperator::FupOperator(FupOperator&&) noexcept = default;
FupOperator& FupOperator::operator=(FupOperator&&) noexcept = default;

bool FupOperator::dense_allowed() const { return rows_.size() <= dense_cap_ && cols_.size() <= dense_cap_; }

Eigen::MatrixXcd FupOperator::dense() const {
    if (matrix_.size() > 0) return matrix_;
    if (!dense_allowed()) throw ConfigError("fup operator: dense matrix over the cap");
    const AxisPhase ph = axis_phase(instance_);
    const PhaseTable table(ph.den);
    const std::size_t n = static_cast<std::size_t>(n_);
    const int d = instance_.dimension;
    const double scale = std::pow(static_cast<double>(n_), -0.5 * d);
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(cols_.size()));
    auto lin = [&](std::int64_t i) { return ph.a * i + ph.b; };
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        const std::int64_t l0 = d == 2 ? static_cast<std::int64_t>(cols_[c] / n) : static_cast<std::int64_t>(cols_[c]);
        const std::int64_t l1 = d == 2 ? static_cast<std::int64_t>(cols_[c] % n) : 0;
        for (std::size_t r = 0; r < rows_.size(); ++r) {
            const std::int64_t j0 = d == 2 ? static_cast<std::int64_t>(rows_[r] / n) : static_cast<std::int64_t>(rows_[r]);
            const std::int64_t j1 = d == 2 ? static_cast<std::int64_t>(rows_[r] % n) : 0;
            std::int64_t k = (lin(j0) * lin(l0)) % ph.den;
            if (d == 2) k += (lin(j1) * lin(l1)) % ph.den;
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table(ph.sign * k) * scale;
        }
    }
    return A;
}

// (a j + b)(a l + b) = a^2 j l + a b j + a b l + b^2 with a^2 / den = 1 / n: a DFT between
// two diagonal phases.
std::vector<cplx> FupOperator::transform(const std::vector<cplx>& in, bool adjoint) const {
    const AxisPhase ph = axis_phase(instance_);
    const PhaseTable table(ph.den);
    const int d = instance_.dimension;
    const std::size_t n = static_cast<std::size_t>(n_);
    const int sign = adjoint ? -ph.sign : ph.sign;
    auto pre = [&](std::size_t flat) {
        cplx p = 1.0;
        const std::size_t idx[2] = {d == 2 ? flat / n : flat, d == 2 ? flat % n : 0};
        for (int a = 0; a < d; ++a) p *= table(sign * ph.a * ph.b * static_cast<std::int64_t>(idx[a]));
        return p;
    };
    const cplx kappa = std::pow(table(sign * ph.b * ph.b), d) * std::pow(static_cast<double>(n_), -0.5 * d);
    const auto& src = adjoint ? rows_ : cols_;
    const auto& dst = adjoint ? cols_ : rows_;
    std::vector<cplx> buf(dft_->size(), cplx(0.0));
    for (std::size_t i = 0; i < src.size(); ++i) buf[src[i]] = in[i] * pre(src[i]);
    if (sign > 0)
        dft_->backward(buf);
    else
        dft_->forward(buf);
    std::vector<cplx> out(dst.size());
    for (std::size_t i = 0; i < dst.size(); ++i) out[i] = buf[dst[i]] * pre(dst[i]) * kappa;
    return out;
}

std::vector<cplx> FupOperator::apply(const std::vector<cplx>& v) const {
    if (v.size() != cols_.size()) throw ConfigError("fup operator: input length must equal the column count");
    if (mode_ == AssembleMode::Dense) {
        Eigen::Map<const Eigen::VectorXcd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
        Eigen::VectorXcd w = matrix_ * vv;
        return {w.data(), w.data() + w.size()};
    }
    return transform(v, false);
}

std::vector<cplx> FupOperator::apply_adjoint(const std::vector<cplx>& w) const {
    if (w.size() != rows_.size()) throw ConfigError("fup operator: input length must equal the row count");
    if (mode_ == AssembleMode::Dense) {
        Eigen::Map<const Eigen::VectorXcd> ww(w.data(), static_cast<Eigen::Index>(w.size()));
        Eigen::VectorXcd v = matrix_.adjoint() * ww;
        return {v.data(), v.data() + v.size()};
    }
    return transform(w, true);
}

FupOperator assemble_operator(const FupInstance& instance, AssembleMode mode, std::size_t dense_cap) {
    return FupOperator(instance, mode, dense_cap);
}

std::string to_string(NormMethod m) { return m == NormMethod::Svd ? "svd" : "power"; }

NormResult operator_norm(const FupOperator& op, NormMethod method, const PowerOptions& opt) {
    NormResult res;
    res.method = method;
    if (op.rows() == 0 || op.cols() == 0) return res;
    if (method == NormMethod::Svd) {
        res.norm = op.mode() == AssembleMode::Dense ? largest_singular_value(op.matrix())
                                                    : largest_singular_value(op.dense());
        return res;
    }
    if (!(opt.tolerance > 0.0) || opt.max_iterations < 1) throw ConfigError("power iteration options invalid");
    Rng rng(opt.seed);
    std::vector<cplx> v(op.cols());
    for (auto& z : v) z = complex_normal(rng);
    auto norm_of = [](const std::vector<cplx>& a) {
        double s = 0.0;
        for (const auto& z : a) s += std::norm(z);
        return std::sqrt(s);
    };
    double nv = norm_of(v);
    for (auto& z : v) z /= nv;
    double lambda = 0.0;
    res.converged = false;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const auto z = op.apply_adjoint(op.apply(v));
        cplx dot = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) dot += std::conj(v[i]) * z[i];
        lambda = dot.real();
        res.iterations = it;
        if (!(lambda > 0.0)) {
            res.norm = 0.0;
            res.residual = 0.0;
            res.converged = true;
            return res;
        }
        double r2 = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) r2 += std::norm(z[i] - lambda * v[i]);
        res.residual = std::sqrt(r2) / lambda;
        const double nz = norm_of(z);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = z[i] / nz;
        if (res.residual <= opt.tolerance) {
            res.converged = true;
            break;
        }
    }
    res.norm = std::sqrt(lambda);
    return res;
}

// ---------------------------------------------------------------- decay curves

FupInstance curve_instance(const CurveSpec& spec, int k) {
    if (spec.dimension < 1 || spec.dimension > 2) throw ConfigError("curve: dimension must be 1 or 2");
    if (k < 1) throw ConfigError("curve: depth k must be at least 1");
    if (spec.base < 2) throw ConfigError("curve: base must be at least 2");
    FupInstance inst;
    inst.dimension = spec.dimension;
    inst.N = std::pow(static_cast<double>(spec.base), k);
    inst.grid = spec.grid;

    regular_sets::CantorSpec cs;
    cs.dimension = spec.dimension;
    cs.depth = k;
    for (auto& ax : cs.axes) {
        ax.base = spec.base;
        ax.alphabet = spec.alphabet;
        ax.lo = 0.0;
        ax.hi = 1.0;
    }
    inst.X = regular_sets::build_cantor(cs);

    double R = inst.N;
    if (spec.dimension == 2 && spec.rotation_deg != 0.0) {
        const double t = spec.rotation_deg * std::numbers::pi / 180.0;
        const double c = std::cos(t), s = std::sin(t);
        const Matrix2 frame{{{c, -s}, {s, c}}};
        const double overlap = std::abs(frame[0][0] * frame[0][1] + frame[1][0] * frame[1][1]);
        if (!(overlap < 1.0 - spec.eps0)) throw ConfigError("curve: frame violates the eps0 condition");
        inst.y_frame = frame;
        R = inst.N / (std::abs(c) + std::abs(s));
    }
    for (auto& ax : cs.axes) ax.hi = R;
    inst.Y = regular_sets::build_cantor(cs);

    // raise the period until the frequency grid resolves the Y cubes
    if (inst.grid.model == GridModel::Oversampled) {
        while (inst.Y.resolution < 2.0 / inst.grid.period - 1e-12) inst.grid.period *= 2;
    }
    inst.validate();
    return inst;
}

BetaFit fit_beta(const std::vector<int>& k, const std::vector<double>& N, const std::vector<double>& norms) {
    if (k.size() != N.size() || N.size() != norms.size()) throw ConfigError("fit: length mismatch");
    if (N.size() < 3) throw ConfigError("fit: at least 3 points are needed");
    BetaFit f;
    const std::size_t start = N.size() >= 4 ? 1 : 0;
    f.excluded_first = start == 1;
    f.first_k = k[start];
    std::vector<double> x, y;
    for (std::size_t i = start; i < N.size(); ++i) {
        if (!(norms[i] > 0.0)) throw ConfigError("fit: norms must be positive");
        x.push_back(std::log(N[i]));
        y.push_back(-std::log(norms[i]));
    }
    f.points = x.size();
    const double m = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw ConfigError("fit: N values must differ");
    f.beta = sxy / sxx;
    f.intercept = my - f.beta * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.beta * x[i]);
        ss_res += r * r;
        f.residual_max = std::max(f.residual_max, std::abs(r));
    }
    f.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    return f;
}

NormCurve fup_decay_curve(const CurveSpec& spec, const std::vector<int>& k_values) {
    if (k_values.size() < 3) throw ConfigError("curve: at least 3 depths are needed for the fit");
    for (std::size_t i = 1; i < k_values.size(); ++i)
        if (k_values[i] <= k_values[i - 1]) throw ConfigError("curve: depths must be strictly increasing");
    NormCurve curve;
    curve.rows.resize(k_values.size());
    parallel_for(k_values.size(), spec.threads, [&](std::size_t i) {
        const auto inst = curve_instance(spec, k_values[i]);
        FupOperator mf(inst, AssembleMode::MatrixFree, spec.dense_cap);
        CurveRow row;
        row.k = k_values[i];
        row.N = inst.N;
        row.rows = mf.rows();
        row.cols = mf.cols();
        const bool dense = mf.dense_allowed();
        if (dense) {
            const auto svd = operator_norm(mf, NormMethod::Svd, spec.power);
            row.norm = svd.norm;
            row.method = NormMethod::Svd;
        }
        if (!dense || spec.cross_check) {
            const auto pw = operator_norm(mf, NormMethod::Power, spec.power);
            row.iterations = pw.iterations;
            row.residual = pw.residual;
            row.converged = pw.converged;
            if (dense) {
                row.power_norm = pw.norm;
                row.agreement = std::abs(pw.norm - row.norm);
            } else {
                row.norm = pw.norm;
                row.method = NormMethod::Power;
            }
        }
        curve.rows[i] = row;
    });
    std::vector<int> ks;
    std::vector<double> Ns, norms;
    for (const auto& r : curve.rows) {
        ks.push_back(r.k);
        Ns.push_back(r.N);
        norms.push_back(r.norm);
        if (!(r.norm > 0.0 && r.norm <= 1.0 + 1e-12)) curve.norms_in_range = false;
        if (r.agreement) curve.max_agreement = std::max(curve.max_agreement, *r.agreement);
    }
    for (std::size_t i = 1; i < norms.size(); ++i)
        if (norms[i] > norms[i - 1] + 1e-12) curve.monotone = false;
    curve.fit = fit_beta(ks, Ns, norms);
    for (std::size_t a = 0; a < ks.size(); ++a) {
        for (std::size_t b = a; b < ks.size(); ++b) {
            const auto it = std::find(ks.begin(), ks.end(), ks[a] + ks[b]);
            if (it == ks.end()) continue;
            SubmultiplicativeCheck s;
            s.k1 = ks[a];
            s.k2 = ks[b];
            s.lhs = norms[static_cast<std::size_t>(it - ks.begin())];
            s.rhs = norms[a] * norms[b] * (1.0 + 1e-6);
            s.holds = s.lhs <= s.rhs;
            curve.submultiplicative.push_back(s);
        }
    }
    return curve;
}

// ---------------------------------------------------------------- distortion

int resolving_period(const FupInstance& instance, const DiffeoSpec& diffeo) {
    const auto check = check_diffeo(diffeo);
    double max_x = 0.0;
    const GridSet& X = instance.X;
    if (!X.empty()) {
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                const double u = X.extent[0][a], v = instance.dimension == 2 ? X.extent[1][b] : 0.0;
                max_x = std::max(max_x, std::hypot(u, v));
            }
    }
    const double need = 8.0 * max_x * check.max_derivative;
    int P = 2;
    while (P < need) P *= 2;
    return P;
}

DistortedNorm distorted_fup_norm(const FupInstance& instance) {
    instance.validate();
    if (!instance.distortion) throw ConfigError("distorted norm: instance has no diffeomorphism");
    if (instance.grid.model != GridModel::Oversampled) throw ConfigError("distorted norm: needs the oversampled model");
    const DiffeoSpec& psi = *instance.distortion;
    DistortedNorm out;
    out.diffeo = check_diffeo(psi);
    if (!out.diffeo.pass) throw ConfigError("distorted norm: diffeomorphism exceeds its declared bound D0");
    const auto pts = collect_points(instance);
    out.rows = pts.rows.size();
    out.cols = pts.cols.size();
    for (const auto& x : pts.x) out.max_x = std::max(out.max_x, std::hypot(x[0], x[1]));
    out.phase_step = kTwoPi * out.max_x * out.diffeo.max_derivative * instance.frequency_spacing();
    if (out.phase_step > std::numbers::pi / 4.0 + 1e-12)
        throw ConfigError("distorted norm: frequency grid too coarse for the phase (raise the period)");
    if (out.rows > kDenseCap || out.cols > kDenseCap) throw ConfigError("distorted norm: over the dense cap");
    const int d = instance.dimension;
    const double N = instance.N;
    const double scale = std::pow(static_cast<double>(instance.points_per_axis()), -0.5 * d);
    Eigen::MatrixXcd A(static_cast<Eigen::Index>(out.rows), static_cast<Eigen::Index>(out.cols));
    for (std::size_t c = 0; c < out.cols; ++c) {
        const Point u{pts.xi[c][0] / N, pts.xi[c][1] / N};
        const Point mapped = psi.map(u);
        const Matrix2 J = psi.jacobian(u);
        const double det = d == 1 ? J[0][0] : J[0][0] * J[1][1] - J[0][1] * J[1][0];
        const Point eta{N * mapped[0], d == 2 ? N * mapped[1] : 0.0};
        for (std::size_t r = 0; r < out.rows; ++r) {
            const double phase = pts.x[r][0] * eta[0] + (d == 2 ? pts.x[r][1] * eta[1] : 0.0);
            const double frac = phase - std::floor(phase);
            A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = std::polar(std::abs(det) * scale, kTwoPi * frac);
        }
    }
    out.norm = largest_singular_value(A);
    return out;
}

// ---------------------------------------------------------------- iteration demo

double mollifier_spectrum(double xi) {
    const double t = std::abs(2.0 * xi);
    double b;
    if (t >= 2.0)
        b = 0.0;
    else if (t >= 1.0)
        b = (2.0 - t) * (2.0 - t) * (2.0 - t) / 6.0;
    else
        b = 2.0 / 3.0 - t * t + 0.5 * t * t * t;
    return 1.5 * b;
}

std::vector<cplx> band_limited_sample(const GridSet& Y, const DemoGrid& grid, std::uint64_t seed) {
    if (grid.n <= 0 || grid.n % 2 != 0) throw ConfigError("demo grid: n must be positive and even");
    if (Y.dimension != 1) throw ConfigError("demo: Y must be one-dimensional");
    Rng rng(seed);
    std::vector<cplx> c(static_cast<std::size_t>(grid.n), cplx(0.0));
    for (int l = 0; l < grid.n; ++l)
        if (grid_contains(Y, {grid.xi(l), 0.0})) c[static_cast<std::size_t>(l)] = complex_normal(rng);
    CenteredFft fft({grid.n});
    fft.inverse(c);
    return c;
}

namespace {

// Indicator of S*_{level}: cubes of side L^{-level} partitioning [-1,1] that meet X in
// positive length, thickened by a tenth of the side.
std::vector<double> thickened_cover(const GridSet& X, const DemoGrid& grid, int L, int level) {
    const double side = std::pow(static_cast<double>(L), -level);
    const auto count = static_cast<std::int64_t>(std::llround(2.0 / side));
    std::vector<char> hit(static_cast<std::size_t>(count), 0);
    for (const auto& c : X.cubes) {
        const double lo = X.origin[0] + static_cast<double>(c[0]) * X.resolution;
        const double hi = lo + X.resolution;
        const auto q0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((lo + 1.0) / side)));
        const auto q1 = std::min<std::int64_t>(count - 1, static_cast<std::int64_t>(std::ceil((hi + 1.0) / side)) - 1);
        for (auto q = q0; q <= q1; ++q) {
            const double qlo = -1.0 + static_cast<double>(q) * side;
            if (std::min(hi, qlo + side) - std::max(lo, qlo) > 1e-12 * side) hit[static_cast<std::size_t>(q)] = 1;
        }
    }
    const double pad = side / 10.0;
    std::vector<double> ind(static_cast<std::size_t>(grid.n), 0.0);
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.x(j);
        const auto q = static_cast<std::int64_t>(std::floor((x + 1.0) / side));
        for (auto qq = q - 1; qq <= q + 1; ++qq) {
            if (qq < 0 || qq >= count || !hit[static_cast<std::size_t>(qq)]) continue;
            const double qlo = -1.0 + static_cast<double>(qq) * side;
            if (x >= qlo - pad && x <= qlo + side + pad) {
                ind[static_cast<std::size_t>(j)] = 1.0;
                break;
            }
        }
    }
    return ind;
}

double mollifier_leakage(double window) {
    if (window >= 1.0) return 0.0;
    auto sq = [](double t) {
        const double v = mollifier_spectrum(t);
        return v * v;
    };
    const double total = integrate_adaptive(sq, 0.0, 0.5) + integrate_adaptive(sq, 0.5, 1.0);
    double outside = 0.0;
    if (window < 0.5) outside += integrate_adaptive(sq, window, 0.5) + integrate_adaptive(sq, 0.5, 1.0);
    else outside += integrate_adaptive(sq, window, 1.0);
    return outside / total;
}

}  // namespace

DemoResult iterate_damping_demo(const std::vector<cplx>& f, const DemoGrid& grid, const GridSet& X, int L, int T,
                                int steps, double leakage_tolerance) {
    if (grid.n <= 0 || grid.n % 2 != 0) throw ConfigError("demo grid: n must be positive and even");
    if (f.size() != static_cast<std::size_t>(grid.n)) throw ConfigError("demo: f must have n samples");
    if (!(grid.period >= 2.0)) throw ConfigError("demo: the period must cover [-1, 1]");
    if (L < 3 || T < 1 || steps < 1) throw ConfigError("demo: need L >= 3, T >= 1, steps >= 1");
    if (X.dimension != 1) throw ConfigError("demo: X must be one-dimensional");
    std::vector<int> depths;
    for (int m = 0; m < steps; ++m) depths.push_back(m * T);
    const auto porosity = regular_sets::check_porosity(X, L, depths);
    if (!porosity.porous()) throw ConfigError("demo: X is not porous at the requested depths");

    DemoResult res;
    res.C_phi = constants::reference_mollifier(1).C_phi;
    const double floor_base = 1.0 - res.C_phi / std::pow(static_cast<double>(L), T - 1);
    res.product_floor = floor_base > 0.0 ? std::pow(floor_base, steps) : floor_base;

    const auto n = static_cast<std::size_t>(grid.n);
    std::vector<char> in_unit(n), in_X(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double x = grid.x(static_cast<int>(j));
        in_unit[j] = std::abs(x) <= 1.0;
        in_X[j] = grid_contains(X, {x, 0.0});
    }
    auto norm_on = [&](const std::vector<cplx>& g, const std::vector<char>& mask) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (mask[j]) s += std::norm(g[j]);
        return std::sqrt(s * grid.spacing());
    };

    CenteredFft fft({grid.n});
    const double nyquist = grid.xi(grid.n - 1);
    std::vector<cplx> fm = f;
    std::vector<double> product(n, 1.0);
    res.norms.push_back(norm_on(fm, in_unit));
    res.norms_on_X.push_back(norm_on(fm, in_X));
    for (int m = 0; m < steps; ++m) {
        const int level = m * T;
        const double scale = std::pow(static_cast<double>(L), level + T);
        const double leak = mollifier_leakage(nyquist / scale);
        res.mollifier_leakage.push_back(leak);
        if (leak > leakage_tolerance)
            throw ContractViolation("demo: mollifier spectrum at scale " + std::to_string(scale) +
                                    " leaks beyond the grid band");
        const auto ind = thickened_cover(X, grid, L, level + 1);
        std::vector<cplx> buf(ind.begin(), ind.end());
        fft.forward(buf);
        for (int l = 0; l < grid.n; ++l) buf[static_cast<std::size_t>(l)] *= mollifier_spectrum(grid.xi(l) / scale);
        fft.inverse(buf);
        for (std::size_t j = 0; j < n; ++j) {
            const double psi = buf[j].real();
            fm[j] *= psi;
            product[j] *= psi;
        }
        res.norms.push_back(norm_on(fm, in_unit));
        res.norms_on_X.push_back(norm_on(fm, in_X));
    }
    res.contraction = true;
    for (std::size_t m = 0; m + 1 < res.norms.size(); ++m) {
        if (res.norms[m] == 0.0) continue;
        const double r = res.norms[m + 1] / res.norms[m];
        res.ratios.push_back(r);
        res.max_ratio = std::max(res.max_ratio, r);
        if (!(r < 1.0)) res.contraction = false;
    }
    res.product_min_on_X = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
        if (in_X[j]) res.product_min_on_X = std::min(res.product_min_on_X, product[j]);
    if (!std::isfinite(res.product_min_on_X)) res.product_min_on_X = 1.0;
    res.product_check = res.product_min_on_X >= res.product_floor;
    if (res.product_floor > 0.0) {
        res.X_norm_bound = res.norms_on_X.back() / res.product_floor;
        res.X_norm_check = res.norms_on_X.front() <= res.X_norm_bound * (1.0 + 1e-12);
    } else {
        res.X_norm_bound = std::numeric_limits<double>::infinity();
        res.X_norm_check = true;
    }
    return res;
}

// ---------------------------------------------------------------- json

nlohmann::json to_json(const DiffeoCheck& c) {
    return {{"max_derivative", c.max_derivative},
            {"max_inverse_derivative", c.max_inverse_derivative},
            {"max_second_derivative", c.max_second_derivative},
            {"min_jacobian", c.min_jacobian},
            {"bound", c.bound},
            {"bound_sum", c.bound_sum},
            {"lattice", c.lattice},
            {"pass", c.pass}};
}

nlohmann::json to_json(const BetaFit& f) {
    return {{"beta_hat", f.beta},        {"intercept", f.intercept}, {"r_squared", f.r_squared},
            {"residual_max", f.residual_max}, {"first_k", f.first_k}, {"points", f.points},
            {"excluded_first", f.excluded_first}};
}

nlohmann::json to_json(const NormCurve& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : c.rows) {
        nlohmann::json j{{"k", r.k},           {"N", r.N},
                         {"rows", r.rows},     {"cols", r.cols},
                         {"norm", r.norm},     {"method", to_string(r.method)},
                         {"iterations", r.iterations}, {"residual", r.residual},
                         {"converged", r.converged}};
        if (r.power_norm) j["power_norm"] = *r.power_norm;
        if (r.agreement) j["agreement"] = *r.agreement;
        rows.push_back(j);
    }
    nlohmann::json sub = nlohmann::json::array();
    for (const auto& s : c.submultiplicative)
        sub.push_back({{"k1", s.k1}, {"k2", s.k2}, {"lhs", s.lhs}, {"rhs", s.rhs}, {"holds", s.holds}});
    return {{"rows", rows},
            {"fit", to_json(c.fit)},
            {"monotone", c.monotone},
            {"norms_in_range", c.norms_in_range},
            {"max_agreement", c.max_agreement},
            {"submultiplicative", sub}};
}

nlohmann::json to_json(const DistortedNorm& d) {
    return {{"norm", d.norm}, {"phase_step", d.phase_step}, {"max_x", d.max_x},
            {"rows", d.rows}, {"cols", d.cols},             {"diffeo", to_json(d.diffeo)}};
}

nlohmann::json to_json(const DemoResult& r) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"norms", r.norms},
            {"ratios", r.ratios},
            {"norms_on_X", r.norms_on_X},
            {"mollifier_leakage", r.mollifier_leakage},
            {"max_ratio", r.max_ratio},
            {"contraction", r.contraction},
            {"C_phi", r.C_phi},
            {"product_floor", r.product_floor},
            {"product_min_on_X", r.product_min_on_X},
            {"product_check", r.product_check},
            {"X_norm_bound", num(r.X_norm_bound)},
            {"X_norm_check", r.X_norm_check}};
}

}  // namespace fuplab::fup
