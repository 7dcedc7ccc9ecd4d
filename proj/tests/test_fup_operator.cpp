#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fuplab/errors.hpp"
#include "fuplab/fup_operator.hpp"
#include "fuplab/random.hpp"

using namespace fuplab;
using namespace fuplab::fup;

namespace {

regular_sets::GridSet cantor(int dim, int depth, double lo, double hi, std::vector<int> alphabet = {0, 2}) {
    regular_sets::CantorSpec cs;
    cs.dimension = dim;
    cs.depth = depth;
    for (auto& ax : cs.axes) {
        ax.base = 3;
        ax.alphabet = alphabet;
        ax.lo = lo;
        ax.hi = hi;
    }
    return regular_sets::build_cantor(cs);
}

FupInstance cantor_instance(int k, Discretization grid = {}) {
    FupInstance inst;
    inst.N = std::pow(3.0, k);
    inst.X = cantor(1, k, 0.0, 1.0);
    inst.Y = cantor(1, k, 0.0, inst.N);
    inst.grid = grid;
    return inst;
}

std::vector<cplx> random_vector(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<cplx> v(n);
    for (auto& z : v) z = complex_normal(rng);
    return v;
}

cplx inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// Dense SVD values of the oversampled 1D model (period 2, oversampling 4) for k = 1..6,
// computed independently with numpy and frozen.
constexpr double kCantorNorms[6] = {0.8300071043267965, 0.7554373225350262, 0.6870137921032407,
                                    0.6246100178365064, 0.5678350506123262, 0.5162041314429643};
// Same for Y rotated by 30 degrees in 2D (period 4), k = 1..3.
constexpr double kRotatedNorms[3] = {0.47752272186889166, 0.3633362103271012, 0.27626927699323095};

}  // namespace

TEST_CASE("cyclic depth-1 Cantor gives the 2x2 block of the 3-point transform") {
    FupInstance inst;
    inst.N = 3;
    inst.X = cantor(1, 1, 0.0, 1.0);
    inst.Y = cantor(1, 1, 0.0, 3.0);
    inst.grid.model = GridModel::Cyclic;
    auto op = assemble_operator(inst);
    REQUIRE(op.rows() == 2);
    REQUIRE(op.cols() == 2);
    const auto& A = op.matrix();
    const int idx[2] = {0, 2};
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) {
            const cplx expect = std::polar(1.0 / std::sqrt(3.0), -2.0 * std::numbers::pi * idx[r] * idx[c] / 3.0);
            CHECK(std::abs(A(r, c) - expect) < 1e-15);
        }
    // matrix-free path reproduces the same entries
    auto mf = assemble_operator(inst, AssembleMode::MatrixFree);
    for (int c = 0; c < 2; ++c) {
        std::vector<cplx> e(2, 0.0);
        e[static_cast<std::size_t>(c)] = 1.0;
        const auto col = mf.apply(e);
        for (int r = 0; r < 2; ++r) CHECK(std::abs(col[static_cast<std::size_t>(r)] - A(r, c)) < 1e-14);
    }
}

TEST_CASE("full masks on matched grids have norm one") {
    for (int d : {1, 2}) {
        FupInstance inst;
        inst.dimension = d;
        inst.N = 9;
        inst.X = cantor(d, 1, -1.0, 1.0, {0, 1, 2});
        inst.Y = cantor(d, 1, -9.0, 9.0, {0, 1, 2});
        inst.grid = {GridModel::Oversampled, 2, 2};
        auto op = assemble_operator(inst, AssembleMode::MatrixFree);
        const std::size_t total = static_cast<std::size_t>(std::pow(inst.points_per_axis(), d));
        CHECK(op.rows() == total);
        CHECK(op.cols() == total);
        CHECK(operator_norm(op, NormMethod::Svd).norm == doctest::Approx(1.0).epsilon(1e-10));
        const auto pw = operator_norm(op, NormMethod::Power);
        CHECK(pw.converged);
        CHECK(std::abs(pw.norm - 1.0) <= 1e-10);
    }
}

TEST_CASE("adjoint consistency and dense versus matrix-free application") {
    std::vector<FupInstance> cases{cantor_instance(3)};
    CurveSpec rot;
    rot.dimension = 2;
    rot.rotation_deg = 30.0;
    cases.push_back(curve_instance(rot, 2));
    std::uint64_t seed = 11;
    for (const auto& inst : cases) {
        auto dense = assemble_operator(inst, AssembleMode::Dense);
        auto mf = assemble_operator(inst, AssembleMode::MatrixFree);
        REQUIRE(dense.rows() == mf.rows());
        REQUIRE(dense.cols() == mf.cols());
        for (int trial = 0; trial < 3; ++trial) {
            const auto v = random_vector(mf.cols(), seed++);
            const auto w = random_vector(mf.rows(), seed++);
            for (const FupOperator* op : {&dense, &mf}) {
                const cplx lhs = inner(op->apply(v), w);
                const cplx rhs = inner(v, op->apply_adjoint(w));
                CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
            }
            const auto a = dense.apply(v), b = mf.apply(v);
            double err = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]));
            CHECK(err < 1e-11);
        }
    }
}

TEST_CASE("empty X gives the zero operator") {
    auto inst = cantor_instance(2);
    inst.X = regular_sets::GridSet{};
    auto op = assemble_operator(inst, AssembleMode::MatrixFree);
    CHECK(op.rows() == 0);
    CHECK(operator_norm(op, NormMethod::Svd).norm == 0.0);
    CHECK(operator_norm(op, NormMethod::Power).norm == 0.0);
}

TEST_CASE("depth-2 Cantor: power iteration reproduces the dense value") {
    auto op = assemble_operator(cantor_instance(2), AssembleMode::MatrixFree);
    const auto svd = operator_norm(op, NormMethod::Svd);
    const auto pw = operator_norm(op, NormMethod::Power);
    CHECK(pw.converged);
    CHECK(pw.residual <= 1e-8);
    CHECK(std::abs(svd.norm - pw.norm) <= 1e-7);
    CHECK(svd.norm == doctest::Approx(kCantorNorms[1]).epsilon(1e-9));
}

TEST_CASE("1D Cantor decay curve") {
    CurveSpec spec;
    const auto curve = fup_decay_curve(spec, {1, 2, 3, 4, 5, 6});
    REQUIRE(curve.rows.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(curve.rows[i].norm == doctest::Approx(kCantorNorms[i]).epsilon(1e-9));
        REQUIRE(curve.rows[i].agreement.has_value());
        CHECK(*curve.rows[i].agreement <= 1e-7);
        CHECK(curve.rows[i].N == std::pow(3.0, i + 1));
    }
    CHECK(curve.monotone);
    CHECK(curve.norms_in_range);
    CHECK(curve.fit.excluded_first);
    CHECK(curve.fit.points == 5);
    CHECK(curve.fit.beta > 0.05);
    CHECK(curve.fit.r_squared > 0.99);
    // numpy fit over k = 2..6 of the frozen values
    CHECK(curve.fit.beta == doctest::Approx(0.08666500973539452).epsilon(1e-6));
    CHECK_FALSE(curve.submultiplicative.empty());
}

TEST_CASE("full-mask curve is flat") {
    std::vector<double> norms, Ns;
    std::vector<int> ks;
    for (int k = 1; k <= 3; ++k) {
        FupInstance inst;
        inst.N = std::pow(3.0, k);
        inst.X = cantor(1, k, -1.0, 1.0, {0, 1, 2});
        inst.Y = cantor(1, k, -inst.N, inst.N, {0, 1, 2});
        inst.grid = {GridModel::Oversampled, 2, 2};
        auto op = assemble_operator(inst);
        ks.push_back(k);
        Ns.push_back(inst.N);
        norms.push_back(operator_norm(op, NormMethod::Svd).norm);
        CHECK(norms.back() == doctest::Approx(1.0).epsilon(1e-10));
    }
    const auto fit = fit_beta(ks, Ns, norms);
    CHECK(std::abs(fit.beta) < 1e-10);
}

TEST_CASE("2D rotated product curve") {
    CurveSpec spec;
    spec.dimension = 2;
    spec.rotation_deg = 30.0;
    const auto inst = curve_instance(spec, 2);
    CHECK(inst.grid.period == 4);
    REQUIRE(inst.y_frame.has_value());
    const auto curve = fup_decay_curve(spec, {1, 2, 3});
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(curve.rows[i].norm == doctest::Approx(kRotatedNorms[i]).epsilon(1e-9));
        CHECK(*curve.rows[i].agreement <= 1e-7);
    }
    CHECK(curve.fit.beta > 0.0);
    CHECK(curve.monotone);
}

TEST_CASE("swapping X and Y keeps the norm") {
    for (int k : {2, 3}) {
        // oversampling = period makes the physical and frequency grids mirror images
        const Discretization grid{GridModel::Oversampled, 2, 2};
        auto a = cantor_instance(k, grid);
        a.X = cantor(1, k, 0.0, 1.0, {0, 1});
        a.Y = cantor(1, k, 0.0, a.N, {0, 2});
        auto b = a;
        b.X = cantor(1, k, 0.0, 1.0, {0, 2});
        b.Y = cantor(1, k, 0.0, a.N, {0, 1});
        const double na = operator_norm(assemble_operator(a), NormMethod::Svd).norm;
        const double nb = operator_norm(assemble_operator(b), NormMethod::Svd).norm;
        CHECK(std::abs(na - nb) <= 1e-10);
        CHECK(na < 1.0);
    }
}

TEST_CASE("enlarging the masks never decreases the norm") {
    const int k = 4;
    auto small = cantor_instance(k);
    auto bigger_x = small;
    bigger_x.X = cantor(1, k - 1, 0.0, 1.0);  // coarser Cantor set contains the finer one
    auto bigger_y = small;
    bigger_y.Y = cantor(1, k - 1, 0.0, small.N);
    const double n0 = operator_norm(assemble_operator(small), NormMethod::Svd).norm;
    const double n1 = operator_norm(assemble_operator(bigger_x), NormMethod::Svd).norm;
    const double n2 = operator_norm(assemble_operator(bigger_y), NormMethod::Svd).norm;
    CHECK(n1 >= n0 - 1e-12);
    CHECK(n2 >= n0 - 1e-12);
}

TEST_CASE("operator and curve errors") {
    auto inst = cantor_instance(3);
    CHECK_THROWS_AS(assemble_operator(inst, AssembleMode::Dense, 10), ConfigError);
    auto op = assemble_operator(inst, AssembleMode::MatrixFree, 10);
    CHECK_THROWS_AS(operator_norm(op, NormMethod::Svd), ConfigError);
    CHECK(operator_norm(op, NormMethod::Power).converged);
    CHECK_THROWS_AS(fup_decay_curve(CurveSpec{}, {1, 2}), ConfigError);
    CHECK_THROWS_AS(fit_beta({1, 2}, {3, 9}, {0.9, 0.8}), ConfigError);

    auto bad = cantor_instance(2);
    bad.X = cantor(1, 2, 0.0, 2.0);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cantor_instance(2);
    bad.Y = cantor(1, 2, 0.0, 2.0 * bad.N);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = cantor_instance(2);
    bad.grid.period = 1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    PowerOptions few;
    few.max_iterations = 2;
    const auto pw = operator_norm(assemble_operator(cantor_instance(4)), NormMethod::Power, few);
    CHECK_FALSE(pw.converged);
    CHECK(pw.residual > few.tolerance);
}

TEST_CASE("diffeomorphism checks") {
    DiffeoSpec id;
    auto c = check_diffeo(id);
    CHECK(c.pass);
    CHECK(c.bound == doctest::Approx(1.0));
    CHECK(c.bound_sum == doctest::Approx(2.0));

    DiffeoSpec shear{1, DiffeoKind::Shear, 0.15, 1.0, 1.2};
    c = check_diffeo(shear);
    CHECK(c.pass);
    CHECK(c.max_derivative == doctest::Approx(1.15));
    CHECK(c.max_inverse_derivative == doctest::Approx(1.0 / 0.85));
    CHECK(c.max_second_derivative == doctest::Approx(0.15).epsilon(1e-6));

    DiffeoSpec shear2{2, DiffeoKind::Shear, 0.1, 1.0, 1.2};
    c = check_diffeo(shear2);
    CHECK(c.pass);
    CHECK(c.min_jacobian == doctest::Approx(1.0));
    // singular values of [[1, s], [0, 1]]
    CHECK(c.max_derivative == doctest::Approx(0.5 * (std::sqrt(4.01) + 0.1)));

    DiffeoSpec bump{1, DiffeoKind::RadialBump, 0.5, 1.0, 2.0};
    c = check_diffeo(bump);
    CHECK(c.pass);
    CHECK(c.max_derivative == doctest::Approx(1.5));
    bump.D0 = 1.3;
    CHECK_FALSE(check_diffeo(bump).pass);

    // radial bump in 2D: D Psi(0) = (1 + s) I
    DiffeoSpec bump2{2, DiffeoKind::RadialBump, 0.5, 1.0, 2.0};
    const auto J = bump2.jacobian({0.0, 0.0});
    CHECK(J[0][0] == doctest::Approx(1.5));
    CHECK(J[0][1] == doctest::Approx(0.0));
    CHECK(diffeo_kind_from_string("radial-bump") == DiffeoKind::RadialBump);
    CHECK_THROWS_AS(diffeo_kind_from_string("twist"), ConfigError);
}

TEST_CASE("distorted operator") {
    SUBCASE("identity matches the straight operator") {
        auto inst = cantor_instance(3);
        DiffeoSpec id;
        inst.grid.period = resolving_period(inst, id);
        CHECK(inst.grid.period == 8);
        inst.distortion = id;
        const auto dn = distorted_fup_norm(inst);
        const double straight = operator_norm(assemble_operator(inst), NormMethod::Svd).norm;
        CHECK(std::abs(dn.norm - straight) <= 1e-6);
        CHECK(dn.phase_step <= std::numbers::pi / 4.0);
    }
    SUBCASE("small shear stays within a factor two") {
        auto inst = cantor_instance(3);
        DiffeoSpec shear{1, DiffeoKind::Shear, 0.15, 1.0, 1.2};
        inst.grid.period = resolving_period(inst, shear);
        const double straight = operator_norm(assemble_operator(inst), NormMethod::Svd).norm;
        inst.distortion = shear;
        const auto dn = distorted_fup_norm(inst);
        CHECK(dn.norm <= 2.0 * straight);
        CHECK(dn.norm >= 0.5 * straight);
    }
    SUBCASE("radial bump norm below one") {
        auto inst = cantor_instance(2);
        DiffeoSpec bump{1, DiffeoKind::RadialBump, 0.5, 1.0, 2.0};
        inst.grid.period = resolving_period(inst, bump);
        inst.distortion = bump;
        CHECK(distorted_fup_norm(inst).norm < 1.0);
    }
    SUBCASE("coarse frequency grid is rejected") {
        auto inst = cantor_instance(2);
        inst.distortion = DiffeoSpec{};
        CHECK_THROWS_AS(distorted_fup_norm(inst), ConfigError);
    }
}

TEST_CASE("mollifier spectrum") {
    CHECK(mollifier_spectrum(0.0) == doctest::Approx(1.0));
    CHECK(mollifier_spectrum(1.0) == 0.0);
    CHECK(mollifier_spectrum(-1.2) == 0.0);
    // integral of the spectrum is the mollifier at the origin: 1.5 * (1/2) * 1
    double s = 0.0;
    const int m = 200000;
    for (int i = 0; i < m; ++i) s += mollifier_spectrum(-1.0 + (i + 0.5) * 2.0 / m) * 2.0 / m;
    CHECK(s == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("iteration demo") {
    const int k = 4;
    const double N = std::pow(3.0, k);
    const DemoGrid grid{static_cast<int>(4 * N * 4), 4.0};
    const auto X = cantor(1, k, 0.0, 1.0);
    const auto Y = cantor(1, k, 0.0, N);

    SUBCASE("zero input") {
        const std::vector<cplx> f(static_cast<std::size_t>(grid.n), 0.0);
        const auto r = iterate_damping_demo(f, grid, X, 3, 1, 3);
        REQUIRE(r.norms.size() == 4);
        for (double v : r.norms) CHECK(v == 0.0);
        CHECK(r.ratios.empty());
    }
    SUBCASE("Cantor X and Y, T = 1, three steps") {
        const auto f = band_limited_sample(Y, grid, 5);
        const auto r = iterate_damping_demo(f, grid, X, 3, 1, 3);
        REQUIRE(r.ratios.size() == 3);
        for (double q : r.ratios) CHECK(q < 1.0);
        CHECK(r.contraction);
        CHECK(r.product_check);
        for (double l : r.mollifier_leakage) CHECK(l == 0.0);
        CHECK(r.C_phi == doctest::Approx(1.796645));
    }
    SUBCASE("T = 2 gives a positive pointwise floor that holds") {
        const int k2 = 7;
        const double N2 = std::pow(3.0, k2);
        const DemoGrid g2{static_cast<int>(4 * N2 * 2), 4.0};
        const auto X2 = cantor(1, k2, 0.0, 1.0);
        const auto Y2 = cantor(1, k2, 0.0, N2);
        const auto f = band_limited_sample(Y2, g2, 9);
        const auto r = iterate_damping_demo(f, g2, X2, 3, 2, 3);
        CHECK(r.product_floor > 0.0);
        CHECK(r.product_check);
        CHECK(r.product_min_on_X >= r.product_floor);
        CHECK(r.X_norm_check);
        CHECK(r.contraction);
    }
    SUBCASE("mollifier beyond the grid band") {
        const DemoGrid small{64, 4.0};
        const std::vector<cplx> f(64, 1.0);
        CHECK_THROWS_AS(iterate_damping_demo(f, small, X, 3, 1, 3), ContractViolation);
    }
    SUBCASE("non-porous X is rejected") {
        const auto full = cantor(1, k, -1.0, 1.0, {0, 1, 2});
        const auto f = band_limited_sample(Y, grid, 5);
        CHECK_THROWS_AS(iterate_damping_demo(f, grid, full, 3, 1, 3), ConfigError);
    }
}
