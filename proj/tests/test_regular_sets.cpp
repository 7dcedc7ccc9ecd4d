#include <doctest.h>

#include <cmath>

#include "fuplab/constants.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/regular_sets.hpp"

using namespace fuplab;
using namespace fuplab::regular_sets;

namespace {

CantorSpec cantor1(int depth, int M = 3, std::vector<int> A = {0, 2}, double lo = 0.0, double hi = 1.0) {
    CantorSpec s;
    s.dimension = 1;
    s.depth = depth;
    s.axes[0] = {M, A, lo, hi};
    return s;
}

CantorSpec cantor2(int depth, int M = 3, std::vector<int> A = {0, 2}, double lo = 0.0, double hi = 1.0) {
    CantorSpec s = cantor1(depth, M, A, lo, hi);
    s.dimension = 2;
    s.axes[1] = s.axes[0];
    return s;
}

// oracle: integers in [0, M^k) whose base-M digits all lie in A
std::vector<std::int64_t> digit_oracle(int M, const std::vector<int>& A, int k) {
    std::vector<std::int64_t> out;
    const auto n = static_cast<std::int64_t>(std::llround(std::pow(M, k)));
    for (std::int64_t v = 0; v < n; ++v) {
        std::int64_t x = v;
        bool ok = true;
        for (int t = 0; t < k; ++t) {
            const int dgt = static_cast<int>(x % M);
            x /= M;
            if (std::find(A.begin(), A.end(), dgt) == A.end()) ok = false;
        }
        if (ok) out.push_back(v);
    }
    return out;
}

Box interval(double a, double b) { return Box{{{a, b}, {0.0, 0.0}}}; }

double log3(double x) { return std::log(x) / std::log(3.0); }

}  // namespace

TEST_CASE("cantor construction") {
    const auto g1 = build_cantor(cantor1(1));
    REQUIRE(g1.size() == 2);
    CHECK(g1.resolution == doctest::Approx(1.0 / 3.0));
    CHECK(g1.cubes[0][0] == 0);
    CHECK(g1.cubes[1][0] == 2);

    const auto full = build_cantor(cantor1(3, 2, {0, 1}));
    REQUIRE(full.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(full.cubes[i][0] == i);

    const auto g4 = build_cantor(cantor1(4));
    const auto oracle = digit_oracle(3, {0, 2}, 4);
    REQUIRE(g4.size() == oracle.size());
    CHECK(g4.size() == 16);
    CHECK(g4.resolution == doctest::Approx(std::pow(3.0, -4)).epsilon(1e-14));
    for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(g4.cubes[i][0] == oracle[i]);

    const auto g2 = build_cantor(cantor2(2));
    CHECK(g2.size() == 16);
    CHECK(std::is_sorted(g2.cubes.begin(), g2.cubes.end()));
}

TEST_CASE("cantor construction errors") {
    CHECK_THROWS_AS(build_cantor(cantor1(2, 3, {})), ConfigError);
    auto s = cantor1(20);
    s.max_cubes = 1000;
    CHECK_THROWS_AS(build_cantor(s), ConfigError);
    CHECK_THROWS_AS(build_cantor(cantor1(2, 3, {0, 3})), ConfigError);
}

TEST_CASE("natural measure") {
    const auto s2 = cantor1(2);
    const auto g2 = build_cantor(s2);
    const auto mu2 = natural_measure(s2);
    CHECK(box_measure(g2, mu2, interval(0.0, 1.0 / 9.0)) == doctest::Approx(0.25).epsilon(1e-14));

    for (int k : {0, 1, 3, 5}) {
        const auto s = cantor1(k);
        double total = 0.0;
        for (double m : natural_measure(s)) total += m;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    // leaves with leading digit 0 carry the mass of [0,1/3]
    const auto s4 = cantor1(4);
    const auto leaves = digit_oracle(3, {0, 2}, 4);
    double expected = 0.0;
    for (auto v : leaves)
        if (v < 27) expected += 1.0 / leaves.size();
    CHECK(box_measure(build_cantor(s4), natural_measure(s4), interval(0.0, 1.0 / 3.0)) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.5));
}

TEST_CASE("regularity of the mid-third cantor set") {
    const auto s = cantor1(6);
    const auto rep = check_regularity(build_cantor(s), natural_measure(s), std::log(2.0) / std::log(3.0),
                                      std::pow(3.0, -6), 1.0, 1000000, 8.0);
    CHECK(rep.pass);
    CHECK(rep.constant() <= 8.0);
    CHECK(rep.constant_upper >= 1.0 - 1e-12);  // single leaf cubes are tight
    CHECK(rep.stride == 1);
}

TEST_CASE("regularity of the full interval") {
    const auto s = cantor1(6, 2, {0, 1});
    const auto rep = check_regularity(build_cantor(s), natural_measure(s), 1.0, std::pow(2.0, -6), 1.0, 1000000, 2.0);
    CHECK(rep.pass);
    CHECK(rep.constant() <= 2.0);
}

TEST_CASE("wrong exponent makes the constant grow with depth") {
    const double delta = 0.9;
    auto constant_at = [&](int k) {
        const auto s = cantor1(k);
        return check_regularity(build_cantor(s), natural_measure(s), delta, std::pow(3.0, -k), 1.0, 1000000, 8.0)
            .constant();
    };
    const double c4 = constant_at(4), c6 = constant_at(6);
    CHECK(c6 / c4 >= std::pow(3.0, 2.0 * (delta - log3(2.0))) * (1.0 - 1e-12));
    const auto s8 = cantor1(8);
    CHECK_FALSE(check_regularity(build_cantor(s8), natural_measure(s8), delta, std::pow(3.0, -8), 1.0, 1000000, 8.0)
                    .pass);
}

TEST_CASE("regularity errors") {
    GridSet empty;
    CHECK_THROWS_WITH_AS(check_regularity(empty, {}, 0.5, 0.1, 1.0), "empty set has no regularity", ConfigError);
    const auto s = cantor1(3);
    CHECK_THROWS_AS(check_regularity(build_cantor(s), natural_measure(s), 0.5, 1.0, 0.1), ConfigError);
}

TEST_CASE("scale and shift") {
    const auto g = build_cantor(cantor1(3));
    CHECK(scale_shift(g, 1.0) == g);
    const auto g1 = build_cantor(cantor1(1));
    const auto t = scale_shift(g1, 1.0 / 3.0);
    REQUIRE(t.size() == 2);
    CHECK(t.origin[0] + t.cubes[0][0] * t.resolution == doctest::Approx(0.0));
    CHECK(t.origin[0] + (t.cubes[0][0] + 1) * t.resolution == doctest::Approx(1.0 / 9.0));
    CHECK(t.origin[0] + t.cubes[1][0] * t.resolution == doctest::Approx(2.0 / 9.0));
    CHECK(t.origin[0] + (t.cubes[1][0] + 1) * t.resolution == doctest::Approx(1.0 / 3.0));

    const auto scaled = scale_shift(build_cantor(cantor1(4)), 3.0);
    const auto direct = build_cantor(cantor1(4, 3, {0, 2}, 0.0, 3.0));
    CHECK(scaled.cubes == direct.cubes);
    CHECK(scaled.resolution == doctest::Approx(direct.resolution).epsilon(1e-15));
    CHECK(scaled.origin[0] == doctest::Approx(direct.origin[0]));
    CHECK(scaled.extent[0][1] == doctest::Approx(direct.extent[0][1]));

    CHECK_THROWS_AS(scale_shift(g, 0.0), ConfigError);
    CHECK_THROWS_AS(scale_shift(g, -2.0), ConfigError);
}

TEST_CASE("thickening") {
    const auto g = build_cantor(cantor1(3));
    const auto t0 = thicken(g, 0.0);
    for (const auto& c : g.cubes) CHECK(std::binary_search(t0.cubes.begin(), t0.cubes.end(), c));
    CHECK(t0.size() >= g.size());

    GridSet one;
    one.dimension = 1;
    one.resolution = 0.125;
    one.cubes = {{0, 0}};
    canonicalize(one);
    const auto t = thicken(one, 0.125);
    REQUIRE(t.size() == 3);
    CHECK(t.origin[0] + t.cubes.front()[0] * t.resolution == doctest::Approx(-0.125));
    CHECK(t.origin[0] + (t.cubes.back()[0] + 1) * t.resolution == doctest::Approx(0.25));

    // thickened k=3 cantor at scales (2 h, 1) stays within 4x the original constant
    const auto s = cantor1(3);
    const double delta = std::log(2.0) / std::log(3.0);
    const double h = std::pow(3.0, -3);
    const auto mu = natural_measure(s);
    const auto base = check_regularity(g, mu, delta, h, 1.0, 1000000, 1e9);
    const auto [tg, tmu] = thicken_with_measure(g, mu, h);
    const auto thick = check_regularity(tg, tmu, delta, 2.0 * h, 1.0, 1000000, 4.0 * base.constant());
    CHECK(thick.pass);
}

TEST_CASE("empty subcube search") {
    const auto g = build_cantor(cantor1(6));
    const auto child = find_empty_subcube(g, Cube{{0.0, 0.0}, 1.0}, 3);
    REQUIRE(child.has_value());
    CHECK(child->corner[0] == doctest::Approx(1.0 / 3.0));
    CHECK(child->side == doctest::Approx(1.0 / 3.0));

    const auto full = build_cantor(cantor1(6, 2, {0, 1}));
    CHECK_FALSE(find_empty_subcube(full, Cube{{0.0, 0.0}, 1.0}, 3).has_value());
    CHECK_FALSE(find_empty_subcube(full, Cube{{0.25, 0.0}, 0.5}, 3).has_value());

    // 2D: children meeting a removed strip are (0,1),(1,0),(1,1),(1,2),(2,1); first is (0,1)
    const auto g2 = build_cantor(cantor2(4));
    int empties = 0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            const Cube c{{a / 3.0, b / 3.0}, 1.0 / 3.0};
            const double m = box_measure(g2, CubeMeasure(g2.size(), 1.0),
                                         Box{{{c.corner[0], c.corner[0] + c.side}, {c.corner[1], c.corner[1] + c.side}}});
            if (m == 0.0) ++empties;
        }
    CHECK(empties == 5);
    const auto c2 = find_empty_subcube(g2, Cube{{0.0, 0.0}, 1.0}, 3);
    REQUIRE(c2.has_value());
    CHECK(c2->corner[0] == doctest::Approx(0.0));
    CHECK(c2->corner[1] == doctest::Approx(1.0 / 3.0));

    CHECK_THROWS_AS(find_empty_subcube(g, Cube{{0.1, 0.0}, 0.5}, 3), ConfigError);
}

TEST_CASE("porosity scans") {
    const auto g = build_cantor(cantor1(6));
    const auto rep = check_porosity(g, 3, {0, 1, 2, 3, 4});
    CHECK(rep.porous());
    CHECK(rep.depths_checked.size() == 5);
    CHECK(rep.cubes_scanned == 1 + 2 + 4 + 8 + 16);

    const auto square = build_cantor(cantor2(2, 3, {0, 1, 2}, -1.0, 1.0));
    const auto sq = check_porosity(square, 3, {0});
    CHECK_FALSE(sq.porous_at(0));
    CHECK(sq.failures.size() == 4);

    const auto g2 = build_cantor(cantor2(5));
    CHECK(check_porosity(g2, 3, {0, 1, 2, 3}).porous());

    CHECK_THROWS_AS(check_porosity(g, 2, {0}), ConfigError);
    CHECK_THROWS_AS(check_porosity(g, 3, {6}), ConfigError);
    CHECK_THROWS_AS(check_porosity(g, 3, {-1}), ConfigError);
}

TEST_CASE("property: scaling leaves constants within a factor 2") {
    for (int k : {4, 6}) {
        const auto s = cantor1(k);
        const auto g = build_cantor(s);
        const auto mu = natural_measure(s);
        const double delta = std::log(2.0) / std::log(3.0);
        const double a0 = std::pow(3.0, -k), a1 = 1.0;
        const auto base = check_regularity(g, mu, delta, a0, a1, 1000000, 1e9);
        for (double lambda : {1.0 / 3.0, 3.0}) {
            const auto gs = scale_shift(g, lambda, {0.37, 0.0});
            const auto ms = scale_measure(mu, lambda, delta);
            const auto r = check_regularity(gs, ms, delta, lambda * a0, lambda * a1, 1000000, 1e9);
            CHECK(r.constant() <= 2.0 * base.constant());
            CHECK(base.constant() <= 2.0 * r.constant());
        }
    }
}

TEST_CASE("property: extending the top scale costs at most 2 T^d") {
    for (int dim : {1, 2}) {
        const auto s = dim == 1 ? cantor1(6) : cantor2(5);
        const auto g = build_cantor(s);
        const auto mu = natural_measure(s);
        const double delta = default_delta(s);
        const double a0 = g.resolution, a1 = 0.125;
        const auto base = check_regularity(g, mu, delta, a0, a1, 1000000, 1e9);
        for (double T : {2.0, 4.0}) {
            const auto ext = check_regularity(g, mu, delta, a0, T * a1, 1000000, 1e9);
            CHECK(ext.constant() <= 2.0 * std::pow(T, dim) * base.constant());
        }
    }
}

TEST_CASE("property: large L always finds an empty child") {
    const auto g = build_cantor(cantor1(6));
    for (int L : {36, 81, 243}) {
        for (int n = 0; n <= 2; ++n) {
            const double side = std::pow(3.0, -n);
            if (side / g.resolution < L) continue;
            for (const auto& c : g.cubes) {
                const double corner = std::floor((c[0] * g.resolution) / side + 1e-12) * side;
                const auto e = find_empty_subcube(g, Cube{{corner, 0.0}, side}, L);
                CHECK(e.has_value());
            }
        }
    }
}

TEST_CASE("property: regularity implies porosity at the admissible scale") {
    // the measured constant gives L in the thousands, so depth 8 is needed for n = 0
    const auto s = cantor2(8);
    const auto g = build_cantor(s);
    const double delta = default_delta(s);
    const auto reg = check_regularity(g, natural_measure(s), delta, g.resolution, 1.0, 1000000, 1e9);
    const int L = constants::choose_L(2, delta, reg.constant()).L;
    std::vector<int> depths;
    for (int n = 0; n < 3; ++n) {
        const double lo = std::pow(static_cast<double>(L), -n - 1);
        if (lo >= g.resolution * (1 - 1e-12)) depths.push_back(n);
    }
    REQUIRE_FALSE(depths.empty());
    CHECK(check_porosity(g, L, depths).porous());
}

TEST_CASE("determinism and json round trip") {
    const auto a = build_cantor(cantor2(3));
    const auto b = build_cantor(cantor2(3));
    CHECK(a == b);
    const auto j = to_json(a);
    CHECK(j.contains("dimension"));
    CHECK(j.contains("resolution"));
    CHECK(j.contains("extent"));
    CHECK(j.contains("cubes"));
    const auto back = gridset_from_json(j);
    CHECK(back == a);
    auto bad = j;
    bad["colour"] = 1;
    CHECK_THROWS_AS(gridset_from_json(bad), ConfigError);
}
