#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

namespace fuplab::regular_sets {

using Index = std::array<std::int64_t, 2>;  // second entry unused (0) when d = 1
using Box = std::array<std::array<double, 2>, 2>;  // per axis [lo, hi]

struct AxisSpec {
    int base = 3;
    std::vector<int> alphabet{0, 2};
    double lo = 0.0;
    double hi = 1.0;
};

struct CantorSpec {
    int dimension = 1;
    int depth = 0;
    std::array<AxisSpec, 2> axes{};  // axes[1] used only when dimension = 2
    std::size_t max_cubes = std::size_t{1} << 24;
};

// Finite union of closed lattice cubes. Cube (i, j) covers
// [origin + i h, origin + (i+1) h] (times the same on the second axis).
struct GridSet {
    int dimension = 1;
    double resolution = 1.0;
    std::array<double, 2> origin{0.0, 0.0};
    Box extent{};
    std::vector<Index> cubes;  // sorted, unique

    std::size_t size() const { return cubes.size(); }
    bool empty() const { return cubes.empty(); }
    bool operator==(const GridSet&) const = default;
};

// Mass attached to each cube of a GridSet (same order), spread uniformly in the cube.
using CubeMeasure = std::vector<double>;

// Sorts, deduplicates and recomputes the extent as the bounding box of the cubes.
void canonicalize(GridSet& set);

GridSet build_cantor(const CantorSpec& spec);
// Self-similar measure: every depth-k cube carries |A_1|^{-k} (times |A_2|^{-k} in d = 2).
CubeMeasure natural_measure(const CantorSpec& spec);
double default_delta(const CantorSpec& spec);

// Measure of a box under a cube measure with uniform density per cube.
double box_measure(const GridSet& set, const CubeMeasure& mu, const Box& box);

struct RegularityReport {
    double delta = 0.0;
    double constant_upper = 0.0;
    double constant_lower = 0.0;
    std::array<double, 2> scales_tested{0.0, 0.0};
    std::vector<double> side_lengths;
    std::size_t cubes_upper = 0;
    std::size_t cubes_lower = 0;
    std::size_t stride = 1;
    double requested_CR = 0.0;
    bool pass = false;
    double resolution = 0.0;

    double constant() const { return constant_upper > constant_lower ? constant_upper : constant_lower; }
};

RegularityReport check_regularity(const GridSet& set, const CubeMeasure& mu, double delta, double alpha0,
                                  double alpha1, std::size_t sample_budget = 1000000,
                                  double requested_CR = 8.0);

// y + lambda * set; lattice indices are kept and origin/resolution transformed.
GridSet scale_shift(const GridSet& set, double lambda, std::array<double, 2> y = {0.0, 0.0});
// Measure carried along by scale_shift: every mass times lambda^delta.
CubeMeasure scale_measure(const CubeMeasure& mu, double lambda, double delta);

// Minkowski sum with [-radius, radius]^d rounded outward to whole cells; radius below h is raised to h.
GridSet thicken(const GridSet& set, double radius);
// thicken plus the convolution of mu with the normalized indicator of the thickening box.
std::pair<GridSet, CubeMeasure> thicken_with_measure(const GridSet& set, const CubeMeasure& mu,
                                                     double radius);

struct Cube {
    std::array<double, 2> corner{0.0, 0.0};
    double side = 0.0;
    bool operator==(const Cube&) const = default;
};

// First child (lexicographic in child index, first axis slowest) of the L^d partition of
// `cube` whose interior misses the set. Throws ConfigError when the cube is not aligned
// to the set's lattice or is smaller than L cells.
std::optional<Cube> find_empty_subcube(const GridSet& set, const Cube& cube, int L);

struct PorosityFailure {
    int depth = 0;
    Cube cube;
};

struct PorosityReport {
    int L = 0;
    std::vector<int> depths_checked;
    std::vector<PorosityFailure> failures;
    std::size_t cubes_scanned = 0;

    bool porous_at(int n) const;
    bool porous() const { return failures.empty(); }
};

// Scans every cube of side unit * L^{-n} in the partition of the frame box anchored at
// `anchor` (default [-1,1]^d) that meets the set. Requires L >= 3 and L^{n+1} h <= unit.
PorosityReport check_porosity(const GridSet& set, int L, const std::vector<int>& depths,
                              std::array<double, 2> anchor = {-1.0, -1.0}, double unit = 1.0,
                              double frame_side = 2.0);

nlohmann::json to_json(const GridSet& set);
GridSet gridset_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RegularityReport& r);
nlohmann::json to_json(const PorosityReport& r);

}  // namespace fuplab::regular_sets
