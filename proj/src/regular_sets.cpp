#include "fuplab/regular_sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fuplab/errors.hpp"

namespace fuplab::regular_sets {

namespace {

constexpr double kSnap = 1e-9;
constexpr double kEmpty = 1e-12;

double snap(double u) {
    const double r = std::round(u);
    return std::fabs(u - r) <= kSnap * std::max(1.0, std::fabs(u)) ? r : u;
}

int dims(const GridSet& s) { return s.dimension; }

// Cumulative sums of a per-cell density over the bounding index box of a set.
// Cell (i, j) has uniform density, so the cumulative function is bilinear inside a cell
// and box integrals with fractional corners are exact.
class CellIntegral {
public:
    CellIntegral(const GridSet& set, const std::vector<double>& weight) : d_(dims(set)) {
        if (set.cubes.empty()) return;
        lo_ = set.cubes.front();
        hi_ = set.cubes.front();
        for (const auto& c : set.cubes)
            for (int a = 0; a < d_; ++a) {
                lo_[a] = std::min(lo_[a], c[a]);
                hi_[a] = std::max(hi_[a], c[a]);
            }
        n0_ = hi_[0] - lo_[0] + 1;
        n1_ = d_ == 2 ? hi_[1] - lo_[1] + 1 : 1;
        S_.assign(static_cast<std::size_t>((n0_ + 1) * (n1_ + 1)), 0.0);
        for (std::size_t k = 0; k < set.cubes.size(); ++k) {
            const auto& c = set.cubes[k];
            const std::int64_t a = c[0] - lo_[0] + 1;
            const std::int64_t b = d_ == 2 ? c[1] - lo_[1] + 1 : 1;
            S_[idx(a, b)] += weight[k];
        }
        for (std::int64_t a = 1; a <= n0_; ++a)
            for (std::int64_t b = 1; b <= n1_; ++b)
                S_[idx(a, b)] += S_[idx(a - 1, b)] + S_[idx(a, b - 1)] - S_[idx(a - 1, b - 1)];
    }

    // Integral over the lattice-coordinate box [u0,u1] x [v0,v1] (v ignored for d = 1).
    double box(double u0, double u1, double v0 = 0.0, double v1 = 1.0) const {
        if (S_.empty() || u1 <= u0 || v1 <= v0) return 0.0;
        if (d_ == 1) {
            v0 = static_cast<double>(lo_[1]);
            v1 = v0 + 1.0;
        }
        return F(u1, v1) - F(u0, v1) - F(u1, v0) + F(u0, v0);
    }

private:
    std::size_t idx(std::int64_t a, std::int64_t b) const {
        return static_cast<std::size_t>(a * (n1_ + 1) + b);
    }
    double F(double u, double v) const {
        const double x = std::clamp(u - static_cast<double>(lo_[0]), 0.0, static_cast<double>(n0_));
        const double y = std::clamp(v - static_cast<double>(lo_[1]), 0.0, static_cast<double>(n1_));
        const std::int64_t a = std::min<std::int64_t>(static_cast<std::int64_t>(x), n0_ - 1);
        const std::int64_t b = std::min<std::int64_t>(static_cast<std::int64_t>(y), n1_ - 1);
        const double fx = x - a, fy = y - b;
        const double s00 = S_[idx(a, b)], s10 = S_[idx(a + 1, b)], s01 = S_[idx(a, b + 1)],
                     s11 = S_[idx(a + 1, b + 1)];
        return s00 + fx * (s10 - s00) + fy * (s01 - s00) + fx * fy * (s11 - s10 - s01 + s00);
    }

    int d_;
    Index lo_{0, 0}, hi_{0, 0};
    std::int64_t n0_ = 0, n1_ = 0;
    std::vector<double> S_;
};

double to_lattice(const GridSet& s, int axis, double x) {
    return snap((x - s.origin[axis]) / s.resolution);
}

bool is_integer(double u) { return std::fabs(u - std::round(u)) <= kSnap * std::max(1.0, std::fabs(u)); }

void validate_axis(const AxisSpec& a, int depth) {
    if (a.base < 2) throw ConfigError("cantor: base must be >= 2");
    if (a.alphabet.empty()) throw ConfigError("cantor: alphabet is empty");
    std::set<int> seen;
    for (int v : a.alphabet) {
        if (v < 0 || v >= a.base) throw ConfigError("cantor: alphabet digit outside {0..M-1}");
        if (!seen.insert(v).second) throw ConfigError("cantor: repeated alphabet digit");
    }
    if (!(a.hi > a.lo)) throw ConfigError("cantor: empty extent");
    if (depth < 0) throw ConfigError("cantor: depth must be >= 0");
    if (depth * std::log2(static_cast<double>(a.base)) > 52.0) throw ConfigError("cantor: depth too large");
}

std::vector<std::int64_t> axis_indices(const AxisSpec& a, int depth) {
    std::vector<int> digits(a.alphabet);
    std::sort(digits.begin(), digits.end());
    std::vector<std::int64_t> cur{0};
    for (int t = 0; t < depth; ++t) {
        std::vector<std::int64_t> next;
        next.reserve(cur.size() * digits.size());
        for (std::int64_t v : cur)
            for (int w : digits) next.push_back(v * a.base + w);
        cur.swap(next);
    }
    return cur;  // sorted because digits are sorted
}

}  // namespace

void canonicalize(GridSet& set) {
    std::sort(set.cubes.begin(), set.cubes.end());
    set.cubes.erase(std::unique(set.cubes.begin(), set.cubes.end()), set.cubes.end());
    for (const auto& c : set.cubes)
        for (int a = 0; a < set.dimension; ++a) {
            const double lo = set.origin[a] + c[a] * set.resolution;
            const double hi = lo + set.resolution;
            set.extent[a][0] = std::min(set.extent[a][0], lo);
            set.extent[a][1] = std::max(set.extent[a][1], hi);
        }
}

GridSet build_cantor(const CantorSpec& spec) {
    if (spec.dimension != 1 && spec.dimension != 2) throw ConfigError("cantor: dimension must be 1 or 2");
    double count = 1.0;
    for (int a = 0; a < spec.dimension; ++a) {
        validate_axis(spec.axes[a], spec.depth);
        count *= std::pow(static_cast<double>(spec.axes[a].alphabet.size()), spec.depth);
    }
    if (count > static_cast<double>(spec.max_cubes)) throw ConfigError("cantor: cube count exceeds limit");
    GridSet g;
    g.dimension = spec.dimension;
    const double h0 = (spec.axes[0].hi - spec.axes[0].lo) / std::pow(spec.axes[0].base, spec.depth);
    g.resolution = h0;
    if (spec.dimension == 2) {
        const double h1 = (spec.axes[1].hi - spec.axes[1].lo) / std::pow(spec.axes[1].base, spec.depth);
        if (std::fabs(h1 - h0) > 1e-12 * h0) throw ConfigError("cantor: axes must share one resolution");
    }
    for (int a = 0; a < spec.dimension; ++a) {
        g.origin[a] = spec.axes[a].lo;
        g.extent[a] = {spec.axes[a].lo, spec.axes[a].hi};
    }
    const auto ix = axis_indices(spec.axes[0], spec.depth);
    if (spec.dimension == 1) {
        for (auto i : ix) g.cubes.push_back({i, 0});
    } else {
        const auto iy = axis_indices(spec.axes[1], spec.depth);
        g.cubes.reserve(ix.size() * iy.size());
        for (auto i : ix)
            for (auto j : iy) g.cubes.push_back({i, j});
    }
    canonicalize(g);
    return g;
}

CubeMeasure natural_measure(const CantorSpec& spec) {
    const GridSet g = build_cantor(spec);
    return CubeMeasure(g.size(), 1.0 / static_cast<double>(g.size()));
}

double default_delta(const CantorSpec& spec) {
    double delta = 0.0;
    for (int a = 0; a < spec.dimension; ++a)
        delta += std::log(static_cast<double>(spec.axes[a].alphabet.size())) /
                 std::log(static_cast<double>(spec.axes[a].base));
    return delta;
}

double box_measure(const GridSet& set, const CubeMeasure& mu, const Box& box) {
    if (mu.size() != set.size()) throw ConfigError("measure does not match set");
    CellIntegral ci(set, mu);
    const double u0 = to_lattice(set, 0, box[0][0]), u1 = to_lattice(set, 0, box[0][1]);
    if (set.dimension == 1) return ci.box(u0, u1);
    return ci.box(u0, u1, to_lattice(set, 1, box[1][0]), to_lattice(set, 1, box[1][1]));
}

RegularityReport check_regularity(const GridSet& set, const CubeMeasure& mu, double delta, double alpha0,
                                  double alpha1, std::size_t sample_budget, double requested_CR) {
    if (set.empty()) throw ConfigError("empty set has no regularity");
    if (mu.size() != set.size()) throw ConfigError("measure does not match set");
    if (!(delta > 0.0)) throw ConfigError("regularity: delta must be positive");
    if (!(alpha0 <= alpha1)) throw ConfigError("regularity: need alpha0 <= alpha1");
    const double h = set.resolution;
    if (alpha1 < h * (1.0 - kSnap)) throw ConfigError("regularity: alpha1 below the resolution");
    if (sample_budget == 0) throw ConfigError("regularity: sample budget must be positive");
    const int d = set.dimension;

    // side lengths in cells: powers of two in range plus both window ends
    std::vector<std::int64_t> sides;
    const double s_lo = std::max(1.0, std::ceil(snap(alpha0 / h)));
    const double s_hi = std::floor(snap(alpha1 / h));
    for (double s = 1.0; s <= s_hi; s *= 2.0)
        if (s >= s_lo) sides.push_back(static_cast<std::int64_t>(s));
    if (s_lo <= s_hi) {
        sides.push_back(static_cast<std::int64_t>(s_lo));
        sides.push_back(static_cast<std::int64_t>(s_hi));
    }
    std::sort(sides.begin(), sides.end());
    sides.erase(std::unique(sides.begin(), sides.end()), sides.end());

    RegularityReport rep;
    rep.delta = delta;
    rep.scales_tested = {alpha0, alpha1};
    rep.requested_CR = requested_CR;
    rep.resolution = h;
    for (auto s : sides) rep.side_lengths.push_back(static_cast<double>(s) * h);
    if (sides.empty()) {
        rep.pass = false;
        return rep;
    }

    CellIntegral ci(set, mu);
    Index lo = set.cubes.front(), hi = set.cubes.front();
    for (const auto& c : set.cubes)
        for (int a = 0; a < d; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }

    // upper bound: grid-aligned cubes meeting the bounding box
    double total = 0.0;
    for (auto s : sides) {
        double span = 1.0;
        for (int a = 0; a < d; ++a) span *= static_cast<double>(hi[a] - lo[a] + s);
        total += span;
    }
    const std::size_t stride_up =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(total / static_cast<double>(sample_budget))));
    const double lower_total = static_cast<double>(set.size()) * static_cast<double>(sides.size());
    const std::size_t stride_low = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(lower_total / static_cast<double>(sample_budget))));
    rep.stride = std::max(stride_up, stride_low);

    double cup = 0.0;
    std::size_t counter = 0, tested = 0;
    for (auto s : sides) {
        const double rdelta = std::pow(static_cast<double>(s) * h, delta);
        const std::int64_t p0 = lo[0] - s + 1, p1 = hi[0];
        const std::int64_t q0 = d == 2 ? lo[1] - s + 1 : 0, q1 = d == 2 ? hi[1] : 0;
        for (std::int64_t p = p0; p <= p1; ++p)
            for (std::int64_t q = q0; q <= q1; ++q) {
                if ((counter++) % stride_up != 0) continue;
                ++tested;
                const double m = d == 1 ? ci.box(p, p + s) : ci.box(p, p + s, q, q + s);
                if (m > 0.0) cup = std::max(cup, m / rdelta);
            }
    }
    rep.cubes_upper = tested;

    // lower bound: cubes centered at set-cube centers
    double clow = 0.0;
    counter = 0;
    tested = 0;
    for (const auto& c : set.cubes)
        for (auto s : sides) {
            if ((counter++) % stride_low != 0) continue;
            ++tested;
            const double half = 0.5 * static_cast<double>(s);
            const double cu = c[0] + 0.5, cv = c[1] + 0.5;
            const double m = d == 1 ? ci.box(cu - half, cu + half) : ci.box(cu - half, cu + half, cv - half, cv + half);
            const double rdelta = std::pow(static_cast<double>(s) * h, delta);
            clow = std::max(clow, m > 0.0 ? rdelta / m : std::numeric_limits<double>::infinity());
        }
    rep.cubes_lower = tested;
    rep.constant_upper = cup;
    rep.constant_lower = clow;
    rep.pass = std::max(cup, clow) <= requested_CR;
    return rep;
}

GridSet scale_shift(const GridSet& set, double lambda, std::array<double, 2> y) {
    if (!(lambda > 0.0)) throw ConfigError("scale_shift: lambda must be positive");
    GridSet out = set;
    out.resolution = lambda * set.resolution;
    for (int a = 0; a < set.dimension; ++a) {
        out.origin[a] = y[a] + lambda * set.origin[a];
        out.extent[a] = {y[a] + lambda * set.extent[a][0], y[a] + lambda * set.extent[a][1]};
    }
    return out;
}

CubeMeasure scale_measure(const CubeMeasure& mu, double lambda, double delta) {
    if (!(lambda > 0.0)) throw ConfigError("scale_measure: lambda must be positive");
    CubeMeasure out(mu);
    const double f = std::pow(lambda, delta);
    for (auto& m : out) m *= f;
    return out;
}

namespace {

std::int64_t radius_cells(const GridSet& set, double radius) {
    const double r = std::max(radius, set.resolution);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(snap(r / set.resolution))));
}

}  // namespace

std::pair<GridSet, CubeMeasure> thicken_with_measure(const GridSet& set, const CubeMeasure& mu, double radius) {
    if (mu.size() != set.size()) throw ConfigError("measure does not match set");
    const std::int64_t r = radius_cells(set, radius);
    const int d = set.dimension;
    GridSet out;
    out.dimension = d;
    out.resolution = set.resolution;
    out.origin = set.origin;
    out.extent = set.extent;
    if (set.empty()) return {out, {}};
    Index lo = set.cubes.front(), hi = set.cubes.front();
    for (const auto& c : set.cubes)
        for (int a = 0; a < d; ++a) {
            lo[a] = std::min(lo[a], c[a]);
            hi[a] = std::max(hi[a], c[a]);
        }
    const std::int64_t n0 = hi[0] - lo[0] + 1 + 2 * r;
    const std::int64_t n1 = d == 2 ? hi[1] - lo[1] + 1 + 2 * r : 1;
    std::vector<double> dense(static_cast<std::size_t>(n0 * n1), 0.0);
    std::vector<char> occ(dense.size(), 0);
    const double share = 1.0 / std::pow(static_cast<double>(2 * r + 1), d);
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& c = set.cubes[k];
        const std::int64_t a0 = c[0] - lo[0] + r;
        const std::int64_t b0 = d == 2 ? c[1] - lo[1] + r : 0;
        for (std::int64_t a = a0 - r; a <= a0 + r; ++a)
            for (std::int64_t b = (d == 2 ? b0 - r : 0); b <= (d == 2 ? b0 + r : 0); ++b) {
                const auto id = static_cast<std::size_t>(a * n1 + b);
                dense[id] += mu[k] * share;
                occ[id] = 1;
            }
    }
    CubeMeasure m;
    for (std::int64_t a = 0; a < n0; ++a)
        for (std::int64_t b = 0; b < n1; ++b) {
            const auto id = static_cast<std::size_t>(a * n1 + b);
            if (!occ[id]) continue;
            out.cubes.push_back({a + lo[0] - r, d == 2 ? b + lo[1] - r : 0});
            m.push_back(dense[id]);
        }
    canonicalize(out);  // already sorted; extends the extent
    return {out, m};
}

GridSet thicken(const GridSet& set, double radius) {
    return thicken_with_measure(set, CubeMeasure(set.size(), 0.0), radius).first;
}

namespace {

// Lexicographic scan of the L^d children of a lattice-coordinate cube.
std::optional<Cube> first_empty_child(const GridSet& set, const CellIntegral& occ, double u0, double v0,
                                      double side_cells, int L) {
    const double step = side_cells / L;
    const int d = set.dimension;
    for (int a = 0; a < L; ++a) {
        const double x0 = u0 + a * step, x1 = u0 + (a + 1) * step;
        for (int b = 0; b < (d == 2 ? L : 1); ++b) {
            const double y0 = v0 + b * step, y1 = v0 + (b + 1) * step;
            const double count = d == 1 ? occ.box(x0, x1) : occ.box(x0, x1, y0, y1);
            if (count <= kEmpty) {
                Cube c;
                c.side = step * set.resolution;
                c.corner[0] = set.origin[0] + x0 * set.resolution;
                if (d == 2) c.corner[1] = set.origin[1] + y0 * set.resolution;
                return c;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<Cube> find_empty_subcube(const GridSet& set, const Cube& cube, int L) {
    if (L < 2) throw ConfigError("find_empty_subcube: L must be >= 2");
    const int d = set.dimension;
    const double u0 = (cube.corner[0] - set.origin[0]) / set.resolution;
    const double v0 = d == 2 ? (cube.corner[1] - set.origin[1]) / set.resolution : 0.0;
    const double side = cube.side / set.resolution;
    if (!is_integer(u0) || (d == 2 && !is_integer(v0)) || !is_integer(side) || std::round(side) < 1)
        throw ConfigError("find_empty_subcube: cube not aligned to the grid");
    if (std::round(side) < L) throw ConfigError("find_empty_subcube: cube smaller than L cells");
    CellIntegral occ(set, std::vector<double>(set.size(), 1.0));
    return first_empty_child(set, occ, std::round(u0), std::round(v0), std::round(side), L);
}

bool PorosityReport::porous_at(int n) const {
    for (const auto& f : failures)
        if (f.depth == n) return false;
    return true;
}

PorosityReport check_porosity(const GridSet& set, int L, const std::vector<int>& depths,
                              std::array<double, 2> anchor, double unit, double frame_side) {
    if (L < 3) throw ConfigError("porosity: L must be >= 3");
    if (!(unit > 0.0) || !(frame_side > 0.0)) throw ConfigError("porosity: bad frame");
    const int d = set.dimension;
    const double h = set.resolution;
    PorosityReport rep;
    rep.L = L;
    CellIntegral occ(set, std::vector<double>(set.size(), 1.0));
    for (int n : depths) {
        if (n < 0) throw ConfigError("porosity: depth out of range");
        const double side = unit * std::pow(static_cast<double>(L), -n);
        if (std::pow(static_cast<double>(L), n + 1) * h > unit * (1.0 + kSnap))
            throw ConfigError("porosity: depth out of range");
        const auto per_axis = static_cast<std::int64_t>(std::llround(frame_side / side));
        // cubes of the partition whose interior can meet a set cell
        std::set<Index> candidates;
        for (const auto& c : set.cubes) {
            std::array<std::int64_t, 2> k0{0, 0}, k1{0, 0};
            for (int a = 0; a < d; ++a) {
                const double x0 = snap((set.origin[a] + c[a] * h - anchor[a]) / side);
                const double x1 = snap((set.origin[a] + (c[a] + 1) * h - anchor[a]) / side);
                k0[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(x0)));
                k1[a] = std::min<std::int64_t>(per_axis - 1, static_cast<std::int64_t>(std::ceil(x1)) - 1);
            }
            for (auto i = k0[0]; i <= k1[0]; ++i)
                for (auto j = k0[1]; j <= k1[1]; ++j) candidates.insert({i, j});
        }
        const double side_cells = side / h;
        for (const auto& q : candidates) {
            const double u0 = snap((anchor[0] + q[0] * side - set.origin[0]) / h);
            const double v0 = d == 2 ? snap((anchor[1] + q[1] * side - set.origin[1]) / h) : 0.0;
            const double m = d == 1 ? occ.box(u0, u0 + side_cells)
                                    : occ.box(u0, u0 + side_cells, v0, v0 + side_cells);
            if (m <= kEmpty) continue;
            ++rep.cubes_scanned;
            if (!first_empty_child(set, occ, u0, v0, side_cells, L)) {
                PorosityFailure f;
                f.depth = n;
                f.cube.side = side;
                f.cube.corner[0] = anchor[0] + q[0] * side;
                if (d == 2) f.cube.corner[1] = anchor[1] + q[1] * side;
                rep.failures.push_back(f);
            }
        }
        rep.depths_checked.push_back(n);
    }
    return rep;
}

nlohmann::json to_json(const GridSet& s) {
    nlohmann::json j;
    j["dimension"] = s.dimension;
    j["resolution"] = s.resolution;
    nlohmann::json origin = nlohmann::json::array(), extent = nlohmann::json::array();
    for (int a = 0; a < s.dimension; ++a) {
        origin.push_back(s.origin[a]);
        extent.push_back({s.extent[a][0], s.extent[a][1]});
    }
    j["origin"] = origin;
    j["extent"] = extent;
    nlohmann::json cubes = nlohmann::json::array();
    for (const auto& c : s.cubes) {
        if (s.dimension == 1)
            cubes.push_back({c[0]});
        else
            cubes.push_back({c[0], c[1]});
    }
    j["cubes"] = cubes;
    return j;
}

GridSet gridset_from_json(const nlohmann::json& j) {
    static const std::set<std::string> allowed{"dimension", "resolution", "origin", "extent", "cubes"};
    if (!j.is_object()) throw ConfigError("gridset json must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("gridset json: unknown key " + it.key());
    try {
        GridSet s;
        s.dimension = j.at("dimension").get<int>();
        if (s.dimension != 1 && s.dimension != 2) throw ConfigError("gridset: dimension must be 1 or 2");
        s.resolution = j.at("resolution").get<double>();
        if (!(s.resolution > 0.0)) throw ConfigError("gridset: resolution must be positive");
        const auto& ext = j.at("extent");
        for (int a = 0; a < s.dimension; ++a) {
            s.extent[a] = {ext.at(a).at(0).get<double>(), ext.at(a).at(1).get<double>()};
            s.origin[a] = s.extent[a][0];
        }
        if (j.contains("origin"))
            for (int a = 0; a < s.dimension; ++a) s.origin[a] = j["origin"].at(a).get<double>();
        for (const auto& c : j.at("cubes")) {
            if (c.size() != static_cast<std::size_t>(s.dimension)) throw ConfigError("gridset: cube index arity");
            Index idx{c.at(0).get<std::int64_t>(), s.dimension == 2 ? c.at(1).get<std::int64_t>() : 0};
            s.cubes.push_back(idx);
        }
        canonicalize(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("gridset json: ") + e.what());
    }
}

nlohmann::json to_json(const RegularityReport& r) {
    nlohmann::json j;
    j["delta"] = r.delta;
    j["constant_upper"] = r.constant_upper;
    j["constant_lower"] = r.constant_lower;
    j["scales_tested"] = {r.scales_tested[0], r.scales_tested[1]};
    j["side_lengths"] = r.side_lengths;
    j["cubes_upper"] = r.cubes_upper;
    j["cubes_lower"] = r.cubes_lower;
    j["stride"] = r.stride;
    j["requested_CR"] = r.requested_CR;
    j["resolution"] = r.resolution;
    j["pass"] = r.pass;
    return j;
}

nlohmann::json to_json(const PorosityReport& r) {
    nlohmann::json j;
    j["L"] = r.L;
    j["depths_checked"] = r.depths_checked;
    j["cubes_scanned"] = r.cubes_scanned;
    nlohmann::json f = nlohmann::json::array();
    for (const auto& x : r.failures) f.push_back({{"depth", x.depth}, {"corner", x.cube.corner}, {"side", x.cube.side}});
    j["failures"] = f;
    j["porous"] = r.porous();
    return j;
}

}  // namespace fuplab::regular_sets
