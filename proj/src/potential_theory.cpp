#include "fuplab/potential_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fuplab/errors.hpp"
#include "fuplab/fft.hpp"
#include "fuplab/parallel.hpp"
#include "fuplab/random.hpp"

namespace fuplab::potential {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// golden-section refinement of a maximum of f on [a, b]
template <class F>
double refine_max(F f, double a, double b, int iters = 60) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    return std::max(f1, f2);
}

// max of f(angle) over a circle: coarse scan plus refinement around the best sample
template <class F>
double circle_max(F f, int samples) {
    double best = kNegInf;
    int arg = 0;
    for (int j = 0; j < samples; ++j) {
        const double v = f(2.0 * kPi * j / samples);
        if (v > best) {
            best = v;
            arg = j;
        }
    }
    const double step = 2.0 * kPi / samples;
    return std::max(best, refine_max(f, (arg - 1) * step, (arg + 1) * step));
}

double interval_union_length(std::vector<std::pair<double, double>> iv, double lo, double hi) {
    for (auto& [a, b] : iv) {
        a = std::max(a, lo);
        b = std::min(b, hi);
    }
    std::erase_if(iv, [](const auto& p) { return p.second <= p.first; });
    std::sort(iv.begin(), iv.end());
    double total = 0.0, cur_a = 0.0, cur_b = 0.0;
    bool open = false;
    for (const auto& [a, b] : iv) {
        if (!open || a > cur_b) {
            if (open) total += cur_b - cur_a;
            cur_a = a;
            cur_b = b;
            open = true;
        } else {
            cur_b = std::max(cur_b, b);
        }
    }
    if (open) total += cur_b - cur_a;
    return total;
}

double real_trace(const DiskCover& cover) {
    std::vector<std::pair<double, double>> iv;
    for (const auto& d : cover.disks) {
        const double y = std::fabs(d.center.imag());
        if (y >= d.radius) continue;
        const double hw = std::sqrt((d.radius - y) * (d.radius + y));
        iv.emplace_back(d.center.real() - hw, d.center.real() + hw);
    }
    return interval_union_length(std::move(iv), -1.0, 1.0);
}

// Cartan disks for log|u| on r D rescaled to the unit disk, with the zeros in (1 - delta) D
// of the rescaled function, mapped back to the original scale.
DiskCover scaled_cover(const Polynomial1& u, double r, double delta, double H) {
    PointMasses pm;
    for (const auto& a : u.zeros)
        if (std::abs(a / r) < 1.0 - delta) {
            pm.points.push_back(a / r);
            pm.weights.push_back(1.0);
        }
    DiskCover out;
    out.H = r * H;
    if (pm.points.empty()) return out;
    DiskCover unit = cartan_disks(pm, H);
    for (auto& d : unit.disks) out.disks.push_back({d.center * r, d.radius * r});
    return out;
}

// largest Poisson average of log|F| over the circle of radius r (the maximum over r D)
double poisson_max(const Polynomial1& F, double r) {
    const int nodes = 4096;
    std::vector<complex> bnd(nodes);
    std::vector<double> vals(nodes);
    for (int k = 0; k < nodes; ++k) {
        bnd[k] = std::polar(1.0, 2.0 * kPi * k / nodes);
        vals[k] = F.log_abs(bnd[k]);
    }
    auto avg = [&](double angle) {
        const complex w = std::polar(r, angle);
        const double num = 1.0 - r * r;
        double s = 0.0;
        for (int k = 0; k < nodes; ++k) s += vals[k] * num / std::norm(bnd[k] - w);
        return s / nodes;
    };
    return circle_max(avg, 512);
}

// largest log|F| over the closed disk of radius rho on a 512 x 256 polar grid
double polar_max(const Polynomial1& F, double rho) {
    double best = F.log_abs(0.0);
    for (int i = 1; i <= 256; ++i) {
        const double rad = rho * i / 256.0;
        for (int j = 0; j < 512; ++j) best = std::max(best, F.log_abs(std::polar(rad, 2.0 * kPi * j / 512.0)));
    }
    return best;
}

}  // namespace

double PointMasses::total() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

double log_potential(complex z, const PointMasses& masses) {
    double s = 0.0;
    for (std::size_t j = 0; j < masses.points.size(); ++j) {
        if (masses.weights[j] == 0.0) continue;
        const double d = std::abs(z - masses.points[j]);
        if (d == 0.0) return kNegInf;
        s += masses.weights[j] * std::log(d);
    }
    return s;
}

double DiskCover::radius_sum() const {
    double s = 0.0;
    for (const auto& d : disks) s += d.radius;
    return s;
}

bool DiskCover::contains(complex z) const {
    return std::any_of(disks.begin(), disks.end(), [&](const Disk& d) { return std::abs(z - d.center) <= d.radius; });
}

double cartan_floor(double mass, double H) { return mass * (std::log(H) - 1.0); }

DiskCover cartan_disks(const PointMasses& masses, double H) {
    if (!(H > 0.0)) throw ConfigError("Cartan parameter H must be positive");
    if (masses.points.size() != masses.weights.size()) throw ConfigError("point and weight counts differ");
    for (double w : masses.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and nonnegative");
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < masses.points.size(); ++j)
        if (masses.weights[j] > 0.0) active.push_back(j);
    const double total = masses.total();
    if (!(total > 0.0)) throw ConfigError("total mass must be positive");

    const std::size_t n = active.size();
    std::vector<double> R(n, 0.0);
    std::vector<std::pair<double, double>> by_dist(n);
    for (std::size_t a = 0; a < n; ++a) {
        const complex za = masses.points[active[a]];
        for (std::size_t b = 0; b < n; ++b)
            by_dist[b] = {std::abs(masses.points[active[b]] - za), masses.weights[active[b]]};
        std::sort(by_dist.begin(), by_dist.end());
        double mass = 0.0;
        for (const auto& [d, w] : by_dist) {
            mass += w;
            const double cand = 2.0 * H * mass / total;
            if (cand >= d) R[a] = std::max(R[a], cand);
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return R[x] > R[y]; });

    std::vector<std::size_t> kept;
    std::vector<double> reach;
    for (std::size_t idx : order) {
        const complex z = masses.points[active[idx]];
        bool blocked = false;
        for (std::size_t t = 0; t < kept.size(); ++t) {
            const double d = std::abs(z - masses.points[active[kept[t]]]);
            if (d <= R[kept[t]] + R[idx]) {
                reach[t] = std::max(reach[t], d + 0.5 * R[idx]);
                blocked = true;
                break;
            }
        }
        if (!blocked) {
            kept.push_back(idx);
            reach.push_back(0.5 * R[idx]);
        }
    }
    DiskCover cover;
    cover.H = H;
    for (std::size_t t = 0; t < kept.size(); ++t) cover.disks.push_back({masses.points[active[kept[t]]], reach[t]});
    return cover;
}

complex Polynomial1::operator()(complex z) const {
    complex v = leading;
    for (const auto& a : zeros) v *= (z - a);
    return v;
}

double Polynomial1::log_abs(complex z) const {
    if (is_zero()) return kNegInf;
    double s = std::log(std::abs(leading));
    for (const auto& a : zeros) {
        const double d = std::abs(z - a);
        if (d == 0.0) return kNegInf;
        s += std::log(d);
    }
    return s;
}

PointMasses Polynomial1::riesz_masses() const {
    PointMasses pm;
    pm.points = zeros;
    pm.weights.assign(zeros.size(), 1.0);
    return pm;
}

Polynomial1 polynomial_from_coefficients(const std::vector<complex>& coeffs) {
    int deg = static_cast<int>(coeffs.size()) - 1;
    while (deg >= 0 && coeffs[deg] == complex(0.0, 0.0)) --deg;
    Polynomial1 p;
    if (deg < 0) {
        p.leading = 0.0;
        return p;
    }
    p.leading = coeffs[deg];
    if (deg == 0) return p;
    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs[i] / coeffs[deg];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    auto horner = [&](complex z, complex& deriv) {
        complex v = coeffs[deg];
        deriv = 0.0;
        for (int i = deg - 1; i >= 0; --i) {
            deriv = deriv * z + v;
            v = v * z + coeffs[i];
        }
        return v;
    };
    for (int i = 0; i < deg; ++i) {
        complex z = solver.eigenvalues()[i];
        // two Newton polishing steps on the original coefficients
        for (int it = 0; it < 2; ++it) {
            complex dv;
            const complex v = horner(z, dv);
            if (std::abs(dv) > 0.0) z -= v / dv;
        }
        p.zeros.push_back(z);
    }
    std::sort(p.zeros.begin(), p.zeros.end(), [](complex a, complex b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return p;
}

double poisson_average(const Polynomial1& F, complex w, int nodes) {
    if (!(std::abs(w) < 1.0)) throw ConfigError("Poisson average needs |w| < 1");
    const double num = 1.0 - std::norm(w);
    double s = 0.0;
    for (int k = 0; k < nodes; ++k) {
        const complex e = std::polar(1.0, 2.0 * kPi * k / nodes);
        s += F.log_abs(e) * num / std::norm(e - w);
    }
    return s / nodes;
}

RieszBoundsReport verify_riesz_bounds(const Polynomial1& F, double rho, double r, double r1) {
    if (!(0.0 < rho && rho < r1 && r1 < r && r < 1.0)) throw ConfigError("need 0 < rho < r1 < r < 1");
    if (F.is_zero()) throw ConfigError("F vanishes identically");
    for (const auto& a : F.zeros)
        if (std::fabs(std::abs(a) - 1.0) < 1e-9) throw ConfigError("zeros on the unit circle are not supported");
    RieszBoundsReport rep;
    rep.rho = rho;
    rep.r = r;
    rep.r1 = r1;
    rep.M = poisson_max(F, r);
    rep.m = polar_max(F, rho);
    for (const auto& a : F.zeros)
        if (std::abs(a) < r) rep.mass_measured += 1.0;
    const double gap = std::log((1.0 + rho * r) / (rho + r));
    rep.mass_bound = (rep.M - rep.m) / gap;

    // harmonic part on r D: the zeros outside r D plus the leading coefficient
    auto h = [&](double angle) {
        const complex w = std::polar(r1, angle);
        double s = std::log(std::abs(F.leading));
        for (const auto& a : F.zeros)
            if (std::abs(a) >= r) s += std::log(std::abs(w - a));
        return s;
    };
    const double hmax = circle_max(h, 4096);
    const double hmin = -circle_max([&](double t) { return -h(t); }, 4096);
    rep.deviation_measured = 0.5 * (hmax - hmin);
    rep.c_measured = 0.5 * (hmax + hmin);
    rep.deviation_bound =
        0.5 * (rep.M - rep.m) * (r + r1) / (r - r1) * std::log((1.0 + rho * r) / (1.0 - r * r)) / gap;
    rep.c_bound = rep.m - rep.deviation_bound - std::log(r + rho) * rep.mass_measured;
    return rep;
}

DiskLowerBoundReport check_disk_lower_bound(const Polynomial1& F, double delta, double H, int grid) {
    if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw ConfigError("delta must lie in (0, 1/3)");
    if (!(H > 0.0 && H <= 1.0)) throw ConfigError("H must lie in (0, 1]");
    if (F.is_zero()) throw ConfigError("F vanishes identically");
    const double rho = 1.0 - 3.0 * delta, r = 1.0 - delta, r1 = 1.0 - 2.0 * delta;
    DiskLowerBoundReport rep;
    rep.delta = delta;
    rep.H = H;
    rep.M = poisson_max(F, r);
    rep.m = polar_max(F, rho);
    rep.bound = rep.m - (rep.M - rep.m) * (2.0 * std::pow(delta, -3) * std::log(2.0 / delta) +
                                           std::pow(delta, -2) * std::log(2.0 * std::numbers::e / H));
    PointMasses pm;
    for (const auto& a : F.zeros)
        if (std::abs(a) < r) {
            pm.points.push_back(a);
            pm.weights.push_back(1.0);
        }
    rep.cover.H = H;
    if (!pm.points.empty()) rep.cover = cartan_disks(pm, H);
    rep.min_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const complex z(-r1 + 2.0 * r1 * (i + 0.5) / grid, -r1 + 2.0 * r1 * (j + 0.5) / grid);
            if (std::abs(z) >= r1 || rep.cover.contains(z)) continue;
            ++rep.probes;
            const double v = F.log_abs(z);
            rep.min_value = std::min(rep.min_value, v);
            if (v < rep.bound) ++rep.violations;
        }
    return rep;
}

complex Polynomial2::operator()(complex z1, complex z2) const {
    complex s = 0.0, p1 = 1.0;
    for (const auto& row : coeff) {
        complex inner = 0.0;
        for (auto it = row.rbegin(); it != row.rend(); ++it) inner = inner * z2 + *it;
        s += p1 * inner;
        p1 *= z1;
    }
    return s;
}

double Polynomial2::log_abs(complex z1, complex z2) const {
    const double a = std::abs((*this)(z1, z2));
    return a == 0.0 ? kNegInf : std::log(a);
}

bool Polynomial2::is_zero() const {
    for (const auto& row : coeff)
        for (const auto& c : row)
            if (c != complex(0.0, 0.0)) return false;
    return true;
}

bool Polynomial2::is_constant() const {
    for (std::size_t i = 0; i < coeff.size(); ++i)
        for (std::size_t j = 0; j < coeff[i].size(); ++j)
            if ((i != 0 || j != 0) && coeff[i][j] != complex(0.0, 0.0)) return false;
    return true;
}

Polynomial1 Polynomial2::in_first(complex z2) const {
    std::vector<complex> c(coeff.size(), 0.0);
    for (std::size_t i = 0; i < coeff.size(); ++i) {
        complex v = 0.0;
        for (auto it = coeff[i].rbegin(); it != coeff[i].rend(); ++it) v = v * z2 + *it;
        c[i] = v;
    }
    return polynomial_from_coefficients(c);
}

Polynomial1 Polynomial2::in_second(complex z1) const {
    std::size_t width = 0;
    for (const auto& row : coeff) width = std::max(width, row.size());
    std::vector<complex> c(width, 0.0);
    complex p1 = 1.0;
    for (const auto& row : coeff) {
        for (std::size_t j = 0; j < row.size(); ++j) c[j] += p1 * row[j];
        p1 *= z1;
    }
    return polynomial_from_coefficients(c);
}

DiskCover Cartan2::second(complex z1) const {
    if (trivial) return DiskCover{{}, r * H};
    const Polynomial1 u = F.in_second(z1);
    if (u.is_zero()) throw ContractViolation("slice vanishes identically at a good first coordinate");
    return scaled_cover(u, r, delta, H);
}

bool Cartan2::contains(complex z1, complex z2) const {
    if (trivial) return false;
    return first.contains(z1) || second(z1).contains(z2);
}

CartanSet Cartan2::sample_real_slices(int n) const {
    if (n <= 0) throw ConfigError("slice count must be positive");
    CartanSet set;
    set.dimension = 2;
    set.H = r * H;
    set.first = first;
    for (int i = 0; i < n; ++i) {
        const double x = -1.0 + (i + 0.5) * 2.0 / n;
        if (first.contains(x)) continue;
        CartanSet sub;
        sub.dimension = 1;
        sub.H = r * H;
        sub.first = second(x);
        set.slice_points.push_back(x);
        set.slice_weights.push_back(2.0 / n);
        set.slices.push_back(std::move(sub));
    }
    return set;
}

Cartan2 build_cartan2(const Polynomial2& F, double H, double rho, double r) {
    if (!(0.0 < rho && rho < r && r < 1.0)) throw ConfigError("need 0 < rho < r < 1");
    if (!(H > 0.0 && H <= 1.0)) throw ConfigError("H must lie in (0, 1]");
    if (F.is_zero()) throw ConfigError("F vanishes identically");
    Cartan2 c;
    c.F = F;
    c.H = H;
    c.rho = rho;
    c.r = r;
    c.delta = (1.0 - rho / r) / 3.0;
    c.r1 = r * (1.0 - 2.0 * c.delta);
    c.L = 2.0 * std::pow(c.delta, -3) * std::log(2.0 / c.delta) +
          std::pow(c.delta, -2) * std::log(2.0 * std::numbers::e / H);
    c.first.H = r * H;
    if (F.is_constant()) {
        c.trivial = true;
        c.M = c.m = std::log(std::abs(F.coeff[0][0]));
        c.bound = c.m;
        return c;
    }

    // double Poisson average at radius r: Fourier multiplier r^{|k1| + |k2|} on the torus
    const int n = 256;
    std::vector<cplx> grid(static_cast<std::size_t>(n) * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const complex z1 = std::polar(1.0, 2.0 * kPi * (a - n / 2) / n);
            const complex z2 = std::polar(1.0, 2.0 * kPi * (b - n / 2) / n);
            grid[static_cast<std::size_t>(a) * n + b] = F.log_abs(z1, z2);
        }
    const CenteredFft fft({n, n});
    fft.forward(grid);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            grid[static_cast<std::size_t>(a) * n + b] *= std::pow(r, std::abs(a - n / 2) + std::abs(b - n / 2));
    fft.inverse(grid);
    c.M = kNegInf;
    for (const auto& v : grid) c.M = std::max(c.M, v.real());

    // max over the polydisk of radius rho sits on its torus
    const int s = 512;
    c.m = kNegInf;
    for (int a = 0; a < s; ++a)
        for (int b = 0; b < s; ++b) {
            const complex z1 = std::polar(rho, 2.0 * kPi * a / s);
            const complex z2 = std::polar(rho, 2.0 * kPi * b / s);
            const double v = F.log_abs(z1, z2);
            if (v > c.m) {
                c.m = v;
                c.z2_star = z2;
            }
        }
    if (!(c.M > c.m)) throw ConfigError("degenerate bounds: M does not exceed m");
    c.bound = c.m - (c.M - c.m) * (c.L + 1.0) * (c.L + 1.0);
    c.first = scaled_cover(F.in_first(c.z2_star), r, c.delta, H);
    return c;
}

Cartan2ProbeReport probe_cartan2(const Cartan2& set, std::size_t probes, unsigned long long seed, int threads) {
    Rng rng(seed);
    std::vector<std::pair<complex, complex>> pts(probes);
    for (auto& p : pts) {
        p.first = uniform_in_disk(rng, set.r1);
        p.second = uniform_in_disk(rng, set.r1);
    }
    std::vector<double> value(probes, std::numeric_limits<double>::quiet_NaN());
    parallel_for(probes, threads, [&](std::size_t i) {
        if (!set.contains(pts[i].first, pts[i].second)) value[i] = set.F.log_abs(pts[i].first, pts[i].second);
    });
    Cartan2ProbeReport rep;
    rep.probes = probes;
    rep.min_value = std::numeric_limits<double>::infinity();
    for (double v : value) {
        if (std::isnan(v)) continue;
        ++rep.outside;
        rep.min_value = std::min(rep.min_value, v);
        if (v < set.bound) ++rep.violations;
    }
    return rep;
}

double trace_measure(const CartanSet& set) {
    if (set.dimension < 1) throw ConfigError("dimension must be at least 1");
    if (set.slices.size() != set.slice_weights.size()) throw ConfigError("slice weights do not match slices");
    const double full_width = std::pow(2.0, set.dimension - 1);
    double total = full_width * real_trace(set.first);
    for (std::size_t i = 0; i < set.slices.size(); ++i) total += set.slice_weights[i] * trace_measure(set.slices[i]);
    return total;
}

nlohmann::json to_json(const DiskCover& cover) {
    nlohmann::json disks = nlohmann::json::array();
    for (const auto& d : cover.disks) disks.push_back({{"center", {d.center.real(), d.center.imag()}}, {"radius", d.radius}});
    return {{"H", cover.H}, {"radius_sum", cover.radius_sum()}, {"disks", disks}};
}

nlohmann::json to_json(const RieszBoundsReport& r) {
    return {{"M", r.M},
            {"m", r.m},
            {"rho", r.rho},
            {"r", r.r},
            {"r1", r.r1},
            {"mass_measured", r.mass_measured},
            {"mass_bound", r.mass_bound},
            {"deviation_measured", r.deviation_measured},
            {"deviation_bound", r.deviation_bound},
            {"c_measured", r.c_measured},
            {"c_bound", r.c_bound},
            {"pass", r.pass()}};
}

nlohmann::json to_json(const DiskLowerBoundReport& r) {
    return {{"delta", r.delta}, {"H", r.H},         {"M", r.M},
            {"m", r.m},         {"bound", r.bound}, {"cover", to_json(r.cover)},
            {"probes", r.probes}, {"violations", r.violations}, {"min_value", r.min_value}};
}

nlohmann::json to_json(const Cartan2ProbeReport& r) {
    return {{"probes", r.probes}, {"outside", r.outside}, {"violations", r.violations}, {"min_value", r.min_value}};
}

PointMasses seeded_masses(unsigned long long seed) {
    Rng sizes(seed);
    const int count = 1 + static_cast<int>(uniform01(sizes) * 20);
    Rng rng(seed);
    PointMasses pm;
    for (int j = 0; j < count; ++j) {
        pm.points.push_back(uniform_in_disk(rng, 1.0));
        pm.weights.push_back(0.1 + 0.9 * uniform01(rng));
    }
    return pm;
}

Polynomial1 seeded_polynomial(unsigned long long seed) {
    Rng rng(seed);
    Polynomial1 F;
    F.leading = complex_normal(rng);
    const int degree = 1 + static_cast<int>(uniform01(rng) * 8);
    for (int j = 0; j < degree; ++j) F.zeros.push_back(uniform_in_disk(rng, 1.8));
    return F;
}

Polynomial2 seeded_polynomial2(unsigned long long seed, int d1, int d2) {
    if (d1 < 0 || d2 < 0) throw ConfigError("seeded_polynomial2: degrees must be nonnegative");
    Rng rng(seed);
    Polynomial2 F;
    F.coeff.assign(static_cast<std::size_t>(d1 + 1), std::vector<complex>(static_cast<std::size_t>(d2 + 1)));
    for (auto& row : F.coeff)
        for (auto& c : row) c = complex_normal(rng);
    return F;
}

CoverProbeReport probe_cartan_cover(const PointMasses& masses, const DiskCover& cover, int n) {
    if (n < 1) throw ConfigError("probe grid must have at least one point per axis");
    CoverProbeReport rep;
    rep.floor = cartan_floor(masses.total(), cover.H);
    rep.min_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const complex z(-1.0 + 2.0 * (i + 0.5) / n, -1.0 + 2.0 * (j + 0.5) / n);
            if (cover.contains(z)) continue;
            ++rep.probes;
            const double v = log_potential(z, masses);
            rep.min_value = std::min(rep.min_value, v);
            if (v < rep.floor) ++rep.violations;
        }
    return rep;
}

nlohmann::json to_json(const CoverProbeReport& r) {
    return {{"probes", r.probes},
            {"violations", r.violations},
            {"min_value", std::isfinite(r.min_value) ? nlohmann::json(r.min_value) : nlohmann::json(nullptr)},
            {"floor", r.floor}};
}

}  // namespace fuplab::potential
