#include "fuplab/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fuplab/errors.hpp"
#include "fuplab/parallel.hpp"
#include "fuplab/random.hpp"

namespace fuplab::localization {

namespace {

constexpr double kPi = std::numbers::pi;

void validate_grid(const Grid& g, int dimension) {
    if (dimension != 1 && dimension != 2) throw ConfigError("dimension must be 1 or 2");
    if (g.n <= 0 || g.n % 2 != 0) throw ConfigError("grid size must be positive and even");
    if (!(g.dx > 0.0) || !std::isfinite(g.dx)) throw ConfigError("grid spacing must be positive");
}

std::size_t total_points(int dimension, const Grid& g) {
    return dimension == 1 ? static_cast<std::size_t>(g.n) : static_cast<std::size_t>(g.n) * g.n;
}

std::vector<int> fft_dims(int dimension, const Grid& g) {
    return dimension == 1 ? std::vector<int>{g.n} : std::vector<int>{g.n, g.n};
}

double coordinate(int j, const Grid& g) { return (j - g.n / 2) * g.dx; }
double frequency(int l, const Grid& g) { return (l - g.n / 2) / (g.n * g.dx); }

// Samples per unit length; the lattice cells must line up with the grid.
int samples_per_unit(const Grid& g) {
    const int spu = static_cast<int>(std::lround(1.0 / g.dx));
    if (spu < 1 || std::fabs(spu * g.dx - 1.0) > 1e-12) throw ConfigError("grid spacing must be 1/integer");
    if (g.n % spu != 0 || (g.n / spu) % 2 != 0) throw ConfigError("grid period must be an even integer");
    return spu;
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double hashed_uniform(std::uint64_t seed, long long cell, int axis) {
    const std::uint64_t key = mix(static_cast<std::uint64_t>(cell) * 2 + static_cast<std::uint64_t>(axis));
    return static_cast<double>(mix(seed ^ key) >> 11) * 0x1.0p-53;
}

double bump(double t) { return std::fabs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

double l1_frequency(std::size_t idx, int dimension, const Grid& g) {
    if (dimension == 1) return std::fabs(frequency(static_cast<int>(idx), g));
    return std::fabs(frequency(static_cast<int>(idx / g.n), g)) + std::fabs(frequency(static_cast<int>(idx % g.n), g));
}

double theta(double l1, double alpha) { return std::pow(std::log(2.0 + l1), -alpha); }

// sum over the grid of weight(|xi|_1) |fhat|^2 dxi^d
template <class W>
double weighted_spectral(const SampledFunction& f, const std::vector<cplx>& spec, W weight) {
    double s = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double a = std::norm(spec[i]);
        if (a != 0.0) s += weight(l1_frequency(i, f.dimension, f.grid)) * a;
    }
    return s * std::pow(f.dxi(), f.dimension);
}

double central_fraction(const SampledFunction& f) {
    const double window = f.period() / 16.0;
    double inside = 0.0, total = 0.0;
    const int n = f.grid.n;
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        const double a = std::norm(f.samples[i]);
        total += a;
        bool in = false;
        if (f.dimension == 1)
            in = std::fabs(coordinate(static_cast<int>(i), f.grid)) <= window;
        else
            in = std::fabs(coordinate(static_cast<int>(i / n), f.grid)) <= window &&
                 std::fabs(coordinate(static_cast<int>(i % n), f.grid)) <= window;
        if (in) inside += a;
    }
    return total > 0.0 ? inside / total : 1.0;
}

SampledFunction from_spectrum(std::vector<cplx> spec, int dimension, const Grid& grid) {
    SampledFunction f;
    f.dimension = dimension;
    f.grid = grid;
    f.samples = from_spectral(spec, dimension, grid);
    f.spectral = std::move(spec);
    const double norm = std::sqrt(f.norm_squared());
    if (norm > 0.0) {
        for (auto& v : f.samples) v /= norm;
        for (auto& v : f.spectral) v /= norm;
    }
    f.central_mass = central_fraction(f);
    return f;
}

std::vector<cplx> bump_spectrum(std::uint64_t seed, double band, int dimension, const Grid& grid) {
    validate_grid(grid, dimension);
    if (!(band > 0.0)) throw ConfigError("band must be positive");
    if (band > 0.5 / grid.dx * (1.0 + 1e-12)) throw ConfigError("band exceeds the grid Nyquist frequency");
    Rng rng(seed);
    const int bumps = 3;
    // bump half-width in l2, with the whole bump inside the l1 ball of radius band
    const double width = dimension == 1 ? 0.5 * band : 0.25 * band;
    const double reach = band - width * std::sqrt(static_cast<double>(dimension));
    std::vector<std::vector<double>> centers;
    std::vector<cplx> amps;
    while (static_cast<int>(centers.size()) < bumps) {
        std::vector<double> c(dimension);
        double l1 = 0.0;
        for (auto& v : c) {
            v = reach * (2.0 * uniform01(rng) - 1.0);
            l1 += std::fabs(v);
        }
        if (l1 > reach) continue;
        centers.push_back(c);
        amps.push_back(complex_normal(rng));
    }
    std::vector<cplx> spec(total_points(dimension, grid), 0.0);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        double xi[2] = {0.0, 0.0};
        if (dimension == 1) {
            xi[0] = frequency(static_cast<int>(i), grid);
        } else {
            xi[0] = frequency(static_cast<int>(i / grid.n), grid);
            xi[1] = frequency(static_cast<int>(i % grid.n), grid);
        }
        if (std::fabs(xi[0]) + std::fabs(xi[1]) > band) continue;
        cplx v = 0.0;
        for (int m = 0; m < bumps; ++m) {
            double r2 = 0.0;
            for (int a = 0; a < dimension; ++a) r2 += (xi[a] - centers[m][a]) * (xi[a] - centers[m][a]);
            v += amps[m] * bump(std::sqrt(r2) / width);
        }
        spec[i] = v;
    }
    return spec;
}

// offset on the family's step lattice so that placement does not depend on the grid
double random_offset(const IntervalFamily& family, double u, double side) {
    const int slots = static_cast<int>(std::floor((1.0 - side) / family.offset_step + 1e-9)) + 1;
    return std::min(static_cast<int>(u * slots), slots - 1) * family.offset_step;
}

// composite trapezoid weights over `len` steps
double trapezoid_weight(int k, int len) { return (k == 0 || k == len) ? 0.5 : 1.0; }

}  // namespace

double SampledFunction::norm_squared() const {
    double s = 0.0;
    for (const auto& v : samples) s += std::norm(v);
    return s * std::pow(grid.dx, dimension);
}

double SampledFunction::spectral_norm_squared() const {
    double s = 0.0;
    for (const auto& v : spectral) s += std::norm(v);
    return s * std::pow(dxi(), dimension);
}

std::vector<cplx> to_spectral(const SampledFunction& f) {
    validate_grid(f.grid, f.dimension);
    std::vector<cplx> a = f.samples;
    if (a.size() != total_points(f.dimension, f.grid)) throw ConfigError("sample count does not match the grid");
    CenteredFft(fft_dims(f.dimension, f.grid)).forward(a);
    const double scale = std::pow(f.grid.dx, f.dimension) * std::sqrt(static_cast<double>(a.size()));
    for (auto& v : a) v *= scale;
    return a;
}

std::vector<cplx> from_spectral(const std::vector<cplx>& spectral, int dimension, const Grid& grid) {
    validate_grid(grid, dimension);
    std::vector<cplx> a = spectral;
    if (a.size() != total_points(dimension, grid)) throw ConfigError("spectral count does not match the grid");
    CenteredFft(fft_dims(dimension, grid)).inverse(a);
    const double scale = 1.0 / (std::pow(grid.dx, dimension) * std::sqrt(static_cast<double>(a.size())));
    for (auto& v : a) v *= scale;
    return a;
}

double parseval_defect(const SampledFunction& f) {
    const double a = f.norm_squared();
    const double b = f.spectral.empty() ? SampledFunction{f.dimension, f.grid, {}, to_spectral(f)}.spectral_norm_squared()
                                        : f.spectral_norm_squared();
    if (a == 0.0) return b == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::fabs(a - b) / a;
}

SampledFunction band_limited_sample(std::uint64_t seed, double band, int dimension, const Grid& grid) {
    return from_spectrum(bump_spectrum(seed, band, dimension, grid), dimension, grid);
}

SampledFunction damped_sample(std::uint64_t seed, double band, double alpha, int dimension, const Grid& grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    std::vector<cplx> spec = bump_spectrum(seed, band, dimension, grid);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        const double l1 = l1_frequency(i, dimension, grid);
        spec[i] *= std::exp(-2.0 * theta(l1, alpha) * l1);
    }
    return from_spectrum(std::move(spec), dimension, grid);
}

SampledFunction plane_wave(const std::vector<int>& mode, int dimension, const Grid& grid) {
    validate_grid(grid, dimension);
    if (static_cast<int>(mode.size()) != dimension) throw ConfigError("mode needs one entry per axis");
    for (int m : mode)
        if (std::abs(m) >= grid.n / 2) throw ConfigError("mode beyond the grid Nyquist frequency");
    SampledFunction f;
    f.dimension = dimension;
    f.grid = grid;
    f.samples.resize(total_points(dimension, grid));
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        double phase = 0.0;
        if (dimension == 1) {
            phase = mode[0] * (static_cast<int>(i) - grid.n / 2);
        } else {
            phase = mode[0] * (static_cast<int>(i / grid.n) - grid.n / 2) + mode[1] * (static_cast<int>(i % grid.n) - grid.n / 2);
        }
        f.samples[i] = std::polar(1.0, 2.0 * kPi * phase / grid.n);
    }
    f.spectral = to_spectral(f);
    f.central_mass = central_fraction(f);
    return f;
}

SampledFunction zero_function(int dimension, const Grid& grid) {
    validate_grid(grid, dimension);
    SampledFunction f;
    f.dimension = dimension;
    f.grid = grid;
    f.samples.assign(total_points(dimension, grid), 0.0);
    f.spectral = f.samples;
    return f;
}

SampledFunction shift_lattice(const SampledFunction& f, const std::vector<int>& shift) {
    if (static_cast<int>(shift.size()) != f.dimension) throw ConfigError("shift needs one entry per axis");
    const int spu = samples_per_unit(f.grid);
    const long long n = f.grid.n;
    auto wrap = [n](long long v) { return ((v % n) + n) % n; };
    SampledFunction g = f;
    if (f.dimension == 1) {
        for (long long j = 0; j < n; ++j) g.samples[wrap(j + static_cast<long long>(shift[0]) * spu)] = f.samples[j];
    } else {
        for (long long a = 0; a < n; ++a)
            for (long long b = 0; b < n; ++b)
                g.samples[wrap(a + static_cast<long long>(shift[0]) * spu) * n + wrap(b + static_cast<long long>(shift[1]) * spu)] =
                    f.samples[a * n + b];
    }
    g.spectral = to_spectral(g);
    g.central_mass = central_fraction(g);
    return g;
}

void IntervalFamily::validate() const {
    if (dimension != 1 && dimension != 2) throw ConfigError("family dimension must be 1 or 2");
    if (!(lambda > 0.0 && lambda <= 0.5)) throw ConfigError("lambda must lie in (0, 1/2]");
    const double side = std::pow(lambda, 1.0 / dimension);
    if (!random && !(offset >= 0.0 && offset + side <= 1.0 + 1e-12)) throw ConfigError("offset puts the sub-cell outside its cell");
    if (!shift.empty() && static_cast<int>(shift.size()) != dimension) throw ConfigError("shift needs one entry per axis");
    if (random && !(offset_step > 0.0 && offset_step <= 1.0)) throw ConfigError("offset step must lie in (0, 1]");
}

double default_kappa(double q, double lambda, int dimension, double c_tilde) {
    if (!(q > 0.0)) throw ConfigError("q must be positive");
    if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must lie in (0, 1)");
    return std::exp(-c_tilde / q) * std::pow(-std::log(lambda), -dimension);
}

double local_mass(const SampledFunction& f, const IntervalFamily& family, double* quantization) {
    family.validate();
    if (family.dimension != f.dimension) throw ConfigError("family and function dimensions differ");
    const int spu = samples_per_unit(f.grid);
    const int n = f.grid.n;
    const int cells = n / spu;
    const double side = std::pow(family.lambda, 1.0 / f.dimension);
    const int len = static_cast<int>(std::lround(side / f.grid.dx));
    if (len < 1 || len > spu) throw ConfigError("sub-cell is not resolved by the grid");
    if (quantization) *quantization = std::fabs(std::pow(len * f.grid.dx, f.dimension) - family.lambda);

    auto offset_index = [&](long long lattice_cell, int axis) {
        double o = family.offset;
        if (family.random) {
            long long key = lattice_cell - (family.shift.empty() ? 0 : family.shift[axis]);
            key = ((key + cells / 2) % cells + cells) % cells - cells / 2;
            o = random_offset(family, hashed_uniform(family.seed, key, axis), side);
        }
        return std::clamp(static_cast<int>(std::lround(o / f.grid.dx)), 0, spu - len);
    };
    auto start_index = [&](int cell, int axis) {
        return cell * spu + offset_index(static_cast<long long>(cell) - cells / 2, axis);
    };

    std::vector<double> g(f.samples.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::norm(f.samples[i]);
    double total = 0.0;
    if (f.dimension == 1) {
        for (int c = 0; c < cells; ++c) {
            const int s = start_index(c, 0);
            double acc = 0.0;
            for (int k = 0; k <= len; ++k) acc += trapezoid_weight(k, len) * g[(s + k) % n];
            total += acc;
        }
        return total * f.grid.dx;
    }
    // in 2D the random offsets of a cell depend on both lattice coordinates
    for (int c0 = 0; c0 < cells; ++c0)
        for (int c1 = 0; c1 < cells; ++c1) {
            int s0 = start_index(c0, 0), s1 = start_index(c1, 1);
            if (family.random) {
                const long long l0 = c0 - cells / 2 - (family.shift.empty() ? 0 : family.shift[0]);
                const long long l1 = c1 - cells / 2 - (family.shift.empty() ? 0 : family.shift[1]);
                const long long w0 = ((l0 + cells / 2) % cells + cells) % cells;
                const long long w1 = ((l1 + cells / 2) % cells + cells) % cells;
                const long long key = w0 * cells + w1;
                const double o0 = random_offset(family, hashed_uniform(family.seed, key, 0), side);
                const double o1 = random_offset(family, hashed_uniform(family.seed, key, 1), side);
                s0 = c0 * spu + std::clamp(static_cast<int>(std::lround(o0 / f.grid.dx)), 0, spu - len);
                s1 = c1 * spu + std::clamp(static_cast<int>(std::lround(o1 / f.grid.dx)), 0, spu - len);
            }
            double acc = 0.0;
            for (int a = 0; a <= len; ++a) {
                const std::size_t row = static_cast<std::size_t>((s0 + a) % n) * n;
                double racc = 0.0;
                for (int b = 0; b <= len; ++b) racc += trapezoid_weight(b, len) * g[row + (s1 + b) % n];
                acc += trapezoid_weight(a, len) * racc;
            }
            total += acc;
        }
    return total * f.grid.dx * f.grid.dx;
}

LocalizationReport localization_check(const SampledFunction& f, const IntervalFamily& family, double q, double kappa,
                                      double q_max) {
    if (!(q > 0.0 && q <= q_max)) throw ConfigError("q must lie in (0, q_max]");
    if (!(kappa > 0.0 && kappa < 1.0)) throw ConfigError("kappa must lie in (0, 1)");
    LocalizationReport r;
    r.dimension = f.dimension;
    r.q = q;
    r.lambda = family.lambda;
    r.kappa_used = kappa;
    r.constant_form = f.dimension == 1 ? "12*exp(10*C1/q)" : "exp(2*C/q)";
    r.sum_local = local_mass(f, family, &r.quantization);
    r.lhs = f.norm_squared();
    const std::vector<cplx> spec = f.spectral.empty() ? to_spectral(f) : f.spectral;
    r.weight_norm = weighted_spectral(f, spec, [q](double l1) { return std::exp(4.0 * kPi * q * l1); });
    if (r.lhs == 0.0) {
        r.degenerate = true;
        r.finite = false;
        r.empirical_constant = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.empirical_constant =
        std::exp(std::log(r.lhs) - kappa * std::log(r.sum_local) - (1.0 - kappa) * std::log(r.weight_norm));
    r.finite = std::isfinite(r.empirical_constant);
    return r;
}

UpThetaReport up_theta_check(const SampledFunction& f, double alpha, double A, const IntervalFamily& family) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(A > 0.0)) throw ConfigError("A must be positive");
    UpThetaReport r;
    r.alpha = alpha;
    r.A = A;
    r.norm = std::sqrt(f.norm_squared());
    r.local_norm = std::sqrt(local_mass(f, family));
    if (r.norm == 0.0) {
        r.degenerate = true;
        r.ratio = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    const std::vector<cplx> spec = f.spectral.empty() ? to_spectral(f) : f.spectral;
    r.A_measured =
        std::sqrt(weighted_spectral(f, spec, [alpha](double l1) { return std::exp(2.0 * theta(l1, alpha) * l1); })) / r.norm;
    if (r.A_measured > A) throw ConfigError("decay hypothesis fails: measured A exceeds the given A");
    r.ratio = r.local_norm > 0.0 ? r.norm / r.local_norm : std::numeric_limits<double>::infinity();
    return r;
}

bool EnvelopeReport::stable(double tol) const {
    return std::all_of(rows.begin(), rows.end(), [tol](const EnvelopeRow& r) { return r.finite && r.relative_change <= tol; });
}

bool growth_at_most_linear(const std::vector<double>& qs, const std::vector<double>& K) {
    if (qs.size() != K.size()) throw ConfigError("q and K lists differ in length");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < qs.size(); ++i) pts.emplace_back(1.0 / qs[i], std::log(K[i]));
    std::sort(pts.begin(), pts.end());
    if (pts.size() < 3) return true;
    const double first = (pts[1].second - pts[0].second) / (pts[1].first - pts[0].first);
    const double cap = std::max(first, 0.0);
    for (std::size_t i = 2; i < pts.size(); ++i) {
        const double slope = (pts[i].second - pts[i - 1].second) / (pts[i].first - pts[i - 1].first);
        if (slope > cap + 1e-12) return false;
    }
    return true;
}

EnvelopeReport localization_envelope(const EnvelopeConfig& cfg) {
    if (cfg.qs.empty() || cfg.seeds <= 0) throw ConfigError("envelope needs q values and seeds");
    const Grid fine{cfg.grid.n * 2, cfg.grid.dx / 2.0};
    const std::size_t nq = cfg.qs.size(), ns = static_cast<std::size_t>(cfg.seeds);
    std::vector<double> coarse(nq * ns), refined(nq * ns), central(ns);
    parallel_for(ns, cfg.threads, [&](std::size_t s) {
        IntervalFamily fam;
        fam.dimension = cfg.dimension;
        fam.lambda = cfg.lambda;
        fam.random = true;
        fam.seed = s;
        const SampledFunction f = band_limited_sample(s, cfg.band, cfg.dimension, cfg.grid);
        const SampledFunction g = band_limited_sample(s, cfg.band, cfg.dimension, fine);
        central[s] = f.central_mass;
        for (std::size_t i = 0; i < nq; ++i) {
            const double kappa = default_kappa(cfg.qs[i], cfg.lambda, cfg.dimension, cfg.c_tilde);
            coarse[i * ns + s] = localization_check(f, fam, cfg.qs[i], kappa).empirical_constant;
            refined[i * ns + s] = localization_check(g, fam, cfg.qs[i], kappa).empirical_constant;
        }
    });
    EnvelopeReport rep;
    rep.min_central_mass = *std::min_element(central.begin(), central.end());
    std::vector<double> Ks;
    for (std::size_t i = 0; i < nq; ++i) {
        EnvelopeRow row;
        row.q = cfg.qs[i];
        row.K = *std::max_element(coarse.begin() + i * ns, coarse.begin() + (i + 1) * ns);
        row.K_refined = *std::max_element(refined.begin() + i * ns, refined.begin() + (i + 1) * ns);
        row.finite = std::isfinite(row.K) && std::isfinite(row.K_refined) && row.K > 0.0;
        row.relative_change = std::fabs(row.K_refined - row.K) / row.K;
        Ks.push_back(row.K);
        rep.rows.push_back(row);
    }
    rep.growth_at_most_linear = growth_at_most_linear(cfg.qs, Ks);
    return rep;
}

nlohmann::json to_json(const LocalizationReport& r) {
    return {{"dimension", r.dimension},
            {"q", r.q},
            {"lambda", r.lambda},
            {"kappa", r.kappa_used},
            {"lhs", r.lhs},
            {"sum_local", r.sum_local},
            {"weight_norm", r.weight_norm},
            {"empirical_constant", r.finite ? nlohmann::json(r.empirical_constant) : nlohmann::json(nullptr)},
            {"quantization", r.quantization},
            {"finite", r.finite},
            {"degenerate", r.degenerate},
            {"constant_form", r.constant_form}};
}

nlohmann::json to_json(const UpThetaReport& r) {
    return {{"alpha", r.alpha},
            {"A", r.A},
            {"A_measured", r.A_measured},
            {"norm", r.norm},
            {"local_norm", r.local_norm},
            {"ratio", r.degenerate ? nlohmann::json(nullptr) : nlohmann::json(r.ratio)},
            {"degenerate", r.degenerate}};
}

nlohmann::json to_json(const EnvelopeReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"q", row.q},
                        {"K", row.K},
                        {"K_refined", row.K_refined},
                        {"relative_change", row.relative_change},
                        {"finite", row.finite}});
    return {{"rows", rows}, {"min_central_mass", r.min_central_mass}, {"growth_at_most_linear", r.growth_at_most_linear}};
}

}  // namespace fuplab::localization
