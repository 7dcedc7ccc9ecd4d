#include "fuplab/damping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "fuplab/constants.hpp"
#include "fuplab/errors.hpp"
#include "fuplab/parallel.hpp"
#include "fuplab/quadrature.hpp"

namespace fuplab::damping {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double japanese(double x) { return std::sqrt(1.0 + x * x); }

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

std::int64_t floor_to_int(double v) { return static_cast<std::int64_t>(std::floor(v)); }

// Least-squares fit of log|f| = log|a| + beta log|t| when f keeps one sign, else the mean.
TailFit fit_tail(const std::vector<double>& t, const std::vector<double>& f, TailModel model) {
    TailFit fit;
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= static_cast<double>(f.size());
    bool one_sign = model == TailModel::PowerLaw;
    for (double v : f)
        if (!(v != 0.0) || (v > 0.0) != (f.front() > 0.0)) one_sign = false;
    if (!one_sign) {
        fit.amplitude = mean;
        return fit;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double lx = std::log(std::abs(t[i])), ly = std::log(std::abs(f[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double den = m * sxx - sx * sx;
    const double beta = den > 0.0 ? (m * sxy - sx * sy) / den : 0.0;
    const double loga = (sy - beta * sx) / m;
    if (beta >= 0.99) throw ConfigError("hilbert: tail grows too fast for the modified kernel (fitted exponent " +
                                        std::to_string(beta) + ")");
    fit.exponent = beta;
    fit.amplitude = (f.front() > 0.0 ? 1.0 : -1.0) * std::exp(loga);
    return fit;
}

// Jump profile: step minus a two-scale arctan ramp whose 1/y tails cancel; decays like y^-3.
double jump_residual(double y, double eps) {
    return (y >= 0.0 ? 0.5 : -0.5) - (2.0 * std::atan(y / eps) - std::atan(y / (2.0 * eps))) / kPi;
}

// Standard Hilbert transform of jump_residual.
double jump_residual_hilbert(double y, double eps) {
    return (std::log(std::abs(y)) - std::log(y * y + eps * eps) + 0.5 * std::log(y * y + 4.0 * eps * eps)) / kPi;
}

// int jump_residual(z) (z + a) / ((z + a)^2 + 1) dz, the modified kernel's constant.
double jump_residual_constant(double a, double eps) {
    auto f = [&](double z) { return jump_residual(z, eps) * (z + a) / ((z + a) * (z + a) + 1.0); };
    const double L = 2000.0 * eps;
    double total = 0.0;
    // split at the jump and at the kernel peak so the adaptive rule sees smooth pieces
    std::vector<double> cuts = {-L, 0.0, L};
    if (-a > -L && -a < L && a != 0.0) cuts.push_back(-a);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate_adaptive(f, cuts[i], cuts[i + 1], 1e-12);
    return total;
}

// Merged closed intervals of a 1D GridSet.
std::vector<std::array<double, 2>> intervals_of(const GridSet& Y) {
    std::vector<std::array<double, 2>> out;
    if (Y.dimension != 1) throw ConfigError("damping: expected a 1D set");
    for (const auto& c : Y.cubes) {
        const double lo = Y.origin[0] + c[0] * Y.resolution, hi = lo + Y.resolution;
        if (!out.empty() && lo <= out.back()[1] + 1e-12 * Y.resolution)
            out.back()[1] = std::max(out.back()[1], hi);
        else
            out.push_back({lo, hi});
    }
    return out;
}

double distance_to(const std::vector<std::array<double, 2>>& iv, double x) {
    if (iv.empty()) return kInf;
    auto it = std::upper_bound(iv.begin(), iv.end(), x, [](double v, const std::array<double, 2>& a) { return v < a[0]; });
    double d = kInf;
    if (it != iv.end()) d = std::min(d, (*it)[0] - x);
    if (it != iv.begin()) {
        const auto& p = *(it - 1);
        d = std::min(d, x <= p[1] ? 0.0 : x - p[1]);
    }
    return d;
}

double set_radius(const GridSet& Y) {
    double r = 0.0;
    for (int a = 0; a < Y.dimension; ++a) r = std::max({r, std::abs(Y.extent[a][0]), std::abs(Y.extent[a][1])});
    return r;
}

double mass_outside(const DampingFunction& psi, double slack) {
    const double lo = psi.support_lo - slack, hi = psi.support_hi + slack;
    double total = 0.0, outside = 0.0;
    const int n = psi.n;
    auto inside = [&](int k) {
        const double x = psi.physical_abscissa(k);
        return x >= lo && x <= hi;
    };
    if (psi.dimension == 1) {
        for (int k = 0; k < n; ++k) {
            const double m = std::norm(psi.physical[k]);
            total += m;
            if (!inside(k)) outside += m;
        }
    } else {
        for (int k0 = 0; k0 < n; ++k0)
            for (int k1 = 0; k1 < n; ++k1) {
                const double m = std::norm(psi.physical[static_cast<std::size_t>(k0) * n + k1]);
                total += m;
                if (!inside(k0) || !inside(k1)) outside += m;
            }
    }
    return total > 0.0 ? outside / total : 0.0;
}

}  // namespace

// ---------------------------------------------------------------- Hilbert transform

ModifiedHilbert::ModifiedHilbert(const SymmetricGrid& grid) : grid_(grid) {
    if (!(grid.spacing > 0.0) || grid.half < 2) throw ConfigError("hilbert: grid needs positive spacing and >= 5 points");
    const std::size_t n = grid.size();
    std::vector<double> kernel(2 * n - 1, 0.0);
    for (std::size_t i = 0; i < kernel.size(); ++i) {
        const std::int64_t m = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(n - 1);
        if (m % 2 != 0) kernel[i] = 2.0 / (kPi * static_cast<double>(m));
    }
    conv_ = std::make_unique<RealConvolver>(kernel, n);
}

ModifiedHilbert::~ModifiedHilbert() = default;

std::vector<double> ModifiedHilbert::apply(const std::vector<double>& f, TailModel model) {
    const std::size_t n = grid_.size();
    if (f.size() != n) throw ConfigError("hilbert: sample count does not match the grid");
    for (double v : f)
        if (!std::isfinite(v)) throw ConfigError("hilbert: non-finite sample");
    const double h = grid_.spacing;

    std::vector<double> out = conv_->apply(f, n - 1, n);
    double kernel_constant = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double t = grid_.at(j);
        kernel_constant += f[j] * t / (t * t + 1.0);
    }
    kernel_constant *= h / kPi;
    for (double& v : out) v += kernel_constant;

    // outer tenth of each side, subsampled to at most 4096 points for the fit
    const std::size_t outer = std::max<std::size_t>(n / 10, 2);
    const std::size_t stride = std::max<std::size_t>(outer / 4096, 1);
    for (int side = 0; side < 2; ++side) {
        std::vector<double> ts, fs;
        for (std::size_t k = 0; k < outer; k += stride) {
            const std::size_t j = side == 0 ? k : n - 1 - k;
            ts.push_back(std::abs(grid_.at(j)));
            fs.push_back(f[j]);
        }
        tails_[side] = fit_tail(ts, fs, model);
    }

    // tail integral over |t| > Xb with t = +-Xb w^{-q}, q = 1/(1 - beta): smooth in w on (0, 1]
    using boost::math::quadrature::gauss;
    const auto& ga = gauss<double, 32>::abscissa();
    const auto& gw = gauss<double, 32>::weights();
    const double Xb = grid_.extent() + 0.5 * h;
    std::vector<double> node_t, node_c;
    for (int side = 0; side < 2; ++side) {
        const TailFit& tf = tails_[side];
        if (tf.amplitude == 0.0) continue;
        const double sign = side == 0 ? -1.0 : 1.0;
        const double q = 1.0 / (1.0 - tf.exponent);
        for (std::size_t k = 0; k < ga.size(); ++k) {
            for (double s : {-1.0, 1.0}) {
                if (ga[k] == 0.0 && s > 0.0) continue;
                const double w = 0.5 * (1.0 + s * ga[k]);
                const double t = sign * Xb * std::pow(w, -q);
                const double jac = q * Xb * std::pow(w, -q - 1.0);
                node_t.push_back(t);
                node_c.push_back(0.5 * gw[k] * jac * tf.amplitude * std::pow(std::abs(t), tf.exponent) /
                                 (kPi * (t * t + 1.0)));
            }
        }
    }
    if (!node_t.empty()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid_.at(i);
            double acc = 0.0;
            for (std::size_t k = 0; k < node_t.size(); ++k) acc += node_c[k] * (1.0 + x * node_t[k]) / (x - node_t[k]);
            out[i] += acc;
        }
    }
    return out;
}

std::vector<double> hilbert_modified(const std::vector<double>& f, double spacing, TailModel model) {
    if (f.size() % 2 == 0) throw ConfigError("hilbert: symmetric grid needs an odd sample count");
    SymmetricGrid g{spacing, static_cast<std::int64_t>(f.size() / 2)};
    ModifiedHilbert H(g);
    return H.apply(f, model);
}

// ---------------------------------------------------------------- weights

void Weight::validate() const {
    if (log_inverse.size() != grid.size()) throw ConfigError("weight: sample count does not match the grid");
    for (double v : log_inverse)
        if (!std::isfinite(v) || v < 0.0) throw ConfigError("weight: need 0 < omega <= 1 on the grid");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("weight: alpha must lie in (0,1)");
}

double Weight::omega_at_zero() const { return std::exp(-log_inverse[static_cast<std::size_t>(grid.half)]); }

double default_spacing(double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    const double cap = std::min(std::ldexp(1.0, -10), sigma / 64.0);
    return std::ldexp(1.0, static_cast<int>(std::floor(std::log2(cap))));
}

double default_extent(double sigma, double radius) {
    const double T = 20.0 / (kPi * sigma);
    const double need = std::max({4.0 * T, 4.0 * radius, 64.0});
    return 64.0 * std::ceil(need / 64.0);
}

Weight subexponential_weight(double c, const SymmetricGrid& grid) {
    if (!(c > 0.0)) throw ConfigError("weight: c must be positive");
    Weight w;
    w.grid = grid;
    w.log_inverse.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) w.log_inverse[i] = c * std::sqrt(japanese(grid.at(i)));
    return w;
}

Weight regular_set_weight(const GridSet& Y, double alpha, double power, const SymmetricGrid& grid) {
    if (!(power > 0.0)) throw ConfigError("weight: power must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("weight: alpha must lie in (0,1)");
    const auto iv = intervals_of(Y);
    Weight w;
    w.grid = grid;
    w.alpha = alpha;
    w.adapted_to = Y;
    w.log_inverse.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.at(i), ax = std::abs(x);
        const double base = std::sqrt(japanese(x));
        double value = base;
        const double on = smooth_step(ax - 9.0);
        if (on > 0.0) {
            const double d = distance_to(iv, x);
            const double chi = on * (1.0 - smooth_step(d));
            if (chi > 0.0) value += chi * (constants::theta_weight(ax, alpha) * ax - base);
        }
        w.log_inverse[i] = power * value;
    }
    return w;
}

// ---------------------------------------------------------------- damping functions

cplx DampingFunction::spectral_at(double xi) const {
    if (dimension != 1) throw ConfigError("spectral_at: 1D evaluation of a 2D function");
    const double u = xi / spectral_spacing + n / 2;
    const double fl = std::floor(u);
    const std::int64_t i = static_cast<std::int64_t>(fl);
    if (i < 0 || i >= n) return {0.0, 0.0};
    if (i == n - 1) return u == fl ? spectral[i] : cplx{0.0, 0.0};
    const double t = u - fl;
    return (1.0 - t) * spectral[i] + t * spectral[i + 1];
}

cplx DampingFunction::spectral_at(double xi1, double xi2) const {
    if (dimension != 2) throw ConfigError("spectral_at: 2D evaluation of a 1D function");
    if (factors.empty()) {
        const double u = xi1 / spectral_spacing + n / 2, v = xi2 / spectral_spacing + n / 2;
        const std::int64_t i = static_cast<std::int64_t>(std::floor(u)), j = static_cast<std::int64_t>(std::floor(v));
        if (i < 0 || j < 0 || i >= n - 1 || j >= n - 1) return {0.0, 0.0};
        const double s = u - i, t = v - j;
        auto at = [&](std::int64_t a, std::int64_t b) { return spectral[static_cast<std::size_t>(a) * n + b]; };
        return (1 - s) * (1 - t) * at(i, j) + s * (1 - t) * at(i + 1, j) + (1 - s) * t * at(i, j + 1) +
               s * t * at(i + 1, j + 1);
    }
    cplx acc = prefactor;
    for (std::size_t j = 0; j < factors.size(); ++j) {
        const auto& E = frames[j];  // E[i] is the unit vector e_{j,i}
        const double det = E[0][0] * E[1][1] - E[1][0] * E[0][1];
        const double eta1 = (xi1 * E[1][1] - xi2 * E[1][0]) / det;
        const double eta2 = (E[0][0] * xi2 - E[0][1] * xi1) / det;
        acc *= factors[j][0]->spectral_at(eta1) * factors[j][1]->spectral_at(eta2);
        if (acc == cplx(0.0, 0.0)) break;
    }
    return acc;
}

void DampingFunction::synthesize() {
    if (n <= 0 || n % 2 != 0) throw ConfigError("damping: grid length must be positive and even");
    CenteredFft fft(dimension == 1 ? std::vector<int>{n} : std::vector<int>{n, n});
    physical = spectral;
    fft.inverse(physical);
    const double scale = dimension == 1 ? std::sqrt(static_cast<double>(n)) * spectral_spacing
                                        : static_cast<double>(n) * spectral_spacing * spectral_spacing;
    for (auto& v : physical) v *= scale;
}

DampingFunction from_spectral(const std::function<cplx(double)>& profile, int n, double spectral_spacing,
                              double support_lo, double support_hi) {
    DampingFunction psi;
    psi.n = n;
    psi.spectral_spacing = spectral_spacing;
    psi.support_lo = support_lo;
    psi.support_hi = support_hi;
    psi.spectral.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) psi.spectral[i] = profile(psi.spectral_abscissa(i));
    psi.synthesize();
    return psi;
}

DampingFunction build_multiplier(const Weight& omega, double sigma, const MultiplierOptions& opt) {
    omega.validate();
    if (!(sigma > 0.0 && sigma < 0.1)) throw ConfigError("build_multiplier: sigma must lie in (0, 1/10)");
    const SymmetricGrid& g = omega.grid;
    const double h = g.spacing;
    if (h > default_spacing(sigma) * (1.0 + 1e-12))
        throw ConfigError("build_multiplier: grid spacing above min(2^-10, sigma/64)");
    const std::size_t N = g.size();
    const auto half = static_cast<std::size_t>(g.half);
    const double T = 20.0 / (kPi * sigma);
    const double eps = opt.ramp_width;
    if (!(eps > 0.0) || !(opt.ramp_window > 10.0 * eps)) throw ConfigError("build_multiplier: bad ramp settings");

    MultiplierInfo info;
    info.sigma = sigma;
    info.T = T;
    info.hypothesis_bound = 0.5 * kPi * sigma;

    ModifiedHilbert H(g);
    const std::vector<double>& Omega = omega.log_inverse;
    std::vector<double> s0 = H.apply(Omega, TailModel::PowerLaw);

    const double inner = 0.9 * g.extent();
    for (std::size_t i = 1; i + 1 < N; ++i) {
        if (std::abs(g.at(i)) > inner) continue;
        info.hypothesis_value = std::max(info.hypothesis_value, std::abs(s0[i + 1] - s0[i - 1]) / (2.0 * h));
    }
    if (info.hypothesis_value > info.hypothesis_bound)
        throw ConfigError("build_multiplier: |H(Omega)'| reaches " + std::to_string(info.hypothesis_value) +
                          " above (pi/2) sigma = " + std::to_string(info.hypothesis_bound));

    for (std::size_t i = 0; i < N; ++i) {
        const double x = g.at(i);
        s0[i] += kPi * sigma * x - 10.0 * std::atan(x / T);
    }
    info.s0_at_zero = s0[half];
    const double frac = s0[half] / kPi - std::floor(s0[half] / kPi);
    info.half_shift = !(frac >= 0.25 && frac <= 0.75);
    const double shift = info.half_shift ? 0.5 : 0.0;

    // staircase from the running maximum so round-off cannot make it step back
    std::vector<std::int64_t> k(N);
    double running = -kInf;
    std::vector<double> run_max(N);
    for (std::size_t i = 0; i < N; ++i) {
        if (i > 0 && std::abs(g.at(i)) <= inner) info.s0_max_drop = std::max(info.s0_max_drop, s0[i - 1] - s0[i]);
        running = std::max(running, s0[i]);
        run_max[i] = running;
        k[i] = floor_to_int(running / kPi - shift);
    }
    for (std::size_t i = 0; i + 1 < N; ++i) {
        if (k[i + 1] < k[i]) info.k_nondecreasing = false;
        for (std::int64_t level = k[i] + 1; level <= k[i + 1]; ++level) {
            const double v = (static_cast<double>(level) + shift) * kPi;
            const double d = run_max[i + 1] - run_max[i];
            info.jumps.push_back(g.at(i) + h * (d > 0.0 ? (v - run_max[i]) / d : 0.5));
        }
    }
    info.k_central_min = std::numeric_limits<std::int64_t>::max();
    info.k_central_max = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < N; ++i)
        if (std::abs(g.at(i)) <= 1.25) {
            info.k_central_min = std::min(info.k_central_min, k[i]);
            info.k_central_max = std::max(info.k_central_max, k[i]);
        }

    // s = s0 - pi k - pi/2; jumps are removed with known-transform residuals before the FFT step
    std::vector<double> smooth(N), correction(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) smooth[i] = s0[i] - kPi * static_cast<double>(k[i]) - 0.5 * kPi;
    const auto window = static_cast<std::int64_t>(std::ceil(opt.ramp_window / h));
    double constant = 0.0;
    for (double a : info.jumps) {
        const std::int64_t centre = static_cast<std::int64_t>(std::llround(a / h)) + g.half;
        const std::int64_t lo = std::max<std::int64_t>(0, centre - window);
        const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(N) - 1, centre + window);
        for (std::int64_t i = lo; i <= hi; ++i) {
            const double y = g.at(static_cast<std::size_t>(i)) - a;
            smooth[i] += kPi * jump_residual(y, eps);
            correction[i] += kPi * jump_residual_hilbert(y, eps);
        }
        constant += jump_residual_constant(a, eps);
    }
    std::vector<double> M = H.apply(smooth, TailModel::Mean);
    smooth.clear();
    smooth.shrink_to_fit();
    for (std::size_t i = 0; i < N; ++i) M[i] -= correction[i] + constant;
    correction.clear();
    correction.shrink_to_fit();

    info.M_central_min = kInf;
    info.M_central_max = -kInf;
    info.M_lower_margin = kInf;
    for (std::size_t i = 0; i < N; ++i) {
        const double x = g.at(i);
        if (std::abs(x) <= 0.75) {
            info.M_central_min = std::min(info.M_central_min, M[i]);
            info.M_central_max = std::max(info.M_central_max, M[i]);
        }
        if (std::abs(x) <= inner) info.M_lower_margin = std::min(info.M_lower_margin, M[i] + 1.0 + 6.0 * std::log(std::abs(x) + 2.0));
    }

    DampingFunction psi;
    psi.dimension = 1;
    psi.alpha = omega.alpha;
    psi.n = static_cast<int>(N - 1);
    psi.spectral_spacing = h;
    psi.support_lo = 0.0;
    psi.support_hi = sigma;
    psi.spectral.resize(N - 1);
    const double floor_const = std::pow(sigma, 10) / 4e11;
    info.lower_bound_ratio = kInf;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double x = g.at(i);
        const double log_mod = -Omega[i] - 5.0 * std::log(x * x + T * T) - M[i];
        const double mod = std::exp(log_mod) / 3.0;
        const double sign = (k[i] % 2 == 0) ? 1.0 : -1.0;
        psi.spectral[i] = sign * mod * std::polar(1.0, -kPi * sigma * x);
        if (std::abs(x) <= 0.75)
            info.lower_bound_ratio = std::min(info.lower_bound_ratio, mod / (floor_const * std::exp(-Omega[i])));
    }
    psi.synthesize();
    info.leakage = mass_outside(psi, 0.0);
    psi.multiplier = info;
    if (!(info.leakage <= opt.leakage_tolerance))
        throw ContractViolation("build_multiplier: support leakage " + std::to_string(info.leakage) +
                                " above tolerance");
    return psi;
}

double box_dimension(const GridSet& Y) {
    if (Y.dimension != 1 || Y.empty()) throw ConfigError("box_dimension: nonempty 1D set required");
    const double span = (Y.extent[0][1] - Y.extent[0][0]) / Y.resolution;
    if (!(span > 1.0)) throw ConfigError("box_dimension: set spans a single cell");
    return std::log(static_cast<double>(Y.size())) / std::log(span);
}

double regularity_constant(const GridSet& Y, double delta) {
    const regular_sets::CubeMeasure mu(Y.size(), std::pow(Y.resolution, delta));
    const double radius = set_radius(Y);
    const double lo = std::max(2.0, Y.resolution);
    const auto rep = regular_sets::check_regularity(Y, mu, delta, std::min(lo, radius), std::max(lo, radius));
    if (!rep.pass) throw ConfigError("set is not regular on scales 2..N (C_R " + std::to_string(rep.constant()) + ")");
    return rep.constant();
}

namespace {

// Largest constant keeping |psihat| under min(<xi>^{-1}, exp(-c3 <xi>^{1/2})) and the Y decay bound.
double admissible_scale(const DampingFunction& psi, const std::vector<std::array<double, 2>>& iv) {
    double ratio = kInf;
    for (int i = 0; i < psi.n; ++i) {
        const double a = std::abs(psi.spectral[i]);
        if (a == 0.0) continue;
        const double xi = psi.spectral_abscissa(i), ax = std::abs(xi);
        double bound = std::min(1.0 / japanese(xi), std::exp(-psi.c3 * std::sqrt(japanese(xi))));
        if (distance_to(iv, xi) == 0.0) bound = std::min(bound, std::exp(-psi.c3 * constants::theta_weight(ax, psi.alpha) * ax));
        ratio = std::min(ratio, bound / a);
    }
    return std::isfinite(ratio) ? ratio * (1.0 - 1e-6) : 1.0;
}

}  // namespace

DampingFunction build_regular_damping(const GridSet& Y, double c1, const RegularDampingOptions& opt) {
    if (Y.dimension != 1 || Y.empty()) throw ConfigError("build_regular_damping: nonempty 1D set required");
    if (!(c1 > 0.0 && c1 < 1.0)) throw ConfigError("build_regular_damping: c1 must lie in (0,1)");
    const double delta1 = opt.delta1 ? *opt.delta1 : box_dimension(Y);
    if (!(delta1 > 0.0 && delta1 < 1.0)) throw ConfigError("build_regular_damping: delta1 must lie in (0,1)");
    const double C_R = opt.C_R ? *opt.C_R : regularity_constant(Y, delta1);
    const auto params = constants::damping_params(c1, C_R, delta1, 1, 1, opt.iota);
    const double c2 = std::exp(params.log_c2), c3 = std::exp(params.log_c3);
    const double alpha = 0.5 * (1.0 + delta1);

    double sigma = c1 / 5.0;
    bool clamped = false;
    if (sigma >= 0.1 - 1e-6) {
        sigma = 0.1 - 1e-6;
        clamped = true;
    }
    const double h = default_spacing(sigma);
    const double extent = default_extent(sigma, set_radius(Y));
    const SymmetricGrid grid{h, static_cast<std::int64_t>(std::llround(extent / h))};
    const Weight w = regular_set_weight(Y, alpha, c3, grid);

    DampingFunction psi;
    try {
        psi = build_multiplier(w, sigma, opt.multiplier);
    } catch (const ConfigError& e) {
        throw ContractViolation(std::string("build_regular_damping: weight hypothesis unverifiable: ") + e.what());
    }
    psi.multiplier.sigma_clamped = clamped;
    psi.c1 = c1;
    psi.c2 = c2;
    psi.c3 = c3;
    psi.alpha = alpha;
    psi.C_R = C_R;
    psi.delta1 = delta1;
    // recentre [0, sigma] onto [-sigma/2, sigma/2]
    for (int i = 0; i < psi.n; ++i) psi.spectral[i] *= std::polar(1.0, kPi * sigma * psi.spectral_abscissa(i));
    psi.support_lo = -c1 / 10.0;
    psi.support_hi = c1 / 10.0;
    const double scale = admissible_scale(psi, intervals_of(Y));
    for (auto& v : psi.spectral) v *= scale;
    psi.multiplier.normalization = scale;
    psi.synthesize();
    return psi;
}

// ---------------------------------------------------------------- products

namespace {

std::vector<double> cube_samples_1d(const GridSet& Y) {
    std::vector<double> pts;
    for (const auto& c : Y.cubes) {
        const double lo = Y.origin[0] + c[0] * Y.resolution;
        for (double t : {0.0, 0.5, 1.0}) pts.push_back(lo + t * Y.resolution);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace

std::vector<std::array<double, 2>> admissible_points(const AdmissibleSpec& Y) {
    std::vector<std::array<double, 2>> out;
    for (const auto& cov : Y.covers) {
        const auto p1 = cube_samples_1d(cov.sets[0]), p2 = cube_samples_1d(cov.sets[1]);
        for (double a : p1)
            for (double b : p2)
                out.push_back({a * cov.axes[0][0] + b * cov.axes[1][0], a * cov.axes[0][1] + b * cov.axes[1][1]});
    }
    return out;
}

DampingFunction product_damping(const AdmissibleSpec& Y, double c1, const ProductOptions& opt) {
    const int m = static_cast<int>(Y.covers.size());
    if (m < 1) throw ConfigError("product_damping: at least one cover required");
    if (!(c1 > 0.0 && c1 < 1.0)) throw ConfigError("product_damping: c1 must lie in (0,1)");
    if (!(Y.delta1 > 0.0 && Y.delta1 < 1.0)) throw ConfigError("product_damping: delta1 must lie in (0,1)");
    if (!(Y.eps0 > 0.0 && Y.eps0 < 1.0)) throw ConfigError("product_damping: eps0 must lie in (0,1)");

    double inv_norm = 0.0, frame_norm = 0.0;
    for (const auto& cov : Y.covers) {
        for (const auto& e : cov.axes)
            if (std::abs(std::hypot(e[0], e[1]) - 1.0) > 1e-9) throw ConfigError("product_damping: axes must be unit vectors");
        const auto& e1 = cov.axes[0];
        const auto& e2 = cov.axes[1];
        if (!(std::abs(e1[0] * e2[0] + e1[1] * e2[1]) < 1.0 - Y.eps0))
            throw ConfigError("product_damping: degenerate frame (|e1.e2| >= 1 - eps0)");
        for (const auto& s : cov.sets)
            if (s.dimension != 1 || s.empty()) throw ConfigError("product_damping: each axis set must be nonempty 1D");
        // rows of E^{-T} for E = [e1 e2] as columns
        const double det = e1[0] * e2[1] - e2[0] * e1[1];
        const double r0 = (std::abs(e2[1]) + std::abs(e2[0])) / std::abs(det);
        const double r1 = (std::abs(e1[1]) + std::abs(e1[0])) / std::abs(det);
        inv_norm = std::max({inv_norm, r0, r1});
        frame_norm = std::max(frame_norm, std::sqrt(1.0 + std::abs(e1[0] * e2[0] + e1[1] * e2[1])));
    }
    const double eps1 = std::min(1.0, 10.0 / inv_norm);
    const double c1_factor = eps1 * c1 / m;

    RegularDampingOptions fopt;
    fopt.iota = opt.iota;
    fopt.delta1 = Y.delta1;
    fopt.C_R = opt.C_R;
    fopt.multiplier = opt.multiplier;

    DampingFunction psi;
    psi.dimension = 2;
    std::vector<std::pair<const GridSet*, std::shared_ptr<const DampingFunction>>> cache;
    double C_R = 0.0;
    for (const auto& cov : Y.covers) {
        std::array<std::shared_ptr<const DampingFunction>, 2> pair;
        for (int i = 0; i < 2; ++i) {
            for (const auto& [set, f] : cache)
                if (*set == cov.sets[i]) pair[i] = f;
            if (!pair[i]) {
                pair[i] = std::make_shared<const DampingFunction>(build_regular_damping(cov.sets[i], c1_factor, fopt));
                cache.emplace_back(&cov.sets[i], pair[i]);
            }
            C_R = std::max(C_R, pair[i]->C_R);
        }
        psi.frames.push_back(cov.axes);
        psi.factors.push_back(pair);
    }

    const double d1 = Y.delta1 * (1.0 - Y.delta1);
    const double mm = static_cast<double>(m);
    psi.c1 = c1;
    psi.C_R = C_R;
    psi.delta1 = Y.delta1;
    psi.alpha = 0.5 * (1.0 + Y.delta1);
    psi.c3 = opt.iota * c1 / mm / (C_R * C_R) * d1;
    psi.c2 = std::exp((2 * mm + 4) * std::log(opt.iota) + (20 * mm + 4) * std::log(c1) - 20 * mm * std::log(mm) -
                      8 * std::log(C_R) + 4 * std::log(d1));
    psi.prefactor = 0.2 * std::pow(mm * psi.c3, 4);
    psi.support_lo = -c1;
    psi.support_hi = c1;

    // 2D grid: x-period 4 c1 and spectral reach beyond 4 T of every factor along the frame
    const double sigma_f = std::min(c1_factor / 5.0, 0.1 - 1e-6);
    const double reach = 4.0 * 20.0 / (kPi * sigma_f) * frame_norm;
    psi.spectral_spacing = opt.spectral_spacing > 0.0 ? opt.spectral_spacing : 1.0 / (4.0 * c1);
    psi.n = 2 * static_cast<int>(std::ceil(reach / psi.spectral_spacing));
    const auto n = static_cast<std::size_t>(psi.n);
    psi.spectral.assign(n * n, cplx(0.0, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            psi.spectral[i * n + j] = psi.spectral_at(psi.spectral_abscissa(static_cast<int>(i)),
                                                      psi.spectral_abscissa(static_cast<int>(j)));
    psi.synthesize();
    return psi;
}

// ---------------------------------------------------------------- verification

BulletParams bullet_params(const DampingFunction& psi) {
    BulletParams p;
    p.c1 = psi.c1;
    p.c2 = psi.c2;
    p.c3 = psi.c3;
    p.alpha = psi.alpha;
    return p;
}

namespace {

struct GridSweep {
    double global = kInf, subexp = kInf;
};

DampingReport verify_common(const DampingFunction& psi, const BulletParams& params,
                            const std::vector<std::array<double, 2>>& y_points, bool use_points,
                            const std::vector<std::array<double, 2>>& y_intervals) {
    if (psi.n <= 0 || psi.spectral.empty()) throw ConfigError("verify_damping: empty damping function");
    if (!(params.alpha > 0.0 && params.alpha < 1.0)) throw ConfigError("verify_damping: alpha must lie in (0,1)");
    const int d = psi.dimension;
    const std::size_t total = psi.spectral.size();
    const int threads = std::max(1, params.threads);
    const std::size_t chunks = static_cast<std::size_t>(threads) * 4;
    std::vector<GridSweep> sweep(chunks);
    std::vector<double> ymin(chunks, kInf);
    std::vector<std::size_t> ycount(chunks, 0);
    const std::size_t n = static_cast<std::size_t>(psi.n);

    auto y_bound = [&](double l1) { return std::exp(-params.c3 * constants::theta_weight(l1, params.alpha) * l1); };

    parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t lo = total * c / chunks, hi = total * (c + 1) / chunks;
        for (std::size_t idx = lo; idx < hi; ++idx) {
            double r2, l1;
            if (d == 1) {
                const double xi = psi.spectral_abscissa(static_cast<int>(idx));
                r2 = xi * xi;
                l1 = std::abs(xi);
            } else {
                const double a = psi.spectral_abscissa(static_cast<int>(idx / n));
                const double b = psi.spectral_abscissa(static_cast<int>(idx % n));
                r2 = a * a + b * b;
                l1 = std::abs(a) + std::abs(b);
            }
            const double mod = std::abs(psi.spectral[idx]);
            const double jp = std::sqrt(1.0 + r2);
            sweep[c].global = std::min(sweep[c].global, std::pow(jp, -d) - mod);
            sweep[c].subexp = std::min(sweep[c].subexp, std::exp(-params.c3 * std::sqrt(jp)) - mod);
            if (!use_points && d == 1 && distance_to(y_intervals, psi.spectral_abscissa(static_cast<int>(idx))) == 0.0) {
                ymin[c] = std::min(ymin[c], y_bound(l1) - mod);
                ++ycount[c];
            }
        }
        if (use_points) {
            const std::size_t plo = y_points.size() * c / chunks, phi = y_points.size() * (c + 1) / chunks;
            for (std::size_t k = plo; k < phi; ++k) {
                const auto& p = y_points[k];
                const double mod = d == 1 ? std::abs(psi.spectral_at(p[0])) : std::abs(psi.spectral_at(p[0], p[1]));
                const double l1 = d == 1 ? std::abs(p[0]) : std::abs(p[0]) + std::abs(p[1]);
                ymin[c] = std::min(ymin[c], y_bound(l1) - mod);
                ++ycount[c];
            }
        }
    });

    DampingReport rep;
    rep.global_decay_margin = kInf;
    rep.subexponential_margin = kInf;
    rep.Y_decay_margin = kInf;
    for (std::size_t c = 0; c < chunks; ++c) {
        rep.global_decay_margin = std::min(rep.global_decay_margin, sweep[c].global);
        rep.subexponential_margin = std::min(rep.subexponential_margin, sweep[c].subexp);
        rep.Y_decay_margin = std::min(rep.Y_decay_margin, ymin[c]);
        rep.y_points += ycount[c];
    }
    if (rep.y_points == 0) rep.Y_decay_margin = 1.0;  // vacuous: the bound never exceeds 1

    rep.support_leakage = psi.physical.empty() ? 0.0 : mass_outside(psi, d == 1 ? 0.0 : psi.physical_spacing());

    if (d == 1) {
        double mn = kInf, l2 = 0.0;
        for (int i = 0; i < psi.n; ++i) {
            const double xi = psi.spectral_abscissa(i), a = std::abs(psi.spectral[i]);
            if (std::abs(xi) <= 0.75) mn = std::min(mn, a);
            if (std::abs(xi) <= 1.0) l2 += a * a * psi.spectral_spacing;
        }
        rep.lower_bound_measured = std::isfinite(mn) ? mn : 0.0;
        rep.l2_unit_cube = std::sqrt(l2);
    } else {
        // midpoint rule on a 200 x 200 partition of [-1,1]^2
        const int m = 200;
        const double step = 2.0 / m;
        double l2 = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                l2 += std::norm(psi.spectral_at(-1.0 + (i + 0.5) * step, -1.0 + (j + 0.5) * step)) * step * step;
        rep.l2_unit_cube = std::sqrt(l2);
        rep.lower_bound_measured = rep.l2_unit_cube;
    }

    rep.bullets[0] = rep.support_leakage <= params.leakage_tolerance;
    rep.bullets[1] = rep.l2_unit_cube >= params.c2 && (d != 1 || rep.lower_bound_measured >= params.c2);
    rep.bullets[2] = rep.global_decay_margin >= 0.0;
    rep.bullets[3] = rep.Y_decay_margin >= 0.0;
    rep.pass = rep.bullets[0] && rep.bullets[1] && rep.bullets[2] && rep.bullets[3];
    return rep;
}

}  // namespace

DampingReport verify_damping(const DampingFunction& psi, const GridSet& Y, const BulletParams& params) {
    if (Y.dimension != psi.dimension) throw ConfigError("verify_damping: set and function dimensions differ");
    if (psi.dimension == 1) return verify_common(psi, params, {}, false, intervals_of(Y));
    std::vector<std::array<double, 2>> pts;
    for (const auto& c : Y.cubes)
        for (double s : {0.0, 0.5, 1.0})
            for (double t : {0.0, 0.5, 1.0})
                pts.push_back({Y.origin[0] + (c[0] + s) * Y.resolution, Y.origin[1] + (c[1] + t) * Y.resolution});
    return verify_common(psi, params, pts, true, {});
}

DampingReport verify_damping(const DampingFunction& psi, const std::vector<std::array<double, 2>>& y_points,
                             const BulletParams& params) {
    return verify_common(psi, params, y_points, true, {});
}

nlohmann::json to_json(const MultiplierInfo& m) {
    return {{"sigma", m.sigma},
            {"T", m.T},
            {"sigma_clamped", m.sigma_clamped},
            {"hypothesis_value", m.hypothesis_value},
            {"hypothesis_bound", m.hypothesis_bound},
            {"s0_at_zero", m.s0_at_zero},
            {"half_shift", m.half_shift},
            {"jump_count", m.jumps.size()},
            {"k_central", {m.k_central_min, m.k_central_max}},
            {"k_nondecreasing", m.k_nondecreasing},
            {"s0_max_drop", m.s0_max_drop},
            {"M_central", {m.M_central_min, m.M_central_max}},
            {"M_lower_margin", m.M_lower_margin},
            {"lower_bound_ratio", m.lower_bound_ratio},
            {"leakage", m.leakage},
            {"normalization", m.normalization}};
}

nlohmann::json to_json(const DampingReport& r) {
    return {{"support_leakage", r.support_leakage},
            {"lower_bound_measured", r.lower_bound_measured},
            {"l2_unit_cube", r.l2_unit_cube},
            {"global_decay_margin", r.global_decay_margin},
            {"subexponential_margin", r.subexponential_margin},
            {"Y_decay_margin", r.Y_decay_margin},
            {"y_points", r.y_points},
            {"bullets", {{"support", r.bullets[0]}, {"lower_bound", r.bullets[1]}, {"global_decay", r.bullets[2]},
                         {"decay_on_Y", r.bullets[3]}}},
            {"pass", r.pass}};
}

}  // namespace fuplab::damping
