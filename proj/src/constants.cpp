#include "fuplab/constants.hpp"

#include <boost/math/special_functions/log1p.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "fuplab/errors.hpp"

namespace fuplab::constants {

namespace {

using Quad = boost::multiprecision::cpp_bin_float_quad;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Above this a log-magnitude no longer exponentiates safely in double.
constexpr double kExpSafe = 600.0;

std::string render(int sign, double log_abs, bool has_loglog, double loglog_abs, bool reciprocal) {
    char buf[96];
    if (std::isfinite(log_abs) && std::fabs(log_abs) < 700.0) {
        std::snprintf(buf, sizeof buf, "%.12g", sign * std::exp(log_abs));
    } else if (std::isfinite(log_abs)) {
        std::snprintf(buf, sizeof buf, "%s1e%.6f", sign < 0 ? "-" : "", log_abs / std::numbers::ln10);
    } else if (has_loglog) {
        std::snprintf(buf, sizeof buf, "%sexp(%sexp(%.9g))", sign < 0 ? "-" : "",
                      reciprocal ? "-" : "", loglog_abs);
    } else {
        std::snprintf(buf, sizeof buf, "%s", log_abs > 0 ? "inf" : "0");
    }
    return buf;
}

Quantity make_q(const std::string& name, int sign, double log_abs, const std::string& note = {}) {
    Quantity q;
    q.name = name;
    q.sign = sign;
    q.log_abs = log_abs;
    q.note = note;
    q.decimal = render(sign, log_abs, false, 0.0, false);
    return q;
}

// Quantity known through log(log(x)) (or log(log(1/x)) when reciprocal).
Quantity make_qq(const std::string& name, double loglog, bool reciprocal, const std::string& note = {}) {
    Quantity q;
    q.name = name;
    q.has_loglog = true;
    q.loglog_abs = loglog;
    q.reciprocal = reciprocal;
    q.note = note;
    if (loglog < std::log(std::numeric_limits<double>::max())) {
        const double inner = std::exp(loglog);
        q.log_abs = reciprocal ? -inner : inner;
    } else {
        q.log_abs = reciprocal ? -kInf : kInf;
    }
    q.decimal = render(1, q.log_abs, true, loglog, reciprocal);
    return q;
}

template <class R>
R lg1p(const R& x) {
    return boost::math::log1p(x);
}

template <class R>
ConstantChain run_chain(const ChainInputs& in, Precision precision) {
    using std::ceil;
    using std::exp;
    using std::log;
    using std::sqrt;
    const R pi = boost::math::constants::pi<R>();

    ConstantChain out;
    out.inputs = in;
    out.precision = precision;

    const LChoice lc = choose_L(in.d, in.delta, in.C_R);
    out.L = lc.L;
    if (lc.clamped) out.clamps.push_back("L raised to 4");
    if (out.L < 3) throw ContractViolation("L below 3");

    const double alpha_d = in.alpha.value_or((1.0 + in.delta1) / 2.0);
    if (!(alpha_d > 0.0 && alpha_d < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    out.alpha = alpha_d;
    const R alpha = in.alpha ? R(*in.alpha) : (R(1) + R(in.delta1)) / 2;

    const R L = R(out.L);
    const R logL = log(L);
    const R c1 = in.c1 ? R(*in.c1) : R(1) / (2 * L);
    out.c1 = static_cast<double>(c1);
    if (!(c1 > 0 && c1 < 1)) throw ConfigError("c1 must lie in (0,1)");

    out.mollifier = in.mollifier.value_or(reference_mollifier(in.d));
    const R Cphi = R(out.mollifier.C_phi);
    const R cphi = R(out.mollifier.c_phi);

    // damping parameters
    const R lc1 = log(c1);
    const R lcr = log(R(in.C_R));
    const R d1 = R(in.delta1);
    const R ld1 = log(d1) + lg1p(R(-d1));
    const R liota = log(R(in.iota));
    const int d = in.d;
    const int m = in.m;
    R lc2, lc3;
    if (d == 1) {
        lc2 = liota + 10 * lc1;
        lc3 = liota + lc1 - 2 * lcr + ld1;
    } else {
        const R lm = log(R(m));
        lc2 = m * liota + R((10 * m + 2) * d) * lc1 - R(10 * m * d) * lm - R(4 * d) * lcr + R(2 * d) * ld1;
        lc3 = liota + lc1 - lm - 2 * lcr + ld1;
    }
    const R lc3star = log(2 * pi * R(in.q_star));
    out.damping.log_c3_unclamped = static_cast<double>(lc3);
    out.damping.log_c3_star = static_cast<double>(lc3star);
    if (lc3 >= lc3star) {
        lc3 = lc3star + lg1p(R(-1e-6));
        out.damping.c3_clamped = true;
        out.clamps.push_back("c3 clamped below 2*pi*q_star");
    }
    out.damping.log_c2 = static_cast<double>(lc2);
    out.damping.log_c3 = static_cast<double>(lc3);

    // R1 candidates
    const R neg_inf = -std::numeric_limits<R>::infinity();
    const R Cd = R(in.C_d);
    std::array<R, 6> cs;
    cs[0] = exp((log(16 * pi * Cd) - lc3) / (1 - alpha));
    cs[1] = exp(log(R(4)) / (1 - alpha));
    {
        const R a = -R(d) * lc1;
        cs[2] = a > 0 ? 8 * (R(d) * log(a) - lc3) : neg_inf;
    }
    {
        const R inner = log(2 * Cd) - 2 * lc2;
        cs[3] = inner > 0 ? 2 * (log(R(4)) + log(inner)) : neg_inf;
    }
    cs[4] = 4 * log(R(8 * d));
    cs[5] = 2 * (log(R(2 * d)) - lc3);
    int dom = 0;
    for (int i = 1; i < 6; ++i)
        if (cs[i] > cs[dom]) dom = i;
    const R logR1 = cs[dom];
    for (int i = 0; i < 6; ++i) out.r1.log_case[i] = static_cast<double>(cs[i]);
    out.r1.dominant = dom;
    out.r1.log_R1 = static_cast<double>(logR1);

    // C* = exp(c3 Theta(R1) (R1+2)/2)
    const R log_R1p2 = logR1 + lg1p(R(2) * exp(-logR1));
    const R log_theta = -alpha * log(log_R1p2);
    const R llCstar = lc3 - log(R(2)) + log_theta + log_R1p2;
    out.loglog_Cstar = static_cast<double>(llCstar);

    R logT0, llinv_gamma0, llinv_beta, log_beta;
    R T0 = R(0);
    const bool tower = llCstar > kExpSafe;
    if (!tower) {
        const R logCstar = exp(llCstar);
        const R u = log(2 * Cphi) + 2 * logCstar;
        const R log_expr = u + log(1 + sqrt(1 + cphi * cphi * exp(-2 * u)));
        T0 = ceil(log_expr / logL);
        if (T0 < 1) T0 = 1;
        logT0 = log(T0);
        const R hole = cphi * cphi * exp(-2 * (T0 - 1) * logL);
        if (!(hole < 1)) throw ContractViolation("gamma0 numerator is not positive");
        const R loginv_gamma0 = log(R(2)) + 2 * logCstar - lg1p(R(-hole));
        if (!(loginv_gamma0 > 0)) throw ContractViolation("gamma0 not below 1");
        llinv_gamma0 = log(loginv_gamma0);
        if (loginv_gamma0 < kExpSafe) {
            const R g0 = exp(-loginv_gamma0);
            const R beta = -lg1p(R(-g0 / 2)) / (T0 * logL);
            log_beta = log(beta);
        } else {
            log_beta = -loginv_gamma0 - log(R(2)) - logT0 - log(logL);
        }
        llinv_beta = log(-log_beta);
    } else {
        // log C* itself overflows; carry log log and drop corrections below exp(-llCstar).
        const R shrink = exp(-llCstar);
        const R ll_expr = log(R(2)) + llCstar + lg1p(log(4 * Cphi) * shrink / 2);
        logT0 = ll_expr - log(logL);
        llinv_gamma0 = log(R(2)) + llCstar + lg1p(log(R(2)) * shrink / 2);
        llinv_beta = llinv_gamma0 + lg1p((log(R(2)) + logT0 + log(logL)) * exp(-llinv_gamma0));
        log_beta = -std::numeric_limits<R>::infinity();
    }
    if (!(llinv_beta > neg_inf)) throw ContractViolation("beta not below 1");
    out.log_T0 = static_cast<double>(logT0);
    out.loglog_inv_gamma0 = static_cast<double>(llinv_gamma0);
    out.loglog_inv_beta = static_cast<double>(llinv_beta);
    out.log_beta = static_cast<double>(log_beta);

    // Closed-form bound: beta >= exp(-exp[(C_R^2/(iota d1(1-d1)))^{(6-2delta)/((1-d1)(2-delta))}])
    if (!(in.delta < 2.0)) throw ConfigError("headline bound needs delta < 2");
    const R expo = (6 - 2 * R(in.delta)) / ((1 - d1) * (2 - R(in.delta)));
    const R log_X = expo * (2 * lcr - liota - ld1);
    out.loglog_inv_beta_headline = static_cast<double>(exp(log_X));
    out.chain_dominates_headline = (llinv_beta <= 0) || (log(llinv_beta) <= log_X);

    // audit trail
    auto dbl = [](const R& v) { return static_cast<double>(v); };
    auto& t = out.trail;
    t.push_back(make_q("L", 1, std::log(static_cast<double>(out.L)),
                       lc.clamped ? "clamped to 4" : "ceil of the porosity bound"));
    t.push_back(make_q("L_raw", 1, std::log(lc.raw)));
    t.push_back(make_q("c1", 1, dbl(lc1)));
    t.push_back(make_q("alpha", 1, std::log(alpha_d)));
    t.push_back(make_q("c2", 1, dbl(lc2)));
    t.push_back(make_q("c3", 1, dbl(lc3), out.damping.c3_clamped ? "clamped" : ""));
    t.push_back(make_q("c3_star", 1, dbl(lc3star)));
    static const char* names[6] = {"R0_case_i", "R0_case_ii", "R0_case_iii",
                                   "R0_case_iv", "R0_case_v", "R1_case_2d_over_c3"};
    for (int i = 0; i < 6; ++i) {
        const double lv = dbl(cs[i]);
        t.push_back(make_q(names[i], 1, lv, i == dom ? "dominant" : ""));
    }
    R logR0 = cs[0];
    for (int i = 1; i < 5; ++i) logR0 = std::max(logR0, cs[i]);
    t.push_back(make_q("R0", 1, dbl(logR0)));
    t.push_back(make_q("R1", 1, dbl(logR1)));
    t.push_back(make_q("Theta_R1", 1, dbl(log_theta)));
    t.push_back(make_qq("C_star", dbl(llCstar), false));
    t.push_back(make_q("T0", 1, dbl(logT0), tower ? "ceil below double resolution" : ""));
    t.push_back(make_qq("gamma0", dbl(llinv_gamma0), true));
    {
        Quantity qb = make_qq("beta", dbl(llinv_beta), true);
        if (std::isfinite(dbl(log_beta))) qb.log_abs = dbl(log_beta);
        qb.decimal = render(1, qb.log_abs, true, qb.loglog_abs, true);
        t.push_back(qb);
    }
    {
        // log C~ = beta log L
        const double log_Ctilde = std::isfinite(dbl(log_beta)) ? std::exp(dbl(log_beta)) * dbl(logL) : 0.0;
        t.push_back(make_q("C_tilde", 1, log_Ctilde, "(1 - gamma0/2)^{-1/T0}"));
    }
    t.push_back(make_qq("beta_headline", dbl(exp(log_X)), true));
    t.push_back(make_q("C_phi", 1, std::log(out.mollifier.C_phi)));
    t.push_back(make_q("c_phi", 1, std::log(out.mollifier.c_phi)));
    return out;
}

}  // namespace

double theta_weight(double xi_l1, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("theta_weight: alpha must lie in (0,1)");
    if (!(xi_l1 >= 0.0)) throw ConfigError("theta_weight: argument must be nonnegative");
    return std::pow(std::log(2.0 + xi_l1), -alpha);
}

LChoice choose_L(int d, double delta, double C_R) {
    if (d < 1) throw ConfigError("choose_L: dimension must be positive");
    if (!(delta > 0.0 && delta < d)) throw ConfigError("choose_L: need 0 < delta < d");
    if (!(C_R > 0.0)) throw ConfigError("choose_L: C_R must be positive");
    const double log_base = 0.5 * d * std::log(2.0) + 0.5 * std::log(2.0 * d + 1.0) + std::log(C_R);
    const double raw = std::exp(2.0 / (d - delta) * log_base);
    // absorb rounding noise so exact integers (e.g. (2 sqrt 5)^2) are not bumped up
    const double near = std::round(raw);
    const double v = std::fabs(raw - near) <= 1e-9 * std::max(1.0, raw) ? near : std::ceil(raw);
    if (v > 1e9) throw ConfigError("choose_L: L exceeds integer range");
    LChoice out;
    out.raw = raw;
    out.L = static_cast<int>(v);
    if (out.L < 4) {
        out.L = 4;
        out.clamped = true;
    }
    return out;
}

DampingParams damping_params(double c1, double C_R, double delta1, int m, int d, double iota,
                             double q_star) {
    if (!(c1 > 0.0 && c1 < 1.0)) throw ConfigError("damping_params: c1 in (0,1)");
    if (!(delta1 > 0.0 && delta1 < 1.0)) throw ConfigError("damping_params: delta1 in (0,1)");
    if (m < 1 || d < 1) throw ConfigError("damping_params: m, d >= 1");
    if (!(iota > 0.0) || !(C_R > 0.0) || !(q_star > 0.0))
        throw ConfigError("damping_params: iota, C_R, q_star must be positive");
    DampingParams p;
    const double lc1 = std::log(c1), lcr = std::log(C_R), ld1 = std::log(delta1) + std::log1p(-delta1);
    const double li = std::log(iota);
    if (d == 1) {
        p.log_c2 = li + 10.0 * lc1;
        p.log_c3 = li + lc1 - 2.0 * lcr + ld1;
    } else {
        const double lm = std::log(static_cast<double>(m));
        p.log_c2 = m * li + (10.0 * m + 2.0) * d * lc1 - 10.0 * m * d * lm - 4.0 * d * lcr + 2.0 * d * ld1;
        p.log_c3 = li + lc1 - lm - 2.0 * lcr + ld1;
    }
    p.log_c3_unclamped = p.log_c3;
    p.log_c3_star = std::log(2.0 * std::numbers::pi * q_star);
    if (p.log_c3 >= p.log_c3_star) {
        p.log_c3 = p.log_c3_star + std::log1p(-1e-6);
        p.c3_clamped = true;
    }
    return p;
}

R1Threshold r1_threshold(int d, double log_c1, double log_c2, double log_c3, double alpha, double C_d) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("r1_threshold: alpha in (0,1)");
    if (d < 1 || !(C_d > 0.0)) throw ConfigError("r1_threshold: bad d or C_d");
    R1Threshold r;
    const double pi = std::numbers::pi;
    r.log_case[0] = std::exp((std::log(16.0 * pi * C_d) - log_c3) / (1.0 - alpha));
    r.log_case[1] = std::exp(std::log(4.0) / (1.0 - alpha));
    const double a = -d * log_c1;
    r.log_case[2] = a > 0 ? 8.0 * (d * std::log(a) - log_c3) : -kInf;
    const double inner = std::log(2.0 * C_d) - 2.0 * log_c2;
    r.log_case[3] = inner > 0 ? 2.0 * (std::log(4.0) + std::log(inner)) : -kInf;
    r.log_case[4] = 4.0 * std::log(8.0 * d);
    r.log_case[5] = 2.0 * (std::log(2.0 * d) - log_c3);
    r.dominant = static_cast<int>(std::max_element(r.log_case.begin(), r.log_case.end()) - r.log_case.begin());
    r.log_R1 = r.log_case[r.dominant];
    return r;
}

MollifierConstants compute_mollifier_constants(int d) {
    if (d < 1 || d > 3) throw ConfigError("mollifier constants tabulated for d in 1..3");
    // phi_1(x) = (3/4) sinc^4(pi x / 2) has unit mass; tail(s) = 2 int_s^inf phi_1.
    auto phi = [](double x) {
        if (x == 0.0) return 0.75;
        const double u = 0.5 * std::numbers::pi * x;
        const double s = std::sin(u) / u;
        return 0.75 * s * s * s * s;
    };
    const double s_max = 40.0;  // R up to 400
    const double h = 1e-4;
    const int n = static_cast<int>(std::lround(s_max / h));
    std::vector<double> cum(n + 1, 0.0);  // int_0^{jh} phi by composite Simpson on half steps
    for (int j = 0; j < n; ++j) {
        const double a = j * h;
        cum[j + 1] = cum[j] + h / 6.0 * (phi(a) + 4.0 * phi(a + 0.5 * h) + phi(a + h));
    }
    double best = 0.0;
    for (int j = 0; j <= n; ++j) {
        const double s = j * h;
        const double R = 10.0 * s;
        if (R < 1.0) continue;
        const double tail1 = std::max(0.0, 1.0 - 2.0 * cum[j]);
        const double tail_d = 1.0 - std::pow(1.0 - tail1, d);
        best = std::max(best, R * tail_d);
    }
    return {best, best};
}

MollifierConstants reference_mollifier(int d) {
    // version 1: compute_mollifier_constants rounded up at the sixth decimal
    switch (d) {
        case 1: return {1.796645, 1.796645};
        case 2: return {2.849806, 2.849806};
        case 3: return {3.585735, 3.585735};
        default: throw ConfigError("reference mollifier tabulated for d in 1..3");
    }
}

ConstantChain beta_chain(const ChainInputs& in, Precision precision) {
    if (in.d < 1 || in.d > 3) throw ConfigError("beta_chain: d in 1..3");
    if (!(in.delta1 > 0.0 && in.delta1 < 1.0)) throw ConfigError("beta_chain: delta1 in (0,1)");
    if (!(in.C_R >= 1.0)) throw ConfigError("beta_chain: C_R >= 1");
    if (!(in.iota > 0.0 && in.iota < 1.0)) throw ConfigError("beta_chain: iota in (0,1)");
    if (in.m < 1) throw ConfigError("beta_chain: m >= 1");
    if (!(in.eps0 > 0.0 && in.eps0 < 1.0)) throw ConfigError("beta_chain: eps0 in (0,1)");
    if (!(in.C_d > 0.0) || !(in.q_star > 0.0)) throw ConfigError("beta_chain: C_d, q_star > 0");
    if (precision == Precision::Quad) return run_chain<Quad>(in, precision);
    return run_chain<double>(in, precision);
}

nlohmann::json to_json(const ChainInputs& in) {
    nlohmann::json j;
    j["d"] = in.d;
    j["delta"] = in.delta;
    j["delta1"] = in.delta1;
    j["C_R"] = in.C_R;
    j["eps0"] = in.eps0;
    j["iota"] = in.iota;
    j["alpha"] = in.alpha.value_or((1.0 + in.delta1) / 2.0);
    j["c1"] = in.c1 ? nlohmann::json(*in.c1) : nlohmann::json("1/(2L)");
    j["m"] = in.m;
    j["C_d"] = in.C_d;
    j["q_star"] = in.q_star;
    return j;
}

nlohmann::json to_json(const ConstantChain& c) {
    nlohmann::json j;
    j["inputs"] = to_json(c.inputs);
    j["precision"] = c.precision == Precision::Quad ? "quad" : "double";
    j["mollifier_table_version"] = kMollifierTableVersion;
    j["L"] = c.L;
    j["dominant_R1_case"] = c.r1.dominant;
    j["chain_dominates_headline"] = c.chain_dominates_headline;
    j["clamps"] = c.clamps;
    nlohmann::json trail = nlohmann::json::array();
    for (const auto& q : c.trail) {
        nlohmann::json e;
        e["name"] = q.name;
        e["sign"] = q.sign;
        e["log_abs"] = std::isfinite(q.log_abs) ? nlohmann::json(q.log_abs)
                                                : nlohmann::json(q.log_abs > 0 ? "+inf" : "-inf");
        if (q.has_loglog) {
            e["loglog_abs"] = q.loglog_abs;
            e["loglog_of_reciprocal"] = q.reciprocal;
        }
        e["decimal"] = q.decimal;
        if (!q.note.empty()) e["note"] = q.note;
        trail.push_back(e);
    }
    j["trail"] = trail;
    return j;
}

const Quantity& find(const ConstantChain& chain, const std::string& name) {
    for (const auto& q : chain.trail)
        if (q.name == name) return q;
    throw std::out_of_range("no trail entry " + name);
}

}  // namespace fuplab::constants
