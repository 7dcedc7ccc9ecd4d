#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fuplab::constants {

// (log(2 + xi))^{-alpha}; alpha must lie in (0, 1).
double theta_weight(double xi_l1, double alpha);

struct LChoice {
    int L = 0;
    double raw = 0.0;     // the real-valued lower bound before rounding
    bool clamped = false; // raised to the floor of 4
};

// Smallest admissible integer porosity scale for a delta-regular set in
// dimension d: ceil((2^{d/2} sqrt(2d+1) C_R)^{2/(d-delta)}), at least 4.
LChoice choose_L(int d, double delta, double C_R);

struct DampingParams {
    double log_c2 = 0.0;
    double log_c3 = 0.0;
    double log_c3_unclamped = 0.0;
    double log_c3_star = 0.0;
    bool c3_clamped = false;
};

// d = 1 uses the single-set formulas (c2 = iota c1^10); d >= 2 uses the
// m-cover product formulas. c3 is clamped strictly below 2 pi q_star.
DampingParams damping_params(double c1, double C_R, double delta1, int m, int d, double iota,
                             double q_star = 0.05);

struct R1Threshold {
    // log of each candidate: (i) exp[(16 pi C/c3)^{1/(1-alpha)}], (ii) exp(4^{1/(1-alpha)}),
    // (iii) ((-d log c1)^d / c3)^8, (iv) (4 log(2C/c2^2))^2, (v) (8d)^4, (vi) (2d/c3)^2
    std::array<double, 6> log_case{};
    int dominant = 0;  // index into log_case
    double log_R1 = 0.0;
};

// Inputs in log space. C_d is the dimensional constant of the localization
// inequality; the default absorbs 16 pi C_d into iota.
R1Threshold r1_threshold(int d, double log_c1, double log_c2, double log_c3, double alpha,
                         double C_d);

inline constexpr double kDefaultCd = 0.019894367886486918;  // 1/(16 pi)

struct MollifierConstants {
    double C_phi = 0.0;
    double c_phi = 0.0;
};

// Tail constants of the tensor-product mollifier phi(x) = prod c sinc^4(pi x_i / 2)
// (nonnegative, Fourier support in [-1,1]^d, unit mass): the smallest C with
// int_{|y|_inf > R/10} phi <= C / R for every R >= 1. Computed by quadrature.
MollifierConstants compute_mollifier_constants(int d);

// Frozen table of compute_mollifier_constants, version kMollifierTableVersion.
MollifierConstants reference_mollifier(int d);
inline constexpr int kMollifierTableVersion = 1;

enum class Precision { Double, Quad };

struct ChainInputs {
    int d = 2;
    double delta = 1.0;
    double delta1 = 0.5;
    double C_R = 1.0;
    double eps0 = 0.1;
    double iota = 1e-2;
    std::optional<double> alpha;  // default (1 + delta1)/2
    std::optional<double> c1;     // default 1/(2L)
    int m = 1;
    double C_d = kDefaultCd;
    double q_star = 0.05;
    std::optional<MollifierConstants> mollifier;  // default: reference table
};

// One entry of the audit trail. Values too large for a double are kept by
// their iterated logarithm: value = exp(exp(loglog_abs)) when has_loglog and
// log_abs is not finite. For quantities below 1 (gamma0, beta) the iterated
// log refers to the reciprocal, flagged by reciprocal = true.
struct Quantity {
    std::string name;
    int sign = 1;
    double log_abs = 0.0;
    bool has_loglog = false;
    double loglog_abs = 0.0;
    bool reciprocal = false;
    std::string decimal;
    std::string note;
};

struct ConstantChain {
    ChainInputs inputs;
    Precision precision = Precision::Double;
    int L = 0;
    double alpha = 0.0;
    double c1 = 0.0;
    MollifierConstants mollifier;
    DampingParams damping;
    R1Threshold r1;
    double loglog_Cstar = 0.0;
    double log_T0 = 0.0;
    double loglog_inv_gamma0 = 0.0;
    double loglog_inv_beta = 0.0;
    double log_beta = 0.0;                // -inf when beta underflows every float
    double loglog_inv_beta_headline = 0.0;
    bool chain_dominates_headline = false;
    std::vector<Quantity> trail;
    std::vector<std::string> clamps;
};

// Full constant chain L -> (c2, c3) -> R1 -> C* -> T0 -> gamma0 -> beta, plus the
// closed-form headline bound. Throws ContractViolation if an intermediate
// leaves its range and ConfigError on invalid inputs.
ConstantChain beta_chain(const ChainInputs& in, Precision precision = Precision::Double);

nlohmann::json to_json(const ConstantChain& chain);
nlohmann::json to_json(const ChainInputs& in);

// Finds a trail entry by name; throws std::out_of_range when absent.
const Quantity& find(const ConstantChain& chain, const std::string& name);

}  // namespace fuplab::constants
