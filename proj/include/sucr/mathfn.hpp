#pragma once

// Special functions and samplers used by the downlink-observation density
// and the chi-distributed gain statistics. Everything here is a pure
// function of its arguments; random streams are passed explicitly.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>

#include "sucr/errors.hpp"

namespace sucr {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A real number stored as sign and natural log of its magnitude. Zero is
// (+1, -inf).
struct LogWeightedTerm {
    int sign = 1;
    double log_magnitude = kNegInf;

    static LogWeightedTerm from_value(double v) {
        if (v == 0.0) return {};
        return {v < 0.0 ? -1 : 1, std::log(std::fabs(v))};
    }

    bool is_zero() const { return log_magnitude == kNegInf; }

    double value() const { return is_zero() ? 0.0 : sign * std::exp(log_magnitude); }

    friend bool operator==(const LogWeightedTerm&, const LogWeightedTerm&) = default;
};

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline double log_gamma_lanczos(double x) {
    static constexpr std::array<double, 9> kCoef = {
        0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,   12.507343278686905,
        -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
    constexpr double kG = 7.0;
    x -= 1.0;
    double a = kCoef[0];
    for (std::size_t i = 1; i < kCoef.size(); ++i) a += kCoef[i] / (x + static_cast<double>(i));
    const double t = x + kG + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

// Tail of the Stirling series, sum_k B_2k / (2k (2k-1) x^(2k-1)).
// Truncation error below 1e-16 for x >= 10.
inline double stirling_correction(double x) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12.0 +
                r2 * (-1.0 / 360.0 +
                      r2 * (1.0 / 1260.0 +
                            r2 * (-1.0 / 1680.0 +
                                  r2 * (1.0 / 1188.0 +
                                        r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))));
}

inline constexpr int kIncGammaMaxIter = 500;
inline constexpr double kIncGammaTol = 1e-15;
inline constexpr double kTiny = 1e-300;

// Series for P(s, x) without its x^s e^-x / Gamma(s) prefactor. Converges
// quickly for x < s + 1.
inline double inc_gamma_series(double s, double x) {
    double ap = s;
    double del = 1.0 / s;
    double sum = del;
    for (int n = 0; n < kIncGammaMaxIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kIncGammaTol) return sum;
    }
    throw DomainError("incomplete gamma series did not converge for s=" + std::to_string(s) +
                      ", x=" + std::to_string(x));
}

// Modified Lentz evaluation of the continued fraction for Q(s, x), valid
// for x >= s + 1. Returns the fraction without its prefactor.
inline double inc_gamma_continued_fraction(double s, double x) {
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kIncGammaMaxIter; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kIncGammaTol) return h;
    }
    throw DomainError("incomplete gamma continued fraction did not converge for s=" +
                      std::to_string(s) + ", x=" + std::to_string(x));
}

inline void check_inc_gamma_args(double s, double x) {
    if (!(s > 0.0) || !std::isfinite(s)) throw DomainError("incomplete gamma: s must be positive");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma: x must be nonnegative");
}

}  // namespace detail

// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_gamma: argument must be positive and finite");
    if (x < 0.5) return log_gamma(x + 1.0) - std::log(x);
    if (x < 10.0) return detail::log_gamma_lanczos(x);
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) +
           detail::stirling_correction(x);
}

// Gamma(M + 1/2) / Gamma(M). Large M goes through the difference of the
// Stirling expansions so the result keeps full relative precision.
inline double gamma_ratio_halfstep(long m) {
    if (m < 1) throw DomainError("gamma_ratio_halfstep: M must be >= 1");
    const double x = static_cast<double>(m);
    if (m < 10) return std::exp(log_gamma(x + 0.5) - log_gamma(x));
    const double log_ratio = 0.5 * std::log(x) + x * std::log1p(0.5 / x) - 0.5 +
                             detail::stirling_correction(x + 0.5) - detail::stirling_correction(x);
    return std::exp(log_ratio);
}

// Regularized lower incomplete gamma P(s, x) = gamma(s, x) / Gamma(s).
inline double reg_lower_incomplete_gamma(double s, double x) {
    detail::check_inc_gamma_args(s, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double log_prefactor = -x + s * std::log(x) - log_gamma(s);
    if (x < s + 1.0) return std::min(1.0, detail::inc_gamma_series(s, x) * std::exp(log_prefactor));
    return std::max(0.0, 1.0 - detail::inc_gamma_continued_fraction(s, x) * std::exp(log_prefactor));
}

// ln Q(s, x), the log of the regularized upper incomplete gamma. Stays
// finite long after Q itself underflows.
inline double log_reg_upper_incomplete_gamma(double s, double x) {
    detail::check_inc_gamma_args(s, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return kNegInf;
    const double log_prefactor = -x + s * std::log(x) - log_gamma(s);
    if (x < s + 1.0) return std::log1p(-detail::inc_gamma_series(s, x) * std::exp(log_prefactor));
    return log_prefactor + std::log(detail::inc_gamma_continued_fraction(s, x));
}

// Sign and log-magnitude of sum_i sign_i * exp(log_magnitude_i). The max
// log-magnitude is factored out and the scaled sum is accumulated with
// Neumaier compensation.
inline LogWeightedTerm signed_log_sum_exp(std::span<const LogWeightedTerm> terms) {
    if (terms.empty()) throw DomainError("signed_log_sum_exp: empty input");
    double peak = kNegInf;
    for (const auto& t : terms) peak = std::max(peak, t.log_magnitude);
    if (peak == kNegInf) return {};
    if (std::isinf(peak) || std::isnan(peak)) throw DomainError("signed_log_sum_exp: non-finite term");

    double sum = 0.0;
    double comp = 0.0;
    for (const auto& t : terms) {
        const double v = t.sign * std::exp(t.log_magnitude - peak);
        const double next = sum + v;
        comp += std::fabs(sum) >= std::fabs(v) ? (sum - next) + v : (v - next) + sum;
        sum = next;
    }
    sum += comp;
    if (sum == 0.0) return {};
    return {sum < 0.0 ? -1 : 1, peak + std::log(std::fabs(sum))};
}

// Chi-distributed sample with `dof` degrees of freedom.
template <class Rng>
double sample_chi(int dof, Rng& rng) {
    if (dof < 1) throw DomainError("sample_chi: dof must be >= 1");
    std::chi_squared_distribution<double> chi2(static_cast<double>(dof));
    return std::sqrt(chi2(rng));
}

}  // namespace sucr
