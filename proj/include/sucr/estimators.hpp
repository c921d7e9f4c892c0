#pragma once

// UE-side estimation of the contention sum-gain alpha_S from the DL pilot
// z_k: the maximum-likelihood estimator built on the exact density of z_k,
// the closed-form approximation obtained by matching z_k to its mean, and a
// perfect-knowledge oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sucr/channel.hpp"
#include "sucr/errors.hpp"
#include "sucr/mathfn.hpp"
#include "sucr/protocol.hpp"

namespace sucr {

enum class EstimatorKind { ml, approx, oracle };

inline std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::ml: return "ml";
        case EstimatorKind::approx: return "approx";
        case EstimatorKind::oracle: return "oracle";
    }
    return "unknown";
}

inline std::optional<EstimatorKind> parse_estimator_kind(std::string_view name) {
    if (name == "ml") return EstimatorKind::ml;
    if (name == "approx") return EstimatorKind::approx;
    if (name == "oracle") return EstimatorKind::oracle;
    return std::nullopt;
}

// Scale of the chi-distributed gain (lambda1) and variance of the
// circularly-symmetric residual (lambda2) in z_k = g_k + nu_k.
struct Lambdas {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

inline Lambdas compute_lambdas(double beta, double alpha, const SystemParams& p) {
    const double l1 = p.rho * p.q * beta * beta / (p.rho * alpha + p.sigma2);
    return {l1, p.sigma2 + p.q * beta - l1};
}

// E{z_k} = sqrt(lambda1) Gamma(M + 1/2) / Gamma(M).
inline double mean_dl_gain(double beta, double alpha, const SystemParams& p) {
    return std::sqrt(compute_lambdas(beta, alpha, p).lambda1) * gamma_ratio_halfstep(p.M);
}

// Density of Re(z_k) given alpha: a scaled chi_{2M} variable plus
// N(0, lambda2 / 2), in closed form as a 2M-term sum of incomplete gamma
// functions. Tables that depend only on M are built once per instance.
class RealPartDensity {
public:
    // Cancellation allowed in the alternating sum (z < 0) before the
    // positive-integrand quadrature takes over: 1e6.
    static constexpr double kMaxLogCancellation = 13.815510557964274;
    static constexpr double kNegligible = 45.0;

    explicit RealPartDensity(const SystemParams& params) : params_(params) {
        if (params.M < 1) throw DomainError("RealPartDensity: M must be >= 1");
        const int terms = 2 * params.M;
        const double m = terms - 1;
        log_binom_.resize(static_cast<std::size_t>(terms));
        log_gamma_s_.resize(static_cast<std::size_t>(terms));
        const double lg_m1 = log_gamma(m + 1.0);
        for (int n = 0; n < terms; ++n) {
            const double dn = n;
            log_binom_[n] = lg_m1 - log_gamma(dn + 1.0) - log_gamma(m - dn + 1.0);
            log_gamma_s_[n] = log_gamma((dn + 1.0) / 2.0);
        }
        log_gamma_M_ = log_gamma(static_cast<double>(params.M));
    }

    const SystemParams& params() const { return params_; }

    double log_pdf(double z_re, double alpha, double beta) const {
        if (!std::isfinite(z_re)) throw DomainError("log_f1: z_re must be finite");
        if (!(beta > 0.0) || !(alpha >= beta)) throw DomainError("log_f1: requires alpha >= beta > 0");
        const auto [l1, l2] = compute_lambdas(beta, alpha, params_);
        if (!(l1 > 0.0) || !(l2 > 0.0)) throw DomainError("log_f1: degenerate lambdas");

        const int M = params_.M;
        const double a = 1.0 / l1 + 1.0 / l2;
        const double log_a = std::log(a);
        const double log_prefactor = -z_re * z_re / (l1 + l2) - log_gamma_M_ -
                                     M * std::log(l1) - 0.5 * std::log(std::numbers::pi * l2);
        if (z_re == 0.0) return log_prefactor + log_gamma_M_ - M * log_a;

        const double b = z_re / l2;
        const double x = b * b / a;
        const double log_abs_b = std::log(std::fabs(b));
        const bool positive = z_re > 0.0;
        const int last = 2 * M - 1;

        // Magnitude of each summand without its incomplete-gamma factor,
        // which lies in (0, 2]. For z > 0 every summand is positive, so ones
        // more than kNegligible below the largest cannot change the sum in
        // double precision and skip the incomplete-gamma evaluation.
        std::vector<double> base(static_cast<std::size_t>(last + 1));
        double base_peak = kNegInf;
        for (int n = 0; n <= last; ++n) {
            const double s = (n + 1) / 2.0;
            base[n] = log_binom_[n] + log_gamma_s_[n] + (last - n) * log_abs_b - (2.0 * M - s) * log_a;
            base_peak = std::max(base_peak, base[n]);
        }
        const double cutoff = positive ? base_peak - kNegligible : kNegInf;

        std::vector<LogWeightedTerm> terms;
        terms.reserve(static_cast<std::size_t>(last + 1));
        UpperGammaChain half(0.5, x);
        UpperGammaChain whole(1.0, x);
        double peak = kNegInf;
        for (int n = 0; n <= last; ++n) {
            const bool even = (n % 2) == 0;
            UpperGammaChain& chain = even ? half : whole;
            if (base[n] < cutoff) {
                chain.advance();
                continue;
            }
            const double log_q = chain.log_q();
            chain.advance();

            // Gamma(s) + c_n gamma(s, x) = Gamma(s) (2 - Q) or Gamma(s) Q.
            double log_g = log_q;
            if (positive && even) log_g = log_q < -40.0 ? std::numbers::ln2 : std::log(2.0 - std::exp(log_q));
            const double log_mag = base[n] + log_g;
            const int sign = (positive || ((last - n) % 2) == 0) ? 1 : -1;
            terms.push_back({sign, log_mag});
            peak = std::max(peak, log_mag);
        }
        const LogWeightedTerm sum = signed_log_sum_exp(terms);
        if (positive) return log_prefactor + sum.log_magnitude;

        if (sum.sign < 0 || sum.is_zero() || sum.log_magnitude < peak - kMaxLogCancellation) {
            return log_prefactor + std::numbers::ln2 + log_negative_mean_integral(b / a, a);
        }
        return log_prefactor + sum.log_magnitude;
    }

private:
    // Q(s, x), Q(s + 1, x), ... by the stable upward recurrence
    // Q(s + 1, x) = Q(s, x) + x^s e^-x / Gamma(s + 1), held as v * e^scale.
    class UpperGammaChain {
    public:
        UpperGammaChain(double s0, double x) : s_(s0), x_(x) {
            log_scale_ = log_reg_upper_incomplete_gamma(s0, x);
            const double log_inc = s0 * std::log(x) - x - log_gamma(s0 + 1.0);
            inc_ = std::exp(log_inc - log_scale_);
        }

        double log_q() const { return log_scale_ + std::log(v_); }

        void advance() {
            v_ += inc_;
            inc_ *= x_ / (s_ + 1.0);
            s_ += 1.0;
            if (v_ > 1e200) {
                log_scale_ += std::log(v_);
                inc_ /= v_;
                v_ = 1.0;
            }
        }

    private:
        double s_;
        double x_;
        double log_scale_ = 0.0;
        double v_ = 1.0;
        double inc_ = 0.0;
    };

    // ln of int_0^inf g^(2M-1) exp(-a (g - mu)^2) dg for mu < 0, by
    // composite Gauss-Legendre around the mode of the log-concave integrand.
    double log_negative_mean_integral(double mu, double a) const {
        const double m = 2.0 * params_.M - 1.0;
        const double c = -mu;
        const double mode = (m / a) / (c + std::sqrt(c * c + 2.0 * m / a));
        auto log_integrand = [&](double g) { return m * std::log(g) - a * (g + c) * (g + c); };
        const double peak = log_integrand(mode);
        const double width = 1.0 / std::sqrt(m / (mode * mode) + 2.0 * a);

        constexpr double kDrop = 60.0;
        double hi = mode + width;
        for (double step = width; log_integrand(hi) > peak - kDrop; step *= 2.0) hi += step;
        double lo = mode;
        for (double step = width; lo > 0.0 && log_integrand(lo) > peak - kDrop; step *= 2.0)
            lo = std::max(0.0, lo - step);

        static constexpr std::array<double, 8> kNodes = {
            -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
            0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
        static constexpr std::array<double, 8> kWeights = {
            0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
            0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
        const int panels = std::clamp(static_cast<int>(std::ceil((hi - lo) / (0.25 * width))), 16, 20000);
        const double h = (hi - lo) / panels;
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double mid = lo + (p + 0.5) * h;
            for (std::size_t i = 0; i < kNodes.size(); ++i) {
                const double g = mid + 0.5 * h * kNodes[i];
                if (g > 0.0) acc += kWeights[i] * std::exp(log_integrand(g) - peak);
            }
        }
        return peak + std::log(0.5 * h * acc);
    }

    SystemParams params_;
    std::vector<double> log_binom_;
    std::vector<double> log_gamma_s_;
    double log_gamma_M_ = 0.0;
};

// ln f1(z_re | alpha). Builds the M-dependent tables on every call; reuse a
// RealPartDensity when evaluating repeatedly.
inline double log_f1(double z_re, double alpha, double beta, const SystemParams& params) {
    return RealPartDensity(params).log_pdf(z_re, alpha, beta);
}

// ln f2(z_im | alpha): Im(z_k) ~ N(0, lambda2 / 2).
inline double log_f2(double z_im, double alpha, double beta, const SystemParams& params) {
    if (!(beta > 0.0) || !(alpha >= beta)) throw DomainError("log_f2: requires alpha >= beta > 0");
    const double l2 = compute_lambdas(beta, alpha, params).lambda2;
    if (!(l2 > 0.0)) throw DomainError("log_f2: degenerate lambda2");
    return -0.5 * std::log(std::numbers::pi * l2) - z_im * z_im / l2;
}

// Value returned by the approximate estimator when Re(z) carries no usable
// gain (zero or so small that the inversion overflows): far above any
// physical alpha, so the decision rule makes the UE pull out.
inline constexpr double kSaturationFactor = 1e12;
inline double saturated_alpha(double beta) { return beta * kSaturationFactor; }

// max((Gamma(M+1/2)/Gamma(M))^2 q beta^2 / z_re^2 - sigma2/rho, beta).
// The imaginary part is ignored.
inline double approx_estimate(const DlObservation& obs) {
    const auto& p = obs.params;
    const double z = obs.z.real();
    if (!std::isfinite(z)) throw EstimationError("approx_estimate: non-finite observation");
    if (z == 0.0) return saturated_alpha(obs.beta);
    const double ratio = gamma_ratio_halfstep(p.M);
    const double unclamped = ratio * ratio * p.q * obs.beta * obs.beta / (z * z) - p.sigma2 / p.rho;
    if (!std::isfinite(unclamped) || unclamped > saturated_alpha(obs.beta)) return saturated_alpha(obs.beta);
    return std::max(unclamped, obs.beta);
}

inline double oracle_estimate(double true_alpha) { return true_alpha; }

// Golden-section refinement of a log-spaced grid search over
// alpha in [beta, alpha_max], alpha_max = max(100 beta, 10 alpha_approx).
struct MlSearchOptions {
    int grid_points = 200;
    double rel_tol = 1e-6;
    double beta_span = 100.0;
    double approx_span = 10.0;
};

class MlEstimator {
public:
    explicit MlEstimator(const SystemParams& params, MlSearchOptions options = {})
        : density_(params), options_(options) {
        if (options_.grid_points < 3) throw DomainError("MlEstimator: grid needs at least 3 points");
    }

    double log_likelihood(const DlObservation& obs, double alpha) const {
        return density_.log_pdf(obs.z.real(), alpha, obs.beta) +
               log_f2(obs.z.imag(), alpha, obs.beta, density_.params());
    }

    double upper_bound(const DlObservation& obs) const {
        return std::max(options_.beta_span * obs.beta, options_.approx_span * approx_estimate(obs));
    }

    double estimate(const DlObservation& obs) const {
        if (!std::isfinite(obs.z.real()) || !std::isfinite(obs.z.imag()))
            throw EstimationError("ml_estimate: non-finite observation");
        if (obs.params.M != density_.params().M)
            throw EstimationError("ml_estimate: observation M differs from estimator M");

        const double u_lo = std::log(obs.beta);
        const double u_hi = std::log(upper_bound(obs));
        const int n = options_.grid_points;
        auto objective = [&](double u) {
            const double v = log_likelihood(obs, std::max(obs.beta, std::exp(u)));
            return std::isfinite(v) ? v : kNegInf;
        };
        auto grid_u = [&](int i) { return i == 0 ? u_lo : u_lo + (u_hi - u_lo) * i / (n - 1); };

        int best = -1;
        double best_val = kNegInf;
        for (int i = 0; i < n; ++i) {
            const double v = objective(grid_u(i));
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        if (best < 0) throw EstimationError("ml_estimate: likelihood is not finite anywhere on the search grid");

        double a = grid_u(std::max(best - 1, 0));
        double b = grid_u(std::min(best + 1, n - 1));
        constexpr double kInvPhi = 0.6180339887498949;
        double c = b - kInvPhi * (b - a);
        double d = a + kInvPhi * (b - a);
        double fc = objective(c);
        double fd = objective(d);
        while (b - a > options_.rel_tol) {
            if (fc >= fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - kInvPhi * (b - a);
                fc = objective(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + kInvPhi * (b - a);
                fd = objective(d);
            }
        }
        // Candidates in increasing alpha so ties resolve to the smallest.
        double best_u = grid_u(best);
        for (double u : {a, c, d, b}) {
            const double v = objective(u);
            if (v > best_val || (v == best_val && u < best_u)) {
                best_val = v;
                best_u = u;
            }
        }
        return std::max(obs.beta, std::exp(best_u));
    }

private:
    RealPartDensity density_;
    MlSearchOptions options_;
};

inline double ml_estimate(const DlObservation& obs) { return MlEstimator(obs.params).estimate(obs); }

// Dispatches on EstimatorKind with whatever per-M state the kind needs.
class AlphaEstimator {
public:
    AlphaEstimator(EstimatorKind kind, const SystemParams& params) : kind_(kind) {
        if (kind == EstimatorKind::ml) ml_.emplace(params);
    }

    EstimatorKind kind() const { return kind_; }

    // true_alpha is read only by the oracle.
    double operator()(const DlObservation& obs, double true_alpha) const {
        switch (kind_) {
            case EstimatorKind::ml: return ml_->estimate(obs);
            case EstimatorKind::approx: return approx_estimate(obs);
            case EstimatorKind::oracle: return oracle_estimate(true_alpha);
        }
        throw EstimationError("unknown estimator kind");
    }

private:
    EstimatorKind kind_;
    std::optional<MlEstimator> ml_;
};

}  // namespace sucr
