#pragma once

// Steps 1 and 2 of the strongest-user collision resolution protocol, seen
// from one pilot sequence: binomial pilot selection, the superimposed UL
// pilot at the BS, LS estimation, activity detection, MRT precoding and the
// DL pilot each contender receives.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <span>
#include <vector>

#include "sucr/channel.hpp"
#include "sucr/errors.hpp"
#include "sucr/mathfn.hpp"

namespace sucr {

// The UEs that picked the pilot under consideration, with their channels.
struct ContentionSet {
    std::vector<UserTerminal> users;
    std::vector<ChannelVector> channels;

    std::size_t size() const { return users.size(); }
    bool empty() const { return users.empty(); }

    double sum_gain() const {
        double alpha = 0.0;
        for (const auto& u : users) alpha += u.beta;
        return alpha;
    }

    void add(UserTerminal ue, ChannelVector h) {
        users.push_back(ue);
        channels.push_back(std::move(h));
    }
};

template <class Rng>
ContentionSet sample_contention_set(std::span<const UserTerminal> users, int M, Rng& rng) {
    ContentionSet set;
    for (const auto& ue : users) set.add(ue, sample_channel(ue.beta, M, rng));
    return set;
}

struct UlPilotObservation {
    std::vector<Complex> y;
};

// What UE k sees in Step 2, together with what it knows locally.
struct DlObservation {
    Complex z;
    double beta = 1.0;
    SystemParams params;
};

template <class Rng>
int draw_contention_size(const SystemParams& params, Rng& rng) {
    const double p = params.selection_probability();
    if (p <= 0.0) return 0;
    std::binomial_distribution<int> dist(params.K, p);
    return dist(rng);
}

// Pr{N >= 2} for N ~ Bin(K, P_a / tau_p).
inline double collision_probability(const SystemParams& params) {
    const double p = params.selection_probability();
    const double K = static_cast<double>(params.K);
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return params.K >= 2 ? 1.0 : 0.0;
    const double pmf0 = std::exp(K * std::log1p(-p));
    const double pmf1 = K * p * std::exp((K - 1.0) * std::log1p(-p));
    return std::max(0.0, 1.0 - pmf0 - pmf1);
}

// y = sqrt(rho) sum_i h_i + n, n ~ CN(0, sigma2 I_M).
template <class Rng>
UlPilotObservation ul_receive(const ContentionSet& set, const SystemParams& params, Rng& rng) {
    const auto M = static_cast<std::size_t>(params.M);
    const double amp = std::sqrt(params.rho);
    UlPilotObservation obs;
    obs.y.assign(M, Complex{});
    for (const auto& h : set.channels) {
        if (h.size() != M) throw DomainError("ul_receive: channel length differs from M");
        for (std::size_t m = 0; m < M; ++m) obs.y[m] += amp * h.entries[m];
    }
    for (auto& v : obs.y) v += sample_cn(params.sigma2, rng);
    return obs;
}

inline std::vector<Complex> ls_estimate(const UlPilotObservation& obs, const SystemParams& params) {
    const double scale = 1.0 / std::sqrt(params.rho);
    std::vector<Complex> h(obs.y.size());
    for (std::size_t m = 0; m < h.size(); ++m) h[m] = scale * obs.y[m];
    return h;
}

inline double squared_norm(std::span<const Complex> v) {
    double acc = 0.0;
    for (const auto& x : v) acc += std::norm(x);
    return acc;
}

// Midpoint threshold between the noise floor sigma2/rho and the weakest
// covered UE: declares the pilot used iff ||h_LS||^2 / M > sigma2/rho + beta_min/2.
inline bool detect_activity(std::span<const Complex> estimate, const SystemParams& params,
                            double beta_min) {
    const double stat = squared_norm(estimate) / static_cast<double>(estimate.size());
    return stat > params.sigma2 / params.rho + beta_min / 2.0;
}

// MRT along the LS estimate with total power q.
inline std::vector<Complex> precode(std::span<const Complex> estimate, const SystemParams& params) {
    const double norm = std::sqrt(squared_norm(estimate));
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw DegenerateInputError("precode: channel estimate is zero or non-finite");
    const double scale = std::sqrt(params.q) / norm;
    std::vector<Complex> w(estimate.size());
    for (std::size_t m = 0; m < w.size(); ++m) w[m] = scale * estimate[m];
    return w;
}

// h^H w.
inline Complex inner_product(const ChannelVector& h, std::span<const Complex> w) {
    if (h.size() != w.size()) throw DomainError("inner_product: length mismatch");
    Complex acc{};
    for (std::size_t m = 0; m < w.size(); ++m) acc += std::conj(h.entries[m]) * w[m];
    return acc;
}

template <class Rng>
Complex draw_dl_noise(const SystemParams& params, Rng& rng) {
    return sample_cn(params.sigma2, rng);
}

// z = h^H w + eta with a given noise realization.
inline DlObservation dl_observe(const UserTerminal& ue, const ChannelVector& h,
                                std::span<const Complex> w, Complex eta,
                                const SystemParams& params) {
    return {inner_product(h, w) + eta, ue.beta, params};
}

template <class Rng>
DlObservation dl_receive(const UserTerminal& ue, const ChannelVector& h,
                         std::span<const Complex> w, const SystemParams& params, Rng& rng) {
    return dl_observe(ue, h, w, draw_dl_noise(params, rng), params);
}

// z_k = g_k + nu_k, split through the MMSE estimate of h_k given the true
// contention set. g_k = sqrt(q) ||h_MMSE|| is scaled-chi, nu_k is the
// residual plus DL noise.
struct GainNoiseSplit {
    double g = 0.0;
    Complex nu;
};

inline GainNoiseSplit decompose_gain_noise(const ContentionSet& set, std::size_t k,
                                       const UlPilotObservation& obs, Complex eta,
                                       const SystemParams& params) {
    if (k >= set.size()) throw DomainError("decompose_gain_noise: k is not in the contention set");
    const double alpha = set.sum_gain();
    const double beta = set.users[k].beta;
    const double c = std::sqrt(params.rho) * beta / (params.rho * alpha + params.sigma2);

    const auto& h = set.channels[k].entries;
    const std::size_t M = obs.y.size();
    std::vector<Complex> h_mmse(M);
    for (std::size_t m = 0; m < M; ++m) h_mmse[m] = c * obs.y[m];
    const double mmse_norm = std::sqrt(squared_norm(h_mmse));
    if (!(mmse_norm > 0.0)) throw DegenerateInputError("decompose_gain_noise: zero observation");

    Complex proj{};
    for (std::size_t m = 0; m < M; ++m) proj += std::conj(h[m] - h_mmse[m]) * h_mmse[m];
    const double sq = std::sqrt(params.q);
    return {sq * mmse_norm, sq * proj / mmse_norm + eta};
}

}  // namespace sucr
