#pragma once

// Step 3: every contender decides on its own whether it is the strongest
// user, and the pilot is classified by how many stayed active.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sucr/channel.hpp"
#include "sucr/estimators.hpp"
#include "sucr/protocol.hpp"

namespace sucr {

enum class Decision { active, inactive };

// epsilon_k = delta * beta_k / sqrt(M): delta standard deviations of
// ||h_k||^2 / M around beta_k.
struct BiasPolicy {
    double delta = 0.0;

    double epsilon(double beta, int M) const { return delta * beta / std::sqrt(static_cast<double>(M)); }
};

enum class Classification { resolved, false_positive, false_negative, idle };

inline std::string to_string(Classification c) {
    switch (c) {
        case Classification::resolved: return "resolved";
        case Classification::false_positive: return "false_positive";
        case Classification::false_negative: return "false_negative";
        case Classification::idle: return "idle";
    }
    return "unknown";
}

struct TrialOutcome {
    int n_contenders = 0;
    int winners = 0;
    Classification classification = Classification::idle;
};

// Active iff beta > alpha_hat / 2 + epsilon (strict).
inline Decision decide(double beta, double alpha_hat, const BiasPolicy& bias, int M) {
    return beta > alpha_hat / 2.0 + bias.epsilon(beta, M) ? Decision::active : Decision::inactive;
}

inline TrialOutcome classify(std::span<const Decision> decisions) {
    TrialOutcome out;
    out.n_contenders = static_cast<int>(decisions.size());
    for (auto d : decisions) out.winners += d == Decision::active ? 1 : 0;
    if (out.n_contenders == 0) out.classification = Classification::idle;
    else if (out.winners == 1) out.classification = Classification::resolved;
    else if (out.winners == 0) out.classification = Classification::false_negative;
    else out.classification = Classification::false_positive;
    return out;
}

// One UE's Step-3 decision. Sees only its own DL observation (z_k, beta_k);
// oracle_alpha is consulted by the perfect-CSI oracle and nothing else.
inline Decision decide_locally(const DlObservation& obs, const AlphaEstimator& estimator,
                               const BiasPolicy& bias, double oracle_alpha) {
    return decide(obs.beta, estimator(obs, oracle_alpha), bias, obs.params.M);
}

// Step 2 for a realized UL pilot: precode along the LS estimate and form
// each contender's observation with the given DL noise.
inline std::vector<DlObservation> dl_observations(const ContentionSet& set, const UlPilotObservation& ul,
                                                  std::span<const Complex> dl_noise,
                                                  const SystemParams& params) {
    const auto w = precode(ls_estimate(ul, params), params);
    std::vector<DlObservation> out;
    out.reserve(set.size());
    for (std::size_t k = 0; k < set.size(); ++k)
        out.push_back(dl_observe(set.users[k], set.channels[k], w, dl_noise[k], params));
    return out;
}

// Per-contender estimates of alpha_S for a realized UL pilot and DL noise.
inline std::vector<double> estimate_contention(const ContentionSet& set, const UlPilotObservation& ul,
                                               std::span<const Complex> dl_noise,
                                               const AlphaEstimator& estimator, const SystemParams& params) {
    const double alpha = set.sum_gain();
    std::vector<double> alpha_hat;
    alpha_hat.reserve(set.size());
    for (const auto& obs : dl_observations(set, ul, dl_noise, params)) alpha_hat.push_back(estimator(obs, alpha));
    return alpha_hat;
}

inline TrialOutcome resolve_with_estimates(const ContentionSet& set, std::span<const double> alpha_hat,
                                           const BiasPolicy& bias, int M) {
    std::vector<Decision> decisions;
    decisions.reserve(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) decisions.push_back(decide(set.users[k].beta, alpha_hat[k], bias, M));
    return classify(decisions);
}

// Steps 1-3 for one pilot: UL pilot, LS estimate, MRT precoding, DL pilot
// to each contender, local estimate, local decision, classification.
// Estimation failures propagate as EstimationError.
template <class Rng>
TrialOutcome resolve_trial(const ContentionSet& set, const AlphaEstimator& estimator, const BiasPolicy& bias,
                           const SystemParams& params, Rng& rng) {
    if (set.empty()) return {};
    const auto ul = ul_receive(set, params, rng);
    std::vector<Complex> dl_noise;
    dl_noise.reserve(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) dl_noise.push_back(draw_dl_noise(params, rng));

    const auto w = precode(ls_estimate(ul, params), params);
    const double alpha = set.sum_gain();
    std::vector<Decision> decisions;
    decisions.reserve(set.size());
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto obs = dl_observe(set.users[k], set.channels[k], w, dl_noise[k], params);
        decisions.push_back(decide_locally(obs, estimator, bias, alpha));
    }
    return classify(decisions);
}

template <class Rng>
TrialOutcome resolve_trial(const ContentionSet& set, EstimatorKind kind, const BiasPolicy& bias,
                           const SystemParams& params, Rng& rng) {
    return resolve_trial(set, AlphaEstimator(kind, params), bias, params, rng);
}

}  // namespace sucr
