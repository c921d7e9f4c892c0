// Resolves a handful of two-UE collisions and prints what each UE decided.

#include <cstdio>

#include "sucr/resolution.hpp"
#include "sucr/rng.hpp"

int main() {
    sucr::SystemParams params;
    params.M = 100;
    const sucr::UserTerminal ue1{sucr::snr_db_to_beta(10.0), {}};
    const sucr::UserTerminal ue2{sucr::snr_db_to_beta(13.0), {}};
    const sucr::AlphaEstimator estimator(sucr::EstimatorKind::ml, params);
    const sucr::BiasPolicy bias{0.0};

    for (std::uint64_t t = 0; t < 5; ++t) {
        auto rng = sucr::make_stream(2024, {t});
        const sucr::UserTerminal users[] = {ue1, ue2};
        const auto set = sucr::sample_contention_set(users, params.M, rng);
        const auto ul = sucr::ul_receive(set, params, rng);
        const sucr::Complex eta[] = {sucr::draw_dl_noise(params, rng), sucr::draw_dl_noise(params, rng)};
        const auto alpha_hat = sucr::estimate_contention(set, ul, eta, estimator, params);
        const auto outcome = sucr::resolve_with_estimates(set, alpha_hat, bias, params.M);
        std::printf("trial %llu: alpha=%.2f  alpha_hat=(%.2f, %.2f)  -> %s\n",
                    static_cast<unsigned long long>(t), set.sum_gain(), alpha_hat[0], alpha_hat[1],
                    sucr::to_string(outcome.classification).c_str());
    }
    return 0;
}
