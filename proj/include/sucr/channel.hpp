#pragma once

// Radio parameters, cell geometry and i.i.d. Rayleigh fading channels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sucr/errors.hpp"

namespace sucr {

using Complex = std::complex<double>;

struct SystemParams {
    int M = 100;         // BS antennas
    double rho = 1.0;    // total UL pilot power
    double q = 1.0;      // total DL pilot power
    double sigma2 = 1.0; // noise power
    int tau_p = 10;      // orthogonal pilots per random-access block
    int K = 50;          // access-seeking UEs
    double P_a = 0.62;   // access probability

    // Production validation. sigma2 == 0 is only reachable by constructing
    // params directly (noiseless test path).
    void validate() const {
        if (M < 1) throw ConfigError("params.M must be >= 1");
        if (tau_p < 1) throw ConfigError("params.tau_p must be >= 1");
        if (K < 1) throw ConfigError("params.K must be >= 1");
        if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("params.rho must be positive");
        if (!(q > 0.0) || !std::isfinite(q)) throw ConfigError("params.q must be positive");
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw ConfigError("params.sigma2 must be positive");
        if (!(P_a >= 0.0 && P_a <= 1.0)) throw ConfigError("params.P_a must lie in [0, 1]");
    }

    double selection_probability() const { return P_a / tau_p; }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct CellConfig {
    double radius = 1.0;
    double min_distance_factor = 0.1;
    double pathloss_exponent = 3.7;
    double shadowing_std_db = 8.0;
    double cell_edge_snr_db = 10.0;

    void validate() const {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("cell.radius must be positive");
        if (!(min_distance_factor > 0.0 && min_distance_factor < 1.0))
            throw ConfigError("cell.min_distance_factor must lie in (0, 1)");
        if (!(pathloss_exponent > 2.0)) throw ConfigError("cell.pathloss_exponent must exceed 2");
        if (!(shadowing_std_db >= 0.0)) throw ConfigError("cell.shadowing_std_db must be >= 0");
        if (!std::isfinite(cell_edge_snr_db)) throw ConfigError("cell.cell_edge_snr_db must be finite");
    }

    friend bool operator==(const CellConfig&, const CellConfig&) = default;
};

struct UserTerminal {
    double beta = 1.0;  // large-scale gain (linear)
    std::optional<double> distance;
};

struct ChannelVector {
    std::vector<Complex> entries;

    std::size_t size() const { return entries.size(); }
    double squared_norm() const {
        double acc = 0.0;
        for (const auto& h : entries) acc += std::norm(h);
        return acc;
    }
};

inline double snr_db_to_beta(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

// CN(0, variance): real and imaginary parts each N(0, variance / 2).
template <class Rng>
Complex sample_cn(double variance, Rng& rng) {
    if (variance == 0.0) return {0.0, 0.0};
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    const double re = normal(rng);
    const double im = normal(rng);
    return {re, im};
}

// h ~ CN(0, beta I_M).
template <class Rng>
ChannelVector sample_channel(double beta, int M, Rng& rng) {
    if (!(beta > 0.0)) throw DomainError("sample_channel: beta must be positive");
    if (M < 1) throw DomainError("sample_channel: M must be >= 1");
    ChannelVector h;
    h.entries.resize(static_cast<std::size_t>(M));
    std::normal_distribution<double> normal(0.0, std::sqrt(beta / 2.0));
    for (auto& e : h.entries) {
        const double re = normal(rng);
        const double im = normal(rng);
        e = {re, im};
    }
    return h;
}

// C in beta = C d^-gamma 10^(X/10), chosen so that a UE at the cell edge
// without shadowing has beta equal to the linear cell-edge SNR.
inline double pathloss_constant(const CellConfig& cfg) {
    return snr_db_to_beta(cfg.cell_edge_snr_db) * std::pow(cfg.radius, cfg.pathloss_exponent);
}

inline double distance_to_beta(const CellConfig& cfg, double distance, double shadowing_db) {
    return pathloss_constant(cfg) * std::pow(distance, -cfg.pathloss_exponent) *
           std::pow(10.0, shadowing_db / 10.0);
}

// UEs uniform by area over the annulus [min_distance_factor * r, r] with
// log-normal shadowing, drawn independently per UE.
template <class Rng>
std::vector<UserTerminal> sample_cell_users(const CellConfig& cfg, int count, Rng& rng) {
    if (count < 1) throw DomainError("sample_cell_users: count must be >= 1");
    const double r_min = cfg.min_distance_factor * cfg.radius;
    const double r2_min = r_min * r_min;
    const double r2_max = cfg.radius * cfg.radius;
    std::uniform_real_distribution<double> area(r2_min, r2_max);
    std::normal_distribution<double> shadow(0.0, 1.0);

    std::vector<UserTerminal> users;
    users.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double d = std::clamp(std::sqrt(area(rng)), r_min, cfg.radius);
        const double x_db = cfg.shadowing_std_db * shadow(rng);
        users.push_back({distance_to_beta(cfg, d, x_db), d});
    }
    return users;
}

}  // namespace sucr
