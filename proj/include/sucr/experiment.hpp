#pragma once

// Monte Carlo engine for the two-user sweep and the single-cell
// experiments, P_a optimisation and binomial aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sucr/channel.hpp"
#include "sucr/errors.hpp"
#include "sucr/estimators.hpp"
#include "sucr/mathfn.hpp"
#include "sucr/parallel.hpp"
#include "sucr/protocol.hpp"
#include "sucr/resolution.hpp"
#include "sucr/rng.hpp"

namespace sucr {

enum class Preset { two_user_sweep, antennas_sweep, bias_sweep, custom };

inline std::string to_string(Preset p) {
    switch (p) {
        case Preset::two_user_sweep: return "two_user_sweep";
        case Preset::antennas_sweep: return "antennas_sweep";
        case Preset::bias_sweep: return "bias_sweep";
        case Preset::custom: return "custom";
    }
    return "unknown";
}

// Accepts both the config spelling (two_user_sweep) and the CLI spelling
// (two-user).
inline std::optional<Preset> parse_preset(std::string_view name) {
    if (name == "two_user_sweep" || name == "two-user") return Preset::two_user_sweep;
    if (name == "antennas_sweep" || name == "antennas") return Preset::antennas_sweep;
    if (name == "bias_sweep" || name == "bias") return Preset::bias_sweep;
    if (name == "custom") return Preset::custom;
    return std::nullopt;
}

enum class AggregationPath { direct, stratified };

inline std::string to_string(AggregationPath a) { return a == AggregationPath::direct ? "direct" : "stratified"; }

inline std::optional<AggregationPath> parse_aggregation(std::string_view name) {
    if (name == "direct") return AggregationPath::direct;
    if (name == "stratified") return AggregationPath::stratified;
    return std::nullopt;
}

// 0.02, 0.04, ..., 1.00
inline std::vector<double> default_pa_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 50; ++i) grid.push_back(i / 50.0);
    return grid;
}

struct ExperimentConfig {
    Preset preset = Preset::custom;
    SystemParams params;
    std::optional<CellConfig> cell;
    EstimatorKind estimator = EstimatorKind::approx;
    std::vector<double> bias_grid{0.0};
    // beta2 in dB for the two-user sweep, M for the cell sweeps, unused by
    // the bias sweep.
    std::vector<double> sweep_grid;
    std::int64_t trials = 10000;
    std::uint64_t seed = 1;
    std::vector<double> pa_grid = default_pa_grid();
    double beta1_db = 10.0;
    AggregationPath aggregation = AggregationPath::direct;
    // Weakest covered gain for the activity detector. Defaults to the
    // cell-edge gain, or the weaker of the two UEs in the two-user sweep.
    std::optional<double> detection_beta_min;

    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline void ExperimentConfig::validate() const {
    params.validate();
    if (cell) cell->validate();
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (bias_grid.empty()) throw ConfigError("bias_grid must not be empty");
    for (double d : bias_grid)
        if (!std::isfinite(d)) throw ConfigError("bias_grid entries must be finite");
    if (pa_grid.empty()) throw ConfigError("pa_grid must not be empty");
    for (double p : pa_grid)
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("pa_grid entries must lie in (0, 1]");
    if (!std::isfinite(beta1_db)) throw ConfigError("beta1_db must be finite");
    if (detection_beta_min && !(*detection_beta_min > 0.0 && std::isfinite(*detection_beta_min)))
        throw ConfigError("detection_beta_min must be positive");

    const bool cell_preset = preset != Preset::two_user_sweep;
    if (cell_preset && !cell) throw ConfigError(to_string(preset) + " needs a cell section");
    if (preset != Preset::bias_sweep && sweep_grid.empty()) throw ConfigError("sweep_grid must not be empty");
    for (double v : sweep_grid) {
        if (!std::isfinite(v)) throw ConfigError("sweep_grid entries must be finite");
        if (cell_preset && preset != Preset::bias_sweep && (v < 1.0 || v != std::floor(v) || v > 1e6))
            throw ConfigError("sweep_grid entries are antenna counts and must be positive integers");
    }
    if (preset == Preset::antennas_sweep && estimator != EstimatorKind::approx)
        throw ConfigError("antennas_sweep uses the approx estimator; use the custom preset for others");
}

struct ResultRow {
    double sweep_value = 0.0;
    std::optional<double> pa_used;
    double p_resolved = 0.0;
    double p_false_positive = 0.0;
    double p_false_negative = 0.0;
    double ci_halfwidth = 0.0;
    std::int64_t trials_effective = 0;
    std::int64_t estimation_failures = 0;
    std::optional<double> p_missed_detection;
    // Expected resolved contentions per pilot, idle pilots included (cell
    // experiments only).
    std::optional<double> resolved_per_pilot;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<ResultRow> rows;

    friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

struct OutcomeCounts {
    std::int64_t trials = 0;
    std::int64_t idle = 0;
    std::int64_t resolved = 0;
    std::int64_t false_positive = 0;
    std::int64_t false_negative = 0;
    std::int64_t failures = 0;
    std::int64_t missed_detection = 0;

    void add(Classification c) {
        ++trials;
        switch (c) {
            case Classification::idle: ++idle; break;
            case Classification::resolved: ++resolved; break;
            case Classification::false_positive: ++false_positive; break;
            case Classification::false_negative: ++false_negative; break;
        }
    }

    void add_failure() {
        ++trials;
        ++failures;
    }

    std::int64_t effective() const { return resolved + false_positive + false_negative; }

    OutcomeCounts& operator+=(const OutcomeCounts& o) {
        trials += o.trials;
        idle += o.idle;
        resolved += o.resolved;
        false_positive += o.false_positive;
        false_negative += o.false_negative;
        failures += o.failures;
        missed_detection += o.missed_detection;
        return *this;
    }

    friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

// 95% normal-approximation half-width.
inline double ci_halfwidth(double p, std::int64_t n) {
    if (n <= 0) return 0.0;
    return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

// Probabilities over non-idle, non-failed trials. All zero when there are
// none.
inline ResultRow row_from_counts(double sweep_value, std::optional<double> pa, const OutcomeCounts& c) {
    ResultRow row;
    row.sweep_value = sweep_value;
    row.pa_used = pa;
    row.trials_effective = c.effective();
    row.estimation_failures = c.failures;
    const double n = static_cast<double>(row.trials_effective);
    if (row.trials_effective > 0) {
        row.p_resolved = c.resolved / n;
        row.p_false_positive = c.false_positive / n;
        row.p_false_negative = c.false_negative / n;
        row.ci_halfwidth = ci_halfwidth(row.p_resolved, row.trials_effective);
    }
    const std::int64_t busy = c.trials - c.idle;
    if (busy > 0) row.p_missed_detection = static_cast<double>(c.missed_detection) / static_cast<double>(busy);
    return row;
}

// ln Pr{N = n} for N ~ Bin(K, p).
inline double binomial_log_pmf(int K, int n, double p) {
    if (n < 0 || n > K) return kNegInf;
    if (p <= 0.0) return n == 0 ? 0.0 : kNegInf;
    if (p >= 1.0) return n == K ? 0.0 : kNegInf;
    const double log_choose = log_gamma(K + 1.0) - log_gamma(n + 1.0) - log_gamma(K - n + 1.0);
    return log_choose + n * std::log(p) + (K - n) * std::log1p(-p);
}

// sum_{N>=1} P_N Pr{N}: expected number of resolved contentions per pilot.
// This is the quantity P_a is chosen to maximise.
inline double expected_resolved_per_pilot(const std::map<int, double>& per_n, const SystemParams& params) {
    const double p = params.selection_probability();
    double acc = 0.0;
    for (const auto& [n, prob] : per_n) {
        if (n < 1 || n > params.K) continue;
        acc += prob * std::exp(binomial_log_pmf(params.K, n, p));
    }
    return acc;
}

// P_resolved = sum_{N>=1} P_N Pr{N} / Pr{N >= 1}. Missing N count as 0.
inline double aggregate_p_resolved(const std::map<int, double>& per_n, const SystemParams& params) {
    const double p = params.selection_probability();
    const double busy = -std::expm1(params.K * std::log1p(-std::min(p, 1.0)));
    if (!(busy > 0.0)) return 0.0;
    return expected_resolved_per_pilot(per_n, params) / busy;
}

// One (delta, P_a) cell of a cell experiment.
struct PointEstimate {
    ResultRow row;
    double objective = 0.0;
};

using PointGrid = std::vector<std::vector<PointEstimate>>;  // [delta][pa]

struct PaOptimum {
    double pa_star = 0.0;
    double p_resolved_star = 0.0;
    double objective_star = 0.0;
    std::size_t index = 0;
};

// Largest objective, smallest P_a on ties.
inline PaOptimum choose_pa(const std::vector<PointEstimate>& points, const std::vector<double>& pa_grid) {
    if (points.empty() || points.size() != pa_grid.size()) throw DomainError("choose_pa: grid size mismatch");
    std::vector<std::size_t> order(pa_grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pa_grid[a] < pa_grid[b]; });
    std::size_t best = order.front();
    for (auto i : order)
        if (points[i].objective > points[best].objective) best = i;
    return {pa_grid[best], points[best].row.p_resolved, points[best].objective, best};
}

namespace detail {

inline constexpr std::uint64_t kTwoUserFamily = 1;
inline constexpr std::uint64_t kCellFamily = 2;
inline constexpr std::uint64_t kStratumFamily = 3;

inline std::vector<BiasPolicy> policies(const std::vector<double>& deltas) {
    std::vector<BiasPolicy> out;
    for (double d : deltas) out.push_back({d});
    return out;
}

inline double cell_beta_min(const ExperimentConfig& cfg) {
    if (cfg.detection_beta_min) return *cfg.detection_beta_min;
    return snr_db_to_beta(cfg.cell->cell_edge_snr_db);
}

// Draws the UL noise vector for one pilot.
inline std::vector<Complex> draw_ul_noise(const SystemParams& params, Engine& eng) {
    std::vector<Complex> n(static_cast<std::size_t>(params.M));
    for (auto& v : n) v = sample_cn(params.sigma2, eng);
    return n;
}

inline UlPilotObservation superimpose(const ContentionSet& set, const std::vector<Complex>& noise,
                                      const SystemParams& params) {
    const double amp = std::sqrt(params.rho);
    UlPilotObservation ul{noise};
    for (const auto& h : set.channels)
        for (std::size_t m = 0; m < ul.y.size(); ++m) ul.y[m] += amp * h.entries[m];
    return ul;
}

// Outcome of one contention set under every bias policy.
struct SetOutcome {
    bool failed = false;
    bool detected = true;
    std::vector<Classification> by_delta;
};

inline SetOutcome evaluate_set(const ContentionSet& set, const UlPilotObservation& ul,
                               std::span<const Complex> dl_noise, const AlphaEstimator& estimator,
                               const std::vector<BiasPolicy>& biases, const SystemParams& params,
                               double beta_min) {
    SetOutcome out;
    out.detected = detect_activity(ls_estimate(ul, params), params, beta_min);
    std::vector<double> alpha_hat;
    try {
        alpha_hat = estimate_contention(set, ul, dl_noise, estimator, params);
    } catch (const EstimationError&) {
        out.failed = true;
        return out;
    }
    for (const auto& b : biases) out.by_delta.push_back(resolve_with_estimates(set, alpha_hat, b, params.M).classification);
    return out;
}

inline void record(OutcomeCounts& c, const SetOutcome& s, std::size_t delta_index) {
    if (s.failed) c.add_failure();
    else c.add(s.by_delta[delta_index]);
    if (!s.detected) ++c.missed_detection;
}

// UE k's channel and DL noise for one trial, from its own stream so that
// they do not depend on which other UEs contend.
struct UeDraw {
    ChannelVector h;
    Complex eta;
};

inline UeDraw draw_ue(std::uint64_t seed, std::uint64_t family, std::int64_t trial, std::uint64_t k,
                      double beta, const SystemParams& params) {
    auto eng = make_stream(seed, {family, static_cast<std::uint64_t>(trial), 2 + k});
    UeDraw d;
    d.h = sample_channel(beta, params.M, eng);
    d.eta = draw_dl_noise(params, eng);
    return d;
}

// Direct path: K UEs dropped per trial, each selects the pilot iff
// u_k < P_a / tau_p. The same u_k, positions, channels and noise serve every
// P_a and delta, so the sets for increasing P_a are nested.
inline std::vector<std::vector<OutcomeCounts>> run_cell_direct(const ExperimentConfig& cfg,
                                                               const SystemParams& params, int threads) {
    const auto biases = policies(cfg.bias_grid);
    const std::size_t n_delta = biases.size();
    const std::size_t n_pa = cfg.pa_grid.size();
    const double beta_min = cell_beta_min(cfg);
    const int workers = std::max(1, threads);
    std::vector<std::vector<std::vector<OutcomeCounts>>> partial(
        static_cast<std::size_t>(workers),
        std::vector<std::vector<OutcomeCounts>>(n_delta, std::vector<OutcomeCounts>(n_pa)));

    parallel_chunks(cfg.trials, workers, [&](int w, std::int64_t begin, std::int64_t end) {
        const AlphaEstimator estimator(cfg.estimator, params);
        auto& counts = partial[static_cast<std::size_t>(w)];
        for (std::int64_t t = begin; t < end; ++t) {
            auto pop = make_stream(cfg.seed, {kCellFamily, static_cast<std::uint64_t>(t), 0});
            const auto users = sample_cell_users(*cfg.cell, params.K, pop);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::vector<double> u(users.size());
            for (auto& x : u) x = unif(pop);
            std::vector<std::size_t> order(users.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return u[a] < u[b]; });

            std::vector<std::size_t> size_for_pa(n_pa);
            for (std::size_t j = 0; j < n_pa; ++j) {
                const double thr = cfg.pa_grid[j] / params.tau_p;
                std::size_t c = 0;
                while (c < order.size() && u[order[c]] < thr) ++c;
                size_for_pa[j] = c;
            }
            const std::size_t largest = *std::max_element(size_for_pa.begin(), size_for_pa.end());

            std::map<std::size_t, SetOutcome> by_size;
            if (largest > 0) {
                auto noise_eng = make_stream(cfg.seed, {kCellFamily, static_cast<std::uint64_t>(t), 1});
                const auto noise = draw_ul_noise(params, noise_eng);
                std::vector<UeDraw> draws;
                for (std::size_t c = 0; c < largest; ++c) {
                    const auto k = order[c];
                    draws.push_back(draw_ue(cfg.seed, kCellFamily, t, k, users[k].beta, params));
                }
                for (auto c : size_for_pa) {
                    if (c == 0 || by_size.count(c)) continue;
                    ContentionSet set;
                    std::vector<Complex> etas;
                    for (std::size_t i = 0; i < c; ++i) {
                        set.add(users[order[i]], draws[i].h);
                        etas.push_back(draws[i].eta);
                    }
                    by_size.emplace(c, evaluate_set(set, superimpose(set, noise, params), etas, estimator, biases,
                                                    params, beta_min));
                }
            }
            for (std::size_t j = 0; j < n_pa; ++j) {
                for (std::size_t d = 0; d < n_delta; ++d) {
                    if (size_for_pa[j] == 0) counts[d][j].add(Classification::idle);
                    else record(counts[d][j], by_size.at(size_for_pa[j]), d);
                }
            }
        }
    });

    auto total = std::move(partial.front());
    for (std::size_t w = 1; w < partial.size(); ++w)
        for (std::size_t d = 0; d < n_delta; ++d)
            for (std::size_t j = 0; j < n_pa; ++j) total[d][j] += partial[w][d][j];
    return total;
}

// P_N for a fixed contention size N, UEs dropped afresh per trial.
inline std::vector<OutcomeCounts> run_stratum(const ExperimentConfig& cfg, const SystemParams& params, int n,
                                              int threads) {
    const auto biases = policies(cfg.bias_grid);
    const double beta_min = cell_beta_min(cfg);
    const int workers = std::max(1, threads);
    std::vector<std::vector<OutcomeCounts>> partial(static_cast<std::size_t>(workers),
                                                    std::vector<OutcomeCounts>(biases.size()));
    const std::uint64_t family = kStratumFamily + (static_cast<std::uint64_t>(n) << 8);
    parallel_chunks(cfg.trials, workers, [&](int w, std::int64_t begin, std::int64_t end) {
        const AlphaEstimator estimator(cfg.estimator, params);
        for (std::int64_t t = begin; t < end; ++t) {
            auto pop = make_stream(cfg.seed, {family, static_cast<std::uint64_t>(t), 0});
            const auto users = sample_cell_users(*cfg.cell, n, pop);
            auto noise_eng = make_stream(cfg.seed, {family, static_cast<std::uint64_t>(t), 1});
            const auto noise = draw_ul_noise(params, noise_eng);
            ContentionSet set;
            std::vector<Complex> etas;
            for (std::size_t k = 0; k < users.size(); ++k) {
                auto d = draw_ue(cfg.seed, family, t, k, users[k].beta, params);
                set.add(users[k], std::move(d.h));
                etas.push_back(d.eta);
            }
            const auto s = evaluate_set(set, superimpose(set, noise, params), etas, estimator, biases, params, beta_min);
            for (std::size_t d = 0; d < biases.size(); ++d) record(partial[static_cast<std::size_t>(w)][d], s, d);
        }
    });
    auto total = std::move(partial.front());
    for (std::size_t w = 1; w < partial.size(); ++w)
        for (std::size_t d = 0; d < total.size(); ++d) total[d] += partial[w][d];
    return total;
}

// Largest N whose upper tail still matters at the largest P_a on the grid.
inline int stratum_limit(const ExperimentConfig& cfg, const SystemParams& params) {
    const double p = *std::max_element(cfg.pa_grid.begin(), cfg.pa_grid.end()) / params.tau_p;
    double tail = 1.0;
    for (int n = 0; n <= params.K; ++n) {
        tail -= std::exp(binomial_log_pmf(params.K, n, p));
        if (n >= 1 && tail < 1e-9) return n;
    }
    return params.K;
}

inline PointGrid direct_grid(const ExperimentConfig& cfg, const SystemParams& params, int threads) {
    const auto counts = run_cell_direct(cfg, params, threads);
    PointGrid grid(counts.size());
    for (std::size_t d = 0; d < counts.size(); ++d) {
        for (std::size_t j = 0; j < counts[d].size(); ++j) {
            const auto& c = counts[d][j];
            PointEstimate pe;
            pe.row = row_from_counts(0.0, cfg.pa_grid[j], c);
            pe.objective = static_cast<double>(c.resolved) / static_cast<double>(c.trials);
            pe.row.resolved_per_pilot = pe.objective;
            grid[d].push_back(pe);
        }
    }
    return grid;
}

inline PointGrid stratified_grid(const ExperimentConfig& cfg, const SystemParams& params, int threads) {
    const int n_max = stratum_limit(cfg, params);
    std::vector<std::vector<OutcomeCounts>> strata;  // [n-1][delta]
    for (int n = 1; n <= n_max; ++n) strata.push_back(run_stratum(cfg, params, n, threads));

    PointGrid grid(cfg.bias_grid.size());
    for (std::size_t d = 0; d < cfg.bias_grid.size(); ++d) {
        for (double pa : cfg.pa_grid) {
            SystemParams at = params;
            at.P_a = pa;
            std::vector<double> w(static_cast<std::size_t>(n_max));
            double w_sum = 0.0;
            for (int n = 1; n <= n_max; ++n) {
                w[static_cast<std::size_t>(n - 1)] = std::exp(binomial_log_pmf(at.K, n, at.selection_probability()));
                w_sum += w[static_cast<std::size_t>(n - 1)];
            }
            PointEstimate pe;
            pe.row.pa_used = pa;
            double var = 0.0;
            double missed = 0.0;
            bool any_busy = false;
            for (int n = 1; n <= n_max; ++n) {
                const auto& c = strata[static_cast<std::size_t>(n - 1)][d];
                const auto r = row_from_counts(0.0, pa, c);
                const double raw = w[static_cast<std::size_t>(n - 1)];
                const double wn = w_sum > 0.0 ? raw / w_sum : 0.0;
                pe.row.p_resolved += wn * r.p_resolved;
                pe.row.p_false_positive += wn * r.p_false_positive;
                pe.row.p_false_negative += wn * r.p_false_negative;
                pe.row.trials_effective += r.trials_effective;
                pe.row.estimation_failures += r.estimation_failures;
                pe.objective += raw * r.p_resolved;
                if (r.trials_effective > 0)
                    var += wn * wn * r.p_resolved * (1.0 - r.p_resolved) / static_cast<double>(r.trials_effective);
                if (r.p_missed_detection) {
                    missed += wn * *r.p_missed_detection;
                    any_busy = true;
                }
            }
            pe.row.ci_halfwidth = 1.96 * std::sqrt(var);
            if (any_busy) pe.row.p_missed_detection = missed;
            pe.row.resolved_per_pilot = pe.objective;
            grid[d].push_back(pe);
        }
    }
    return grid;
}

inline PointGrid cell_grid(const ExperimentConfig& cfg, const SystemParams& params, int threads) {
    return cfg.aggregation == AggregationPath::direct ? direct_grid(cfg, params, threads)
                                                      : stratified_grid(cfg, params, threads);
}

inline ResultRow optimised_row(const std::vector<PointEstimate>& points, const std::vector<double>& pa_grid,
                               double sweep_value) {
    const auto opt = choose_pa(points, pa_grid);
    ResultRow row = points[opt.index].row;
    row.sweep_value = sweep_value;
    row.pa_used = opt.pa_star;
    return row;
}

inline ExperimentResult run_cell_m_sweep(const ExperimentConfig& cfg, int threads) {
    cfg.validate();
    ExperimentConfig one = cfg;
    one.bias_grid = {cfg.bias_grid.front()};
    ExperimentResult result{cfg, {}};
    for (double m : cfg.sweep_grid) {
        SystemParams params = cfg.params;
        params.M = static_cast<int>(m);
        const auto grid = cell_grid(one, params, threads);
        result.rows.push_back(optimised_row(grid.front(), cfg.pa_grid, m));
    }
    return result;
}

}  // namespace detail

// Every (delta, P_a) point of the cell experiment at cfg.params.M.
inline PointGrid evaluate_cell(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    if (!cfg.cell) throw ConfigError("evaluate_cell needs a cell section");
    return detail::cell_grid(cfg, cfg.params, threads);
}

// Grid search over cfg.pa_grid at cfg.params.M and delta = bias_grid[0],
// maximising the expected number of resolved contentions per pilot.
inline PaOptimum optimize_pa(const ExperimentConfig& cfg, int threads = 1) {
    ExperimentConfig one = cfg;
    one.bias_grid = {cfg.bias_grid.front()};
    const auto grid = evaluate_cell(one, threads);
    return choose_pa(grid.front(), cfg.pa_grid);
}

// S = {beta1, beta2} with beta2 taken from sweep_grid (dB). N is fixed at 2
// and P_a plays no role.
inline ExperimentResult run_two_user_sweep(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    const auto& params = cfg.params;
    const BiasPolicy bias{cfg.bias_grid.front()};
    const double beta1 = snr_db_to_beta(cfg.beta1_db);
    const int workers = std::max(1, threads);
    ExperimentResult result{cfg, {}};

    for (double beta2_db : cfg.sweep_grid) {
        const double beta2 = snr_db_to_beta(beta2_db);
        const double beta_min = cfg.detection_beta_min.value_or(std::min(beta1, beta2));
        const std::vector<UserTerminal> users{{beta1, {}}, {beta2, {}}};
        std::vector<OutcomeCounts> partial(static_cast<std::size_t>(workers));
        parallel_chunks(cfg.trials, workers, [&](int w, std::int64_t begin, std::int64_t end) {
            const AlphaEstimator estimator(cfg.estimator, params);
            auto& counts = partial[static_cast<std::size_t>(w)];
            for (std::int64_t t = begin; t < end; ++t) {
                auto noise_eng = make_stream(cfg.seed, {detail::kTwoUserFamily, static_cast<std::uint64_t>(t), 1});
                const auto noise = detail::draw_ul_noise(params, noise_eng);
                ContentionSet set;
                std::vector<Complex> etas;
                for (std::size_t k = 0; k < users.size(); ++k) {
                    auto d = detail::draw_ue(cfg.seed, detail::kTwoUserFamily, t, k, users[k].beta, params);
                    set.add(users[k], std::move(d.h));
                    etas.push_back(d.eta);
                }
                const auto s = detail::evaluate_set(set, detail::superimpose(set, noise, params), etas, estimator,
                                                    {bias}, params, beta_min);
                detail::record(counts, s, 0);
            }
        });
        OutcomeCounts total;
        for (const auto& c : partial) total += c;
        result.rows.push_back(row_from_counts(beta2_db, std::nullopt, total));
    }
    return result;
}

// P_resolved against M with P_a optimised per M (approx estimator).
inline ExperimentResult run_antennas_sweep(const ExperimentConfig& cfg, int threads = 1) {
    if (cfg.preset != Preset::antennas_sweep) throw ConfigError("run_antennas_sweep needs preset antennas_sweep");
    return detail::run_cell_m_sweep(cfg, threads);
}

// One row per delta at cfg.params.M, P_a optimised per delta. All deltas
// share the same trials.
inline ExperimentResult run_bias_sweep(const ExperimentConfig& cfg, int threads = 1) {
    cfg.validate();
    const auto grid = detail::cell_grid(cfg, cfg.params, threads);
    ExperimentResult result{cfg, {}};
    for (std::size_t d = 0; d < cfg.bias_grid.size(); ++d)
        result.rows.push_back(detail::optimised_row(grid[d], cfg.pa_grid, cfg.bias_grid[d]));
    return result;
}

// Cell sweep over M with any estimator and delta = bias_grid[0].
inline ExperimentResult run_custom(const ExperimentConfig& cfg, int threads = 1) {
    return detail::run_cell_m_sweep(cfg, threads);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1) {
    switch (cfg.preset) {
        case Preset::two_user_sweep: return run_two_user_sweep(cfg, threads);
        case Preset::antennas_sweep: return run_antennas_sweep(cfg, threads);
        case Preset::bias_sweep: return run_bias_sweep(cfg, threads);
        case Preset::custom: return run_custom(cfg, threads);
    }
    throw ConfigError("unknown preset");
}

// Preset configurations with every default filled in.
inline ExperimentConfig preset_config(Preset preset) {
    ExperimentConfig cfg;
    cfg.preset = preset;
    switch (preset) {
        case Preset::two_user_sweep:
            cfg.estimator = EstimatorKind::ml;
            cfg.params.M = 100;
            cfg.sweep_grid = {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
            break;
        case Preset::antennas_sweep:
            cfg.cell = CellConfig{};
            cfg.sweep_grid = {1, 10, 25, 50, 100, 200, 300};
            break;
        case Preset::bias_sweep:
            cfg.cell = CellConfig{};
            cfg.params.M = 100;
            cfg.bias_grid = {-2, -1, 0, 1, 2};
            break;
        case Preset::custom:
            cfg.cell = CellConfig{};
            cfg.sweep_grid = {100};
            break;
    }
    return cfg;
}

}  // namespace sucr
