#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sucr/estimators.hpp"
#include "sucr/protocol.hpp"
#include "sucr/rng.hpp"
#include "stats.hpp"

using namespace sucr;

namespace {

SystemParams noiseless(int M) {
    SystemParams p;
    p.M = M;
    p.sigma2 = 0.0;
    return p;
}

ContentionSet make_set(std::initializer_list<double> betas, int M, Engine& rng) {
    ContentionSet set;
    for (double b : betas) set.add({b, {}}, sample_channel(b, M, rng));
    return set;
}

}  // namespace

TEST(DrawContentionSize, ZeroAccessProbability) {
    SystemParams p;
    p.P_a = 0.0;
    auto rng = make_stream(1, {});
    for (int i = 0; i < 100; ++i) EXPECT_EQ(draw_contention_size(p, rng), 0);
}

TEST(DrawContentionSize, MeanAndIdleFraction) {
    SystemParams p;  // K=50, P_a=0.62, tau_p=10
    auto rng = make_stream(2, {});
    const int n = 100000;
    double sum = 0.0;
    int zeros = 0;
    for (int i = 0; i < n; ++i) {
        const int N = draw_contention_size(p, rng);
        sum += N;
        zeros += N == 0;
    }
    EXPECT_NEAR(sum / n, 3.1, 0.02 * 3.1);
    const double pmf0 = 0.04075134234746926937;  // 50-digit reference
    const double se = std::sqrt(pmf0 * (1.0 - pmf0) / n);
    EXPECT_NEAR(static_cast<double>(zeros) / n, pmf0, 3.0 * se);
}

TEST(CollisionProbability, Values) {
    SystemParams p;
    EXPECT_NEAR(collision_probability(p), 0.8245693812376536144, 1e-12);
    p.P_a = 0.0;
    EXPECT_EQ(collision_probability(p), 0.0);
    p = {};
    p.K = 1;
    for (double pa : {0.1, 0.5, 1.0}) {
        p.P_a = pa;
        EXPECT_NEAR(collision_probability(p), 0.0, 1e-15);
    }
}

TEST(UlReceive, NoiseOnly) {
    SystemParams p;
    p.M = 10000;
    auto rng = make_stream(3, {});
    const auto obs = ul_receive(ContentionSet{}, p, rng);
    const double stat = squared_norm(obs.y) / p.M;
    EXPECT_NEAR(stat, 1.0, 3.0 / std::sqrt(p.M));
}

TEST(UlReceive, NoiselessSingleUser) {
    auto p = noiseless(16);
    p.rho = 2.5;
    auto rng = make_stream(4, {});
    const auto set = make_set({3.0}, p.M, rng);
    const auto obs = ul_receive(set, p, rng);
    for (int m = 0; m < p.M; ++m) EXPECT_EQ(obs.y[m], std::sqrt(p.rho) * set.channels[0].entries[m]);
}

TEST(UlReceive, TwoUsersMeanPower) {
    SystemParams p;
    p.M = 20;
    auto rng = make_stream(5, {});
    std::vector<double> v;
    for (int t = 0; t < 10000; ++t) {
        const auto set = make_set({1.0, 2.0}, p.M, rng);
        v.push_back(squared_norm(ul_receive(set, p, rng).y) / p.M);
    }
    const auto s = test::summarize(v);
    EXPECT_LT(std::fabs(s.mean - 4.0), 3.0 * s.std_error());
}

TEST(UlReceive, RejectsMismatchedChannel) {
    SystemParams p;
    p.M = 8;
    auto rng = make_stream(6, {});
    const auto set = make_set({1.0}, 4, rng);
    EXPECT_THROW(ul_receive(set, p, rng), DomainError);
}

TEST(LsEstimate, ScalesByInverseSqrtRho) {
    UlPilotObservation obs{{Complex(2.0, -4.0), Complex(1.0, 0.5)}};
    SystemParams p;
    EXPECT_EQ(ls_estimate(obs, p), obs.y);
    p.rho = 4.0;
    const auto h = ls_estimate(obs, p);
    EXPECT_EQ(h[0], Complex(1.0, -2.0));
    EXPECT_EQ(h[1], Complex(0.5, 0.25));
}

TEST(LsEstimate, PowerMatchesSumGainPlusNoise) {
    SystemParams p;
    p.M = 100000;
    auto rng = make_stream(7, {});
    const auto set = make_set({1.0, 2.0}, p.M, rng);
    const auto h = ls_estimate(ul_receive(set, p, rng), p);
    EXPECT_NEAR(squared_norm(h) / p.M, 4.0, 0.02 * 4.0);
}

TEST(DetectActivity, NoiseOnlyIsRejected) {
    SystemParams p;
    p.M = 10000;
    int fired = 0;
    for (int t = 0; t < 200; ++t) {
        auto rng = make_stream(8, {static_cast<std::uint64_t>(t)});
        fired += detect_activity(ls_estimate(ul_receive(ContentionSet{}, p, rng), p), p, 1.0);
    }
    EXPECT_LE(fired, 2);
}

TEST(DetectActivity, WeakestCoveredUserIsDetected) {
    SystemParams p;
    p.M = 10000;
    int fired = 0;
    for (int t = 0; t < 200; ++t) {
        auto rng = make_stream(9, {static_cast<std::uint64_t>(t)});
        const auto set = make_set({1.0}, p.M, rng);
        fired += detect_activity(ls_estimate(ul_receive(set, p, rng), p), p, 1.0);
    }
    EXPECT_GE(fired, 198);
}

TEST(DetectActivity, StrictThreshold) {
    SystemParams p;
    // ||v||^2 / M equals sigma2/rho + beta_min/2 = 4 exactly.
    const std::vector<Complex> v(4, Complex(2.0, 0.0));
    EXPECT_FALSE(detect_activity(v, p, 6.0));
    EXPECT_TRUE(detect_activity(v, p, 5.9));
    // Exactly at the noise floor sigma2/rho.
    const std::vector<Complex> floor(4, Complex(1.0, 0.0));
    EXPECT_FALSE(detect_activity(floor, p, 1e-9));
}

TEST(Precode, UnitNormAndScaleInvariance) {
    SystemParams p;
    auto rng = make_stream(10, {});
    const auto h = sample_channel(3.0, 32, rng).entries;
    const auto w = precode(h, p);
    EXPECT_NEAR(squared_norm(w), 1.0, 1e-12);
    std::vector<Complex> h7(h);
    for (auto& x : h7) x *= 7.0;
    const auto w7 = precode(h7, p);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(std::abs(w[i] - w7[i]), 0.0, 1e-15);
    p.q = 2.0;
    EXPECT_NEAR(squared_norm(precode(h, p)), 2.0, 1e-12);
}

TEST(Precode, NormIsSqrtQForRandomInputs) {
    auto rng = make_stream(11, {});
    std::uniform_real_distribution<double> qd(0.1, 10.0);
    for (int t = 0; t < 100; ++t) {
        SystemParams p;
        p.q = qd(rng);
        const auto h = sample_channel(qd(rng), 1 + t, rng).entries;
        EXPECT_NEAR(std::sqrt(squared_norm(precode(h, p))), std::sqrt(p.q), 1e-12 * std::sqrt(p.q));
    }
}

TEST(Precode, ZeroVectorThrows) {
    SystemParams p;
    const std::vector<Complex> zero(5);
    EXPECT_THROW(precode(zero, p), DegenerateInputError);
}

TEST(DlReceive, SelfPrecodingNoiseless) {
    auto p = noiseless(64);
    p.q = 3.0;
    auto rng = make_stream(12, {});
    const auto h = sample_channel(2.0, p.M, rng);
    const auto w = precode(h.entries, p);
    const auto obs = dl_receive({2.0, {}}, h, w, p, rng);
    EXPECT_NEAR(obs.z.real(), std::sqrt(p.q * h.squared_norm()), 1e-12 * std::sqrt(h.squared_norm()));
    EXPECT_NEAR(obs.z.imag(), 0.0, 1e-12);
}

TEST(DlReceive, MeanMatchesAsymptoticGain) {
    SystemParams p;
    p.M = 50;
    const double beta = 4.0;
    std::vector<double> re;
    for (int t = 0; t < 10000; ++t) {
        auto rng = make_stream(13, {static_cast<std::uint64_t>(t)});
        const auto set = make_set({beta}, p.M, rng);
        const auto w = precode(ls_estimate(ul_receive(set, p, rng), p), p);
        re.push_back(dl_receive(set.users[0], set.channels[0], w, p, rng).z.real() / std::sqrt(p.M));
    }
    const auto s = test::summarize(re);
    const double want = mean_dl_gain(beta, beta, p) / std::sqrt(p.M);
    EXPECT_LT(std::fabs(s.mean - want), 3.0 * s.std_error());
}

namespace {

double scaled_dl_variance(int M, std::uint64_t seed) {
    SystemParams p;
    p.M = M;
    std::vector<double> v;
    for (int t = 0; t < 4000; ++t) {
        auto rng = make_stream(seed, {static_cast<std::uint64_t>(t)});
        const auto set = make_set({5.0, 2.0}, p.M, rng);
        const auto w = precode(ls_estimate(ul_receive(set, p, rng), p), p);
        v.push_back(dl_receive(set.users[0], set.channels[0], w, p, rng).z.real() / std::sqrt(M));
    }
    return test::summarize(v).variance;
}

}  // namespace

TEST(DlReceive, ScaledVarianceShrinksWithM) {
    EXPECT_GT(scaled_dl_variance(100, 14) / scaled_dl_variance(400, 15), 2.0);
}

struct SplitSamples {
    std::vector<double> chi_stat, g, nu_re, nu_power;
    double lambda1 = 0.0, lambda2 = 0.0;
};

SplitSamples split_samples(int M, int trials, std::uint64_t seed) {
    SystemParams p;
    p.M = M;
    const double beta = 3.0;
    SplitSamples out;
    const auto lam = compute_lambdas(beta, 3.0 + 1.5 + 0.5, p);
    out.lambda1 = lam.lambda1;
    out.lambda2 = lam.lambda2;
    for (int t = 0; t < trials; ++t) {
        auto rng = make_stream(seed, {static_cast<std::uint64_t>(t)});
        const auto set = make_set({beta, 1.5, 0.5}, p.M, rng);
        const auto ul = ul_receive(set, p, rng);
        const auto eta = draw_dl_noise(p, rng);
        const auto split = decompose_gain_noise(set, 0, ul, eta, p);
        out.chi_stat.push_back(split.g * split.g / (lam.lambda1 / 2.0));
        out.g.push_back(split.g);
        out.nu_re.push_back(split.nu.real());
        out.nu_power.push_back(std::norm(split.nu));
    }
    return out;
}

TEST(GainNoiseSplit, GainIsScaledChi) {
    const auto s = split_samples(10, 100000, 16);
    EXPECT_NEAR(test::summarize(s.chi_stat).mean, 20.0, 0.01 * 20.0);
}

TEST(GainNoiseSplit, NoiseVarianceAndIndependence) {
    const auto s = split_samples(10, 100000, 17);
    EXPECT_NEAR(test::summarize(s.nu_power).mean, s.lambda2, 0.02 * s.lambda2);
    const double corr = test::correlation(s.g, s.nu_re);
    EXPECT_LT(std::fabs(corr), 3.0 / std::sqrt(static_cast<double>(s.g.size())));
}

TEST(GainNoiseSplit, AgreesWithDlReceiveUnderSameRandomness) {
    SystemParams p;
    p.M = 24;
    for (int t = 0; t < 50; ++t) {
        auto rng = make_stream(18, {static_cast<std::uint64_t>(t)});
        const auto set = make_set({4.0, 1.0}, p.M, rng);
        const auto ul = ul_receive(set, p, rng);
        const auto eta = draw_dl_noise(p, rng);
        const auto w = precode(ls_estimate(ul, p), p);
        const auto obs = dl_observe(set.users[0], set.channels[0], w, eta, p);
        const auto split = decompose_gain_noise(set, 0, ul, eta, p);
        EXPECT_NEAR(std::abs(obs.z - (split.g + split.nu)), 0.0, 1e-12 * std::abs(obs.z));
    }
}

TEST(GainNoiseSplit, LambdaSumIdentity) {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> u(0.01, 100.0);
    for (int t = 0; t < 1000; ++t) {
        SystemParams p;
        p.rho = u(rng);
        p.q = u(rng);
        p.sigma2 = u(rng);
        const double beta = u(rng);
        const double alpha = beta + u(rng);
        const auto lam = compute_lambdas(beta, alpha, p);
        EXPECT_NEAR(lam.lambda1 + lam.lambda2, p.sigma2 + p.q * beta, 1e-12 * (p.sigma2 + p.q * beta));
        EXPECT_GT(lam.lambda1, 0.0);
        EXPECT_GT(lam.lambda2, 0.0);
    }
}

TEST(GainNoiseSplit, RejectsOutOfRangeIndex) {
    SystemParams p;
    p.M = 4;
    auto rng = make_stream(20, {});
    const auto set = make_set({1.0}, p.M, rng);
    const auto ul = ul_receive(set, p, rng);
    EXPECT_THROW(decompose_gain_noise(set, 1, ul, {}, p), DomainError);
}
