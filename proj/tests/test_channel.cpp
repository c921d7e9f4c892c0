#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sucr/channel.hpp"
#include "sucr/rng.hpp"
#include "stats.hpp"

using namespace sucr;

TEST(SnrDbToBeta, Values) {
    EXPECT_DOUBLE_EQ(snr_db_to_beta(10.0), 10.0);
    EXPECT_DOUBLE_EQ(snr_db_to_beta(0.0), 1.0);
    EXPECT_NEAR(snr_db_to_beta(13.0), 19.952623149688797, 1e-12);
}

TEST(SystemParams, ValidationRejectsBadValues) {
    SystemParams p;
    EXPECT_NO_THROW(p.validate());
    auto bad = [](auto mutate) {
        SystemParams q;
        mutate(q);
        return q;
    };
    EXPECT_THROW(bad([](auto& q) { q.M = 0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](auto& q) { q.sigma2 = 0.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](auto& q) { q.rho = -1.0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](auto& q) { q.P_a = 1.5; }).validate(), ConfigError);
    EXPECT_THROW(bad([](auto& q) { q.tau_p = 0; }).validate(), ConfigError);
    EXPECT_THROW(bad([](auto& q) { q.K = 0; }).validate(), ConfigError);
}

TEST(CellConfig, ValidationRejectsBadValues) {
    CellConfig c;
    EXPECT_NO_THROW(c.validate());
    c.min_distance_factor = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.pathloss_exponent = 2.0;
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SampleChannel, NormConcentratesForLargeM) {
    auto rng = make_stream(1, {});
    const auto h = sample_channel(1.0, 100000, rng);
    EXPECT_EQ(h.size(), 100000u);
    EXPECT_NEAR(h.squared_norm() / 100000.0, 1.0, 0.02);
}

TEST(SampleChannel, EntryVariance) {
    auto rng = make_stream(2, {});
    const auto h = sample_channel(4.0, 10000, rng);
    std::vector<double> re, im;
    for (const auto& e : h.entries) {
        re.push_back(e.real());
        im.push_back(e.imag());
    }
    const double var = test::summarize(re).variance + test::summarize(im).variance;
    EXPECT_NEAR(var, 4.0, 0.2);
}

namespace {

double norm_variance(int M, int draws, std::uint64_t seed) {
    auto rng = make_stream(seed, {});
    std::vector<double> v;
    for (int i = 0; i < draws; ++i) v.push_back(sample_channel(2.0, M, rng).squared_norm() / M);
    return test::summarize(v).variance;
}

}  // namespace

TEST(SampleChannel, HardeningVarianceScalesAsOneOverM) {
    const double v100 = norm_variance(100, 10000, 3);
    const double v400 = norm_variance(400, 10000, 4);
    EXPECT_NEAR(v100 / v400, 4.0, 0.8);
    EXPECT_NEAR(v100, 4.0 / 100.0, 0.1 * 4.0 / 100.0);
}

TEST(SampleChannel, HardeningSlopeOnLogLogGrid) {
    std::vector<double> xs, ys;
    for (int M : {10, 40, 160, 640}) {
        xs.push_back(std::log(M));
        ys.push_back(std::log(norm_variance(M, 4000, 10 + M)));
    }
    const auto sx = test::summarize(xs);
    const auto sy = test::summarize(ys);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        num += (xs[i] - sx.mean) * (ys[i] - sy.mean);
        den += (xs[i] - sx.mean) * (xs[i] - sx.mean);
    }
    EXPECT_NEAR(num / den, -1.0, 0.1);
}

TEST(SampleChannel, RejectsBadArguments) {
    auto rng = make_stream(1, {});
    EXPECT_THROW(sample_channel(0.0, 10, rng), DomainError);
    EXPECT_THROW(sample_channel(1.0, 0, rng), DomainError);
}

TEST(SampleCn, ZeroVarianceIsZero) {
    auto rng = make_stream(1, {});
    EXPECT_EQ(sample_cn(0.0, rng), Complex(0.0, 0.0));
}

TEST(Cell, EdgeCalibration) {
    CellConfig cfg;
    cfg.cell_edge_snr_db = 10.0;
    EXPECT_NEAR(distance_to_beta(cfg, cfg.radius, 0.0), 10.0, 1e-12);
    cfg.radius = 250.0;
    EXPECT_NEAR(distance_to_beta(cfg, cfg.radius, 0.0), 10.0, 1e-9);
    EXPECT_NEAR(distance_to_beta(cfg, 0.1 * cfg.radius, 0.0), 10.0 * std::pow(10.0, 3.7), 1e-6);
}

TEST(Cell, RadialDistributionIsAreaUniform) {
    CellConfig cfg;
    auto rng = make_stream(7, {});
    const auto users = sample_cell_users(cfg, 100000, rng);
    std::vector<double> d;
    for (const auto& u : users) {
        ASSERT_TRUE(u.distance.has_value());
        EXPECT_GE(*u.distance, 0.1 * cfg.radius);
        EXPECT_LE(*u.distance, cfg.radius);
        EXPECT_GT(u.beta, 0.0);
        d.push_back(*u.distance);
    }
    const double r2 = cfg.radius * cfg.radius;
    const double r2min = 0.01 * r2;
    const double ks = test::ks_statistic(d, [&](double x) { return (x * x - r2min) / (r2 - r2min); });
    EXPECT_LT(ks, test::ks_critical_001(d.size()));
}

TEST(Cell, ShadowingIsZeroMeanInDb) {
    CellConfig cfg;
    auto rng = make_stream(8, {});
    const auto users = sample_cell_users(cfg, 100000, rng);
    std::vector<double> x_db;
    for (const auto& u : users) {
        const double no_shadow = distance_to_beta(cfg, *u.distance, 0.0);
        x_db.push_back(10.0 * std::log10(u.beta / no_shadow));
    }
    const auto s = test::summarize(x_db);
    EXPECT_NEAR(s.mean, 0.0, 0.1);
    EXPECT_NEAR(std::sqrt(s.variance), cfg.shadowing_std_db, 0.1);
}

TEST(Cell, NoShadowingGivesDeterministicPathloss) {
    CellConfig cfg;
    cfg.shadowing_std_db = 0.0;
    auto rng = make_stream(9, {});
    for (const auto& u : sample_cell_users(cfg, 100, rng))
        EXPECT_NEAR(u.beta, distance_to_beta(cfg, *u.distance, 0.0), 1e-9 * u.beta);
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
    auto a = make_stream(42, {1, 2, 3});
    auto b = make_stream(42, {1, 2, 3});
    auto c = make_stream(42, {1, 2, 4});
    auto d = make_stream(43, {1, 2, 3});
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
    EXPECT_NE(va, d());
    EXPECT_NE(derive_seed(1, {0, 1}), derive_seed(1, {1, 0}));
}
