#include <gtest/gtest.h>

#include <json.hpp>

#include "orlomo/config.hpp"

using namespace orlomo;
using nlohmann::json;

namespace {

json base_config() {
    return json{
        {"algorithm", "orlomo"},
        {"workers", 4},
        {"local_steps", 8},
        {"iterations", 100},
        {"beta", 0.9},
        {"gamma", 0.001},
        {"schedule", "delay-penalized"},
        {"seed", 12345},
        {"problem",
         {{"kind", "noisy-quadratic"}, {"dimension", 8}, {"sigma", 0.1},
          {"lambda_min", 1.0}, {"lambda_max", 4.0}}},
    };
}

}  // namespace

TEST(ConfigTest, ParsesMinimalConfig) {
    SimConfig cfg = config_from_json(base_config());
    EXPECT_EQ(cfg.algorithm, Algorithm::orlomo);
    EXPECT_EQ(cfg.hp.workers, 4u);
    EXPECT_EQ(cfg.hp.local_steps, 8u);
    EXPECT_EQ(cfg.hp.iterations, 100u);
    EXPECT_EQ(cfg.hp.beta, 0.9);
    EXPECT_EQ(cfg.seed, 12345u);
    EXPECT_EQ(cfg.gradient_budget(), 800u);
    EXPECT_EQ(cfg.timing.kind, TimingKind::constant);
}

TEST(ConfigTest, RejectsUnknownFields) {
    json j = base_config();
    j["extraneous"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["problem"]["mystery"] = 1;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["timing"] = {{"pace", 1.0}};
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(ConfigTest, RejectsOutOfRangeValues) {
    json j = base_config();
    j["beta"] = 1.0;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["beta"] = -0.5;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["gamma"] = 0.0;
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["workers"] = 0;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(ConfigTest, ExactlyOneOfIterationsOrBudget) {
    json j = base_config();
    j["gradient_budget"] = 800;
    EXPECT_THROW(config_from_json(j), ConfigError);  // both given
    j.erase("iterations");
    SimConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.hp.iterations, 100u);
    EXPECT_TRUE(cfg.budget_given);
    j["gradient_budget"] = 801;  // not a multiple of local_steps
    EXPECT_THROW(config_from_json(j), ConfigError);
    j.erase("gradient_budget");
    EXPECT_THROW(config_from_json(j), ConfigError);  // neither given
}

TEST(ConfigTest, ScheduleFieldsAreExclusive) {
    json j = base_config();
    j["eta_bar"] = 0.5;  // not valid with delay-penalized
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["schedule"] = "constant";
    EXPECT_THROW(config_from_json(j), ConfigError);  // eta_bar missing
    j["eta_bar"] = 0.5;
    SimConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.hp.schedule, Schedule::constant);
    EXPECT_EQ(cfg.hp.eta_bar, 0.5);
}

TEST(ConfigTest, RoundTripIsIdentity) {
    json j = base_config();
    j["timing"] = {{"kind", "heterogeneous"}, {"slow_workers", {1, 3}},
                   {"slow_multiplier", 2.0}};
    SimConfig cfg = config_from_json(j);
    json out = config_to_json(cfg);
    SimConfig cfg2 = config_from_json(out);
    EXPECT_EQ(config_to_json(cfg2), out);
    EXPECT_EQ(cfg2.hp.workers, cfg.hp.workers);
    EXPECT_EQ(cfg2.timing.slow_workers, cfg.timing.slow_workers);
    EXPECT_EQ(cfg2.seed, cfg.seed);
}

TEST(ConfigTest, TimingValidation) {
    json j = base_config();
    j["timing"] = {{"kind", "uniform-jitter"}, {"jitter", 1.5}};
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["timing"] = {{"kind", "constant"}, {"jitter", 0.5}};
    EXPECT_THROW(config_from_json(j), ConfigError);
    j["timing"] = {{"kind", "heterogeneous"}, {"slow_workers", {9}},
                   {"slow_multiplier", 2.0}};
    EXPECT_THROW(config_from_json(j), ConfigError);  // worker id out of range
    j["timing"] = {{"kind", "uniform-jitter"}, {"jitter", 0.5}};
    EXPECT_NO_THROW(config_from_json(j));
}

TEST(ConfigTest, EffectiveCadence) {
    json j = base_config();
    SimConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.effective_cadence(), 1u);  // T = 100 -> max(1, 100/500)
    j["iterations"] = 5000;
    cfg = config_from_json(j);
    EXPECT_EQ(cfg.effective_cadence(), 10u);
    j["diagnostics_cadence"] = 7;
    cfg = config_from_json(j);
    EXPECT_EQ(cfg.effective_cadence(), 7u);
}

TEST(ConfigTest, SynchronousRounds) {
    json j = base_config();
    j["iterations"] = 96;
    SimConfig cfg = config_from_json(j);
    // C = S*T = 768 gradients, K*S = 32 per round -> 24 rounds
    EXPECT_EQ(cfg.synchronous_rounds(), 24u);
}

TEST(ConfigTest, ProblemFieldRequirements) {
    json j = base_config();
    j["problem"].erase("lambda_max");
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base_config();
    j["problem"] = {{"kind", "logistic-regression"}, {"dimension", 4}, {"sigma", 0.1}};
    SimConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.problem.n_points, 512u);
    EXPECT_EQ(cfg.problem.l2_reg, 0.01);
    j["problem"] = {{"kind", "rank1-matrix-factorization"}, {"dimension", 5}, {"sigma", 0.0}};
    EXPECT_THROW(config_from_json(j), ConfigError);  // odd dimension
}
