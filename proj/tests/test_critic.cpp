#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fnac/critic.hpp"
#include "fnac/random.hpp"

using namespace fnac;

namespace {

TradingState state_with(double minute, double allocation = 0.0, double delta0 = 0.0) {
    TradingState s;
    s.minute = static_cast<int>(minute);
    s.allocation = allocation;
    s.deltas[0] = delta0;
    return s;
}

// dataset of done-everywhere transitions: plain regression on rewards
Dataset regression_dataset(const std::vector<TradingState>& states, const std::vector<double>& rewards) {
    Dataset d;
    for (std::size_t i = 0; i < states.size(); ++i) {
        TransitionSample s;
        s.state = states[i];
        s.action = 0.0;
        s.reward = rewards[i];
        s.next_state = states[i];
        s.done = true;
        d.samples.push_back(s);
        d.dates.push_back(0);
    }
    d.episode_begin.push_back(0);
    d.episode_returns.push_back(0.0);
    d.reference_prices.push_back(1.0);
    return d;
}

CriticConfig small_cfg() {
    CriticConfig cfg;
    cfg.rounds = 30;
    cfg.max_depth = 3;
    cfg.shrinkage = 0.5;
    cfg.min_child_weight = 1;
    cfg.sweeps = 2;
    return cfg;
}

}  // namespace

TEST_CASE("fit_value on all-zero rewards returns the zero function") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    rng::Stream stream(1);
    for (int i = 0; i < 60; ++i) {
        states.push_back(state_with(45 + i * 9, stream.uniform(-1.0, 1.0)));
        rewards.push_back(0.0);
    }
    const Dataset d = regression_dataset(states, rewards);
    const BoostedEnsemble v = fit_value(d, nullptr, small_cfg(), 0);
    for (const auto& s : states) CHECK(std::abs(v.predict(s)) <= 1e-9);
}

TEST_CASE("done-everywhere fit reduces to regression with per-leaf means") {
    // reward is a function of minute with 4 distinct values, 10 samples each
    std::vector<TradingState> states;
    std::vector<double> rewards;
    std::map<int, std::vector<double>> by_minute;
    rng::Stream stream(2);
    for (int group = 0; group < 4; ++group) {
        for (int i = 0; i < 10; ++i) {
            const int minute = 100 + group * 50;
            const double r = 0.5 * group + 0.01 * stream.uniform();  // small within-group noise
            states.push_back(state_with(minute));
            rewards.push_back(r);
            by_minute[minute].push_back(r);
        }
    }
    CriticConfig cfg = small_cfg();
    cfg.min_child_weight = 10;
    cfg.rounds = 60;
    cfg.sweeps = 1;
    const Dataset d = regression_dataset(states, rewards);
    const BoostedEnsemble v = fit_value(d, nullptr, cfg, 0);

    // brute-force oracle: per-group means and variances
    double worst_group_var = 0.0;
    double model_mse = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& group = by_minute[states[i].minute];
        const double mean = std::accumulate(group.begin(), group.end(), 0.0) / group.size();
        double var = 0.0;
        for (double r : group) var += (r - mean) * (r - mean);
        var /= group.size();
        worst_group_var = std::max(worst_group_var, var);
        const double err = v.predict(states[i]) - rewards[i];
        model_mse += err * err;
    }
    model_mse /= states.size();
    CHECK(model_mse <= worst_group_var + 1e-12);
}

TEST_CASE("two-step deterministic chain propagates values backward") {
    // s0 -r=1-> s1 -r=0-> terminal; V(s0) = 1, V(s1) = 0 under gamma = 1
    Dataset d;
    TransitionSample first;
    first.state = state_with(100);
    first.reward = 1.0;
    first.next_state = state_with(200);
    first.done = false;
    TransitionSample second;
    second.state = state_with(200);
    second.reward = 0.0;
    second.next_state = state_with(300);
    second.done = true;
    // replicate so leaves are well-populated
    for (int i = 0; i < 8; ++i) {
        d.samples.push_back(first);
        d.samples.push_back(second);
        d.dates.push_back(0);
        d.dates.push_back(0);
    }
    d.episode_begin.push_back(0);
    d.episode_returns.push_back(1.0);
    d.reference_prices.push_back(1.0);

    CriticConfig cfg;
    cfg.rounds = 40;
    cfg.max_depth = 2;
    cfg.shrinkage = 0.5;
    cfg.min_child_weight = 1;
    cfg.sweeps = 2;
    const BoostedEnsemble v = fit_value(d, nullptr, cfg, 0);
    CHECK(v.predict(state_with(100)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(v.predict(state_with(200))) < 1e-6);
}

TEST_CASE("fit_value rejects empty and non-finite input") {
    Dataset empty;
    CHECK_THROWS_AS(fit_value(empty, nullptr, small_cfg(), 0), std::invalid_argument);

    std::vector<TradingState> states{state_with(100), state_with(200)};
    std::vector<double> rewards{0.1, std::numeric_limits<double>::quiet_NaN()};
    const Dataset bad = regression_dataset(states, rewards);
    CHECK_THROWS_WITH_AS(fit_value(bad, nullptr, small_cfg(), 0), doctest::Contains("sample 1"),
                         std::invalid_argument);

    states[0].deltas[3] = std::numeric_limits<double>::infinity();
    const Dataset bad_feature = regression_dataset(states, {0.1, 0.2});
    CHECK_THROWS_WITH_AS(fit_value(bad_feature, nullptr, small_cfg(), 0), doctest::Contains("sample 0"),
                         std::invalid_argument);
}

TEST_CASE("predict: empty ensemble returns the base") {
    const BoostedEnsemble e(0.75, 0.3, {});
    CHECK(e.predict(state_with(100)) == 0.75);
}

TEST_CASE("predict: hand-built stump honors split semantics and shrinkage") {
    RegressionTree stump;
    stump.weight = 0.3;  // shrinkage applied through the tree weight
    stump.nodes.resize(3);
    stump.nodes[0].feature = kFeatMinute;
    stump.nodes[0].threshold = 300.0;
    stump.nodes[0].gain = 1.0;
    stump.nodes[0].left = 1;
    stump.nodes[0].right = 2;
    stump.nodes[1].value = 2.0;  // minute < 300
    stump.nodes[2].value = -1.0;
    const BoostedEnsemble e(0.5, 0.3, {stump});

    CHECK(e.predict(state_with(299)) == doctest::Approx(0.5 + 0.3 * 2.0));
    CHECK(e.predict(state_with(300)) == doctest::Approx(0.5 - 0.3 * 1.0));
    CHECK(e.predict(state_with(301)) == doctest::Approx(0.5 - 0.3 * 1.0));
    // purity
    CHECK(e.predict(state_with(299)) == e.predict(state_with(299)));
}

TEST_CASE("feature importance normalizes split gains") {
    RegressionTree t1;
    t1.nodes.resize(3);
    t1.nodes[0] = {kFeatMinute, 100.0, 0.0, 3.0, 1, 2};
    t1.nodes[1].value = 0.0;
    t1.nodes[2].value = 1.0;
    RegressionTree t2;
    t2.nodes.resize(3);
    t2.nodes[0] = {kFeatAllocation, 0.0, 0.0, 3.0, 1, 2};
    t2.nodes[1].value = 0.0;
    t2.nodes[2].value = 1.0;

    const BoostedEnsemble only_minute(0.0, 1.0, {t1});
    const FeatureImportance imp1 = only_minute.feature_importance();
    CHECK(imp1.gain[kFeatMinute] == 1.0);
    CHECK_FALSE(imp1.degenerate);

    const BoostedEnsemble both(0.0, 1.0, {t1, t2});
    const FeatureImportance imp2 = both.feature_importance();
    CHECK(imp2.gain[kFeatMinute] == doctest::Approx(0.5));
    CHECK(imp2.gain[kFeatAllocation] == doctest::Approx(0.5));

    RegressionTree leaf_only;
    leaf_only.nodes.resize(1);
    leaf_only.nodes[0].value = 1.0;
    const BoostedEnsemble degenerate(0.0, 1.0, {leaf_only});
    const FeatureImportance imp3 = degenerate.feature_importance();
    CHECK(imp3.degenerate);
    for (double g : imp3.gain) CHECK(g == 0.0);

    CHECK_THROWS_AS(BoostedEnsemble().feature_importance(), std::invalid_argument);
}

TEST_CASE("importances are non-negative and sum to one on a fitted model") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    rng::Stream stream(3);
    for (int i = 0; i < 200; ++i) {
        TradingState s = state_with(45 + (i * 7) % 555, stream.uniform(-1.0, 1.0), stream.uniform() * 1e-3);
        states.push_back(s);
        rewards.push_back(0.01 * s.minute + 0.5 * s.allocation + stream.uniform() * 0.1);
    }
    const BoostedEnsemble v = fit_value(regression_dataset(states, rewards), nullptr, small_cfg(), 0);
    const FeatureImportance imp = v.feature_importance();
    double total = 0.0;
    for (double g : imp.gain) {
        CHECK(g >= 0.0);
        total += g;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("fitting is invariant to sample order") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    rng::Stream stream(4);
    for (int i = 0; i < 80; ++i) {
        states.push_back(state_with(45 + (i % 20) * 25, stream.uniform(-1.0, 1.0)));
        rewards.push_back(stream.uniform(-1.0, 1.0));
    }
    CriticConfig cfg = small_cfg();
    cfg.trees_per_round = 1;
    cfg.subsample = 1.0;
    cfg.sweeps = 1;
    const BoostedEnsemble a = fit_value(regression_dataset(states, rewards), nullptr, cfg, 0);

    // deterministic shuffle
    std::vector<std::size_t> perm(states.size());
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[static_cast<std::size_t>(stream.uniform() * i)]);
    std::vector<TradingState> shuffled_states;
    std::vector<double> shuffled_rewards;
    for (std::size_t i : perm) {
        shuffled_states.push_back(states[i]);
        shuffled_rewards.push_back(rewards[i]);
    }
    const BoostedEnsemble b = fit_value(regression_dataset(shuffled_states, shuffled_rewards), nullptr, cfg, 0);

    for (const auto& s : states) CHECK(a.predict(s) == b.predict(s));
}

TEST_CASE("piecewise-constant target is fit exactly by one deep round") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    for (int i = 0; i < 64; ++i) {
        const int piece = i / 16;  // 4 pieces of 16 samples
        states.push_back(state_with(100 + piece * 100));
        rewards.push_back(std::array<double, 4>{-1.0, 0.25, 2.0, 3.5}[piece]);
    }
    CriticConfig cfg;
    cfg.rounds = 1;
    cfg.max_depth = 3;
    cfg.shrinkage = 1.0;
    cfg.min_child_weight = 16;
    cfg.sweeps = 1;
    const BoostedEnsemble v = fit_value(regression_dataset(states, rewards), nullptr, cfg, 0);
    double mse = 0.0;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double err = v.predict(states[i]) - rewards[i];
        mse += err * err;
    }
    CHECK(mse / states.size() <= 1e-12);
}

TEST_CASE("train MSE is non-increasing across boosting rounds") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    rng::Stream stream(5);
    for (int i = 0; i < 120; ++i) {
        TradingState s = state_with(45 + (i * 13) % 555, stream.uniform(-1.0, 1.0));
        s.deltas[0] = stream.uniform(-1e-3, 1e-3);
        states.push_back(s);
        rewards.push_back(std::sin(0.02 * s.minute) + 0.3 * s.allocation + 0.05 * stream.uniform());
    }
    std::vector<std::array<double, kStateDim>> features;
    for (const auto& s : states) features.push_back(s.features());
    CriticConfig cfg = small_cfg();
    cfg.rounds = 25;
    cfg.shrinkage = 0.4;
    std::vector<double> mse;
    fit_regression(features, rewards, cfg, 0, &mse);
    REQUIRE(mse.size() == 25);
    for (std::size_t i = 1; i < mse.size(); ++i) CHECK(mse[i] <= mse[i - 1] + 1e-15);
}

TEST_CASE("critic json round trip preserves predictions and importances") {
    std::vector<TradingState> states;
    std::vector<double> rewards;
    rng::Stream stream(6);
    for (int i = 0; i < 50; ++i) {
        states.push_back(state_with(45 + (i * 11) % 555, stream.uniform(-1.0, 1.0)));
        rewards.push_back(stream.uniform(-1.0, 1.0));
    }
    const BoostedEnsemble a = fit_value(regression_dataset(states, rewards), nullptr, small_cfg(), 0);
    const BoostedEnsemble b = BoostedEnsemble::from_json(a.to_json());
    for (const auto& s : states) CHECK(a.predict(s) == b.predict(s));
    CHECK(a.feature_importance().gain == b.feature_importance().gain);
}
