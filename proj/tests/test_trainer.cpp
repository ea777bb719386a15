#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fnac/trainer.hpp"

using namespace fnac;

namespace {

MarketSeries planted_market(int days, std::uint64_t seed, double noise = 0.0, double spread = 0.0) {
    SyntheticSpec spec;
    spec.base_price = 1.0;
    spec.amplitude = 2e-4;
    spec.noise_std = noise;
    spec.spread = spread;
    spec.days = days;
    return synthesize(spec, seed);
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.iterations = 3;
    cfg.alpha = 1.0;
    cfg.env.persistence = 50;  // 12 decisions per episode keeps tests quick
    cfg.env.mode = ActionMode::kDiscrete;
    cfg.env.fee = FeeSchedule::constant_fee();
    cfg.critic.rounds = 8;
    cfg.critic.max_depth = 3;
    cfg.critic.shrinkage = 0.5;
    cfg.critic.sweeps = 2;
    cfg.ridge = 1e-4;
    cfg.hidden = {6};
    cfg.eval_every = 1;
    cfg.threads = 1;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_file(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("config validation") {
    TrainConfig cfg = small_config();
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.alpha = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.hidden = {4, 4};  // discrete mode wants a single hidden layer
    CHECK_THROWS_AS(cfg.make_arch(), std::invalid_argument);
}

TEST_CASE("one iteration with a zero step returns the initialized policy") {
    const MarketSeries market = planted_market(2, 1);
    TrainConfig cfg = small_config();
    cfg.iterations = 1;
    cfg.alpha = 0.0;  // no-op update
    const TrainResult result = train(market, market, cfg, 77);
    const Policy init = Policy::initialized(cfg.make_arch(), 77);
    CHECK(result.policy.theta() == init.theta());
    CHECK(result.report.records.size() == 1);
}

TEST_CASE("training is deterministic, including across thread counts") {
    const MarketSeries market = planted_market(3, 5, /*noise=*/1e-4, /*spread=*/1e-4);
    TrainConfig cfg = small_config();
    cfg.iterations = 4;

    TrainConfig threaded = cfg;
    threaded.threads = 2;

    const TrainResult a = train(market, market, cfg, 3);
    const TrainResult b = train(market, market, cfg, 3);
    const TrainResult c = train(market, market, threaded, 3);

    CHECK(a.policy.theta() == b.policy.theta());
    CHECK(a.policy.theta() == c.policy.theta());

    const std::string pa = temp_file("fnac_report_a.csv");
    const std::string pb = temp_file("fnac_report_b.csv");
    const std::string pc = temp_file("fnac_report_c.csv");
    a.report.write_csv(pa);
    b.report.write_csv(pb);
    c.report.write_csv(pc);
    CHECK(slurp(pa) == slurp(pb));
    CHECK(slurp(pa) == slurp(pc));

    const TrainResult d = train(market, market, cfg, 4);  // different seed moves the result
    CHECK(a.policy.theta() != d.policy.theta());
}

TEST_CASE("returned checkpoint dominates every recorded evaluation") {
    const MarketSeries market = planted_market(3, 9, 1e-4, 1e-4);
    TrainConfig cfg = small_config();
    cfg.iterations = 6;
    const TrainResult result = train(market, market, cfg, 12);

    double best = -1e300;
    for (const auto& rec : result.report.records)
        if (!std::isnan(rec.valid_return)) best = std::max(best, rec.valid_return);
    CHECK(result.report.best_valid_return == best);

    const double re_eval = evaluate_mean_return(market, result.policy, cfg.env);
    CHECK(re_eval == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("risk-active training records rho and J") {
    const MarketSeries market = planted_market(2, 15, 1e-4, 1e-4);
    TrainConfig cfg = small_config();
    cfg.iterations = 2;
    cfg.risk.kind = RiskKind::kMeanVolatility;
    cfg.risk.lambda = 0.1;
    const TrainResult mv = train(market, market, cfg, 5);
    for (const auto& rec : mv.report.records) CHECK_FALSE(std::isnan(rec.j));

    cfg.risk.kind = RiskKind::kRcvar;
    cfg.risk.alpha = 0.5;
    const TrainResult rc = train(market, market, cfg, 5);
    for (const auto& rec : rc.report.records) CHECK_FALSE(std::isnan(rec.rho));
}

TEST_CASE("early stopping halts after patience runs out") {
    const MarketSeries market = planted_market(2, 21);
    TrainConfig cfg = small_config();
    cfg.iterations = 50;
    cfg.eval_every = 1;
    cfg.early_stop_patience = 3;
    cfg.alpha = 1e-12;  // effectively frozen policy: validation never improves
    const TrainResult result = train(market, market, cfg, 1);
    CHECK(result.report.records.size() < 50);
}

TEST_CASE("select_model with a singleton grid returns that configuration") {
    const MarketSeries market = planted_market(2, 31);
    TrainConfig base = small_config();
    base.iterations = 1;
    HyperGrid grid;
    grid.critic_shrinkage = {0.4};
    grid.critic_rounds = {5};
    grid.min_child_weight = {2.0};
    grid.ridge = {0.01};
    grid.alpha = {0.5};
    grid.hidden = {{6}};
    const SelectionResult sel = select_model(grid, market, market, market, base, 2);
    CHECK(sel.best.critic.shrinkage == 0.4);
    CHECK(sel.best.critic.rounds == 5);
    CHECK(sel.best.critic.min_child_weight == 2.0);
    CHECK(sel.best.ridge == 0.01);
    CHECK(sel.best.alpha == 0.5);
    CHECK(sel.best.hidden == std::vector<int>{6});
    CHECK(sel.stage1.size() == 1);
    CHECK(sel.stage2.size() == 1);

    HyperGrid empty = grid;
    empty.alpha = {};
    CHECK_THROWS_AS(select_model(empty, market, market, market, base, 2), std::invalid_argument);
}

TEST_CASE("select_model implements argmax over validation returns") {
    const MarketSeries market = planted_market(2, 41, 1e-4, 1e-4);
    TrainConfig base = small_config();
    base.iterations = 4;
    HyperGrid grid;
    grid.critic_shrinkage = {0.5};
    grid.critic_rounds = {8};
    grid.min_child_weight = {1.0};
    grid.ridge = {1e-4};
    grid.alpha = {0.25, 2.0};
    grid.hidden = {{6}};
    const SelectionResult sel = select_model(grid, market, market, market, base, 3);
    REQUIRE(sel.stage2.size() == 2);

    // recompute both scores independently; the winner must be the argmax
    double scores[2];
    for (int i = 0; i < 2; ++i) {
        TrainConfig cfg = base;
        cfg.alpha = grid.alpha[static_cast<std::size_t>(i)];
        scores[i] = train(market, market, cfg, 3).report.best_valid_return;
        CHECK(sel.stage2[static_cast<std::size_t>(i)].valid_return == scores[i]);
    }
    const double want = scores[1] > scores[0] ? grid.alpha[1] : grid.alpha[0];
    CHECK(sel.best.alpha == want);
}

TEST_CASE("persistence sweep produces a deterministic ranking table") {
    const MarketSeries train_market = planted_market(2, 51, 2e-4, 1e-4);
    const MarketSeries valid_market = planted_market(2, 52, 2e-4, 1e-4);
    auto sweep = [&]() {
        std::vector<std::pair<int, double>> table;
        for (int k : {1, 5, 10}) {
            TrainConfig cfg = small_config();
            cfg.iterations = 2;
            cfg.env.persistence = k;
            const TrainResult r = train(train_market, valid_market, cfg, 7);
            table.emplace_back(k, r.report.best_valid_return);
        }
        return table;
    };
    const auto a = sweep();
    const auto b = sweep();
    REQUIRE(a.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::isfinite(a[i].second));
        CHECK(a[i] == b[i]);
    }
}
