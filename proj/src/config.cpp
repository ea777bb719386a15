#include "fnac/config.hpp"

#include <fstream>
#include <stdexcept>

namespace fnac {

namespace {

SyntheticSpec synthetic_from_json(const nlohmann::json& j) {
    SyntheticSpec s;
    s.base_price = j.value("base_price", s.base_price);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.amplitude = j.value("amplitude", s.amplitude);
    s.phase = j.value("phase", s.phase);
    s.spread = j.value("spread", s.spread);
    s.days = j.value("days", s.days);
    if (j.contains("start_date")) {
        const std::string d = j.at("start_date").get<std::string>();
        int y, m, day;
        if (std::sscanf(d.c_str(), "%4d-%2d-%2d", &y, &m, &day) != 3)
            throw std::invalid_argument("config: start_date must be YYYY-MM-DD");
        s.start_date = days_from_civil(y, m, day);
    }
    return s;
}

FeeSchedule fee_from_json(const nlohmann::json& j) {
    const FeeKind kind = fee_kind_from_string(j.value("kind", "constant"));
    switch (kind) {
        case FeeKind::kConstant:
            return FeeSchedule::constant_fee(j.value("value", 0.5));
        case FeeKind::kHalfIdentity:
            return FeeSchedule::half_identity();
        case FeeKind::kStep:
            if (j.contains("thresholds") || j.contains("values"))
                return FeeSchedule::step(j.at("thresholds").get<std::vector<double>>(),
                                         j.at("values").get<std::vector<double>>());
            return FeeSchedule::step_default();
    }
    return FeeSchedule::constant_fee();
}

EnvConfig env_from_json(const nlohmann::json& j) {
    EnvConfig cfg;
    cfg.persistence = j.value("persistence", cfg.persistence);
    cfg.mode = action_mode_from_string(j.value("mode", "discrete"));
    if (j.contains("fee")) cfg.fee = fee_from_json(j.at("fee"));
    cfg.max_exposure = j.value("max_exposure", cfg.max_exposure);
    cfg.validate();
    return cfg;
}

CriticConfig critic_from_json(const nlohmann::json& j) {
    CriticConfig cfg;
    cfg.rounds = j.value("rounds", cfg.rounds);
    cfg.trees_per_round = j.value("trees_per_round", cfg.trees_per_round);
    cfg.min_child_weight = j.value("min_child_weight", cfg.min_child_weight);
    cfg.max_depth = j.value("max_depth", cfg.max_depth);
    cfg.shrinkage = j.value("shrinkage", cfg.shrinkage);
    cfg.subsample = j.value("subsample", cfg.subsample);
    cfg.sweeps = j.value("sweeps", cfg.sweeps);
    cfg.min_split_gain = j.value("min_split_gain", cfg.min_split_gain);
    cfg.l2_leaf = j.value("l2_leaf", cfg.l2_leaf);
    cfg.validate();
    return cfg;
}

RiskSpec risk_from_json(const nlohmann::json& j) {
    RiskSpec spec;
    spec.kind = risk_kind_from_string(j.value("kind", "neutral"));
    spec.alpha = j.value("alpha", spec.alpha);
    if (j.contains("rho")) {
        spec.rho_fixed = true;
        spec.rho = j.at("rho").get<double>();
    }
    spec.rho_fixed = j.value("rho_fixed", spec.rho_fixed);
    spec.lambda = j.value("lambda", spec.lambda);
    spec.validate();
    return spec;
}

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j) {
    AppConfig cfg;

    if (j.contains("market")) {
        const auto& m = j.at("market");
        if (m.contains("synthetic")) {
            cfg.synthetic = synthetic_from_json(m.at("synthetic"));
            cfg.synthetic_seed = m.at("synthetic").value("seed", 0);
        }
        if (m.contains("csv")) cfg.csv_path = m.at("csv").get<std::string>();
        if (m.contains("window")) {
            cfg.window.open_hour = m.at("window").value("open_hour", cfg.window.open_hour);
            cfg.window.open_minute = m.at("window").value("open_minute", cfg.window.open_minute);
        }
    }

    if (j.contains("env")) cfg.train.env = env_from_json(j.at("env"));
    if (j.contains("critic")) cfg.train.critic = critic_from_json(j.at("critic"));
    if (j.contains("risk")) cfg.train.risk = risk_from_json(j.at("risk"));

    if (j.contains("advantage")) {
        cfg.train.ridge = j.at("advantage").value("ridge", cfg.train.ridge);
        cfg.train.weighting = weighting_from_string(j.at("advantage").value("weighting", "uniform"));
    }

    if (j.contains("actor")) {
        const auto& a = j.at("actor");
        if (a.contains("hidden")) cfg.train.hidden = a.at("hidden").get<std::vector<int>>();
        cfg.train.s_min = a.value("s_min", cfg.train.s_min);
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        cfg.train.iterations = t.value("iterations", cfg.train.iterations);
        cfg.train.alpha = t.value("alpha", cfg.train.alpha);
        cfg.train.rollout_seed_base = t.value("rollout_seed_base", cfg.train.rollout_seed_base);
        cfg.train.eval_every = t.value("eval_every", cfg.train.eval_every);
        cfg.train.early_stop_patience = t.value("early_stop_patience", cfg.train.early_stop_patience);
        cfg.train.threads = t.value("threads", cfg.train.threads);
        cfg.train_seed = t.value("seed", cfg.train_seed);
    }

    if (j.contains("select")) {
        const auto& g = j.at("select");
        cfg.grid.critic_shrinkage = g.value("critic_shrinkage", std::vector<double>{cfg.train.critic.shrinkage});
        cfg.grid.critic_rounds = g.value("critic_rounds", std::vector<int>{cfg.train.critic.rounds});
        cfg.grid.min_child_weight =
            g.value("min_child_weight", std::vector<double>{cfg.train.critic.min_child_weight});
        cfg.grid.ridge = g.value("ridge", std::vector<double>{cfg.train.ridge});
        cfg.grid.alpha = g.value("alpha", std::vector<double>{cfg.train.alpha});
        cfg.grid.hidden = g.value("hidden", std::vector<std::vector<int>>{cfg.train.hidden});
    } else {
        cfg.grid.critic_shrinkage = {cfg.train.critic.shrinkage};
        cfg.grid.critic_rounds = {cfg.train.critic.rounds};
        cfg.grid.min_child_weight = {cfg.train.critic.min_child_weight};
        cfg.grid.ridge = {cfg.train.ridge};
        cfg.grid.alpha = {cfg.train.alpha};
        cfg.grid.hidden = {cfg.train.hidden};
    }

    if (j.contains("backtest")) {
        const auto& b = j.at("backtest");
        cfg.backtest_seeds = b.value("seeds", cfg.backtest_seeds);
        cfg.backtest_greedy = b.value("greedy", cfg.backtest_greedy);
    }

    cfg.train.validate();
    return cfg;
}

AppConfig AppConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("config: invalid JSON in " + path + ": " + e.what());
    }
    return from_json(j);
}

MarketSeries AppConfig::load_series(const std::optional<std::string>& data_override) const {
    if (data_override) return load_csv(*data_override, window);
    if (csv_path) return load_csv(*csv_path, window);
    if (synthetic) return synthesize(*synthetic, synthetic_seed);
    throw std::runtime_error("config: no market source (need --data, market.csv or market.synthetic)");
}

}  // namespace fnac
