#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fnac/backtest.hpp"
#include "fnac/market_data.hpp"
#include "fnac/trainer.hpp"

#include <json.hpp>

namespace fnac {

// Global configuration file (JSON): market source, env, critic, advantage,
// risk, actor and trainer sections, plus the model-selection grid.
struct AppConfig {
    // market
    std::optional<SyntheticSpec> synthetic;
    std::uint64_t synthetic_seed = 0;
    std::optional<std::string> csv_path;
    CalendarWindow window;

    TrainConfig train;
    std::uint64_t train_seed = 0;

    HyperGrid grid;

    std::vector<std::uint64_t> backtest_seeds = {0};
    bool backtest_greedy = true;

    static AppConfig from_json(const nlohmann::json& j);
    static AppConfig load(const std::string& path);

    // honors --data override, then csv_path, then the synthetic section
    MarketSeries load_series(const std::optional<std::string>& data_override) const;
};

}  // namespace fnac
