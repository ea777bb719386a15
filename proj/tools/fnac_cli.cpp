// fnac: batch training and backtesting for the intraday FX trading agent.
//
// Verbs: synth, train, select, backtest, oracle, report. Every verb takes
// --config; outputs are CSV/JSON files. Exit code 0 on success, 1 with a
// one-line "error: ..." on stderr otherwise.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fnac/backtest.hpp"
#include "fnac/config.hpp"
#include "fnac/trainer.hpp"

namespace fs = std::filesystem;
using namespace fnac;

namespace {

int run_synth(const AppConfig& cfg, const std::string& out, std::optional<int> days,
              std::optional<std::uint64_t> seed) {
    if (!cfg.synthetic) throw std::runtime_error("synth: config has no market.synthetic section");
    SyntheticSpec spec = *cfg.synthetic;
    if (days) spec.days = *days;
    const MarketSeries series = synthesize(spec, seed.value_or(cfg.synthetic_seed));
    write_csv(series, out);
    std::cout << "wrote " << series.episodes.size() << " trading days to " << out << "\n";
    return 0;
}

int run_train(const AppConfig& cfg, const std::string& train_csv, const std::string& valid_csv,
              const std::string& out_dir, std::optional<std::uint64_t> seed) {
    const MarketSeries train_series = load_csv(train_csv, cfg.window);
    const MarketSeries valid_series = load_csv(valid_csv, cfg.window);
    const TrainResult result = train(train_series, valid_series, cfg.train, seed.value_or(cfg.train_seed));

    fs::create_directories(out_dir);
    result.policy.save((fs::path(out_dir) / "policy.json").string());
    result.critic.save((fs::path(out_dir) / "critic.json").string());
    result.report.write_csv((fs::path(out_dir) / "report.csv").string());

    double wall = 0.0;
    for (const auto& r : result.report.records) wall += r.wall_seconds;
    std::cout << "trained " << result.report.records.size() << " iterations in " << wall
              << "s; best validation return " << result.report.best_valid_return << " at iteration "
              << result.report.best_iteration << "\n";
    return 0;
}

int run_select(const AppConfig& cfg, const std::string& train_csv, const std::string& valid_critic_csv,
               const std::string& valid_actor_csv, const std::string& out,
               std::optional<std::uint64_t> seed) {
    const MarketSeries train_series = load_csv(train_csv, cfg.window);
    const MarketSeries valid_critic = load_csv(valid_critic_csv, cfg.window);
    const MarketSeries valid_actor = load_csv(valid_actor_csv, cfg.window);
    const SelectionResult sel =
        select_model(cfg.grid, train_series, valid_critic, valid_actor, cfg.train, seed.value_or(cfg.train_seed));

    nlohmann::json j;
    j["critic"] = {{"shrinkage", sel.best.critic.shrinkage},
                   {"rounds", sel.best.critic.rounds},
                   {"min_child_weight", sel.best.critic.min_child_weight}};
    j["advantage"] = {{"ridge", sel.best.ridge}};
    j["actor"] = {{"hidden", sel.best.hidden}};
    j["train"] = {{"alpha", sel.best.alpha}};
    auto table = nlohmann::json::array();
    for (const auto& e : sel.stage2)
        table.push_back({{"alpha", e.config.alpha}, {"hidden", e.config.hidden}, {"valid_return", e.valid_return}});
    j["stage2_table"] = table;
    std::ofstream os(out);
    if (!os) throw std::runtime_error("select: cannot open " + out);
    os << j.dump(2) << '\n';
    std::cout << "wrote best configuration to " << out << "\n";
    return 0;
}

int run_backtest(const AppConfig& cfg, const std::optional<std::string>& data,
                 const std::optional<std::string>& policy_path,
                 const std::optional<std::string>& baseline_kind, const std::string& out_dir) {
    const MarketSeries series = cfg.load_series(data);
    BacktestResult result;
    if (baseline_kind) {
        result = baseline(baseline_kind_from_string(*baseline_kind), series, cfg.train.env,
                          cfg.train.threads);
    } else {
        if (!policy_path) throw std::runtime_error("backtest: need --policy or --baseline");
        const Policy policy = Policy::load(*policy_path);
        result = backtest(series, policy, cfg.train.env, cfg.backtest_seeds, cfg.backtest_greedy,
                          cfg.train.threads);
    }
    fs::create_directories(out_dir);
    write_report(result, nullptr, out_dir);
    const double final_pct = result.cumulative_mean.empty() ? 0.0 : result.cumulative_mean.back();
    std::cout << "episodes " << result.dates.size() << ", mean episode return "
              << result.mean_episode_return << ", cumulative " << final_pct << "% of invested amount\n";
    return 0;
}

int run_oracle(const AppConfig& cfg, const std::optional<std::string>& data,
               const std::optional<std::string>& out) {
    const MarketSeries series = cfg.load_series(data);
    if (cfg.train.env.mode != ActionMode::kDiscrete)
        throw std::runtime_error("oracle: discrete mode required (set env.mode = discrete)");
    double total = 0.0;
    std::string lines;
    char buf[128];
    for (const auto& ep : series.episodes) {
        const OracleResult r = dp_oracle(ep, cfg.train.env);
        total += r.value;
        int y, m, d;
        civil_from_days(ep.date, y, m, d);
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d,%.17g\n", y, m, d, r.value);
        lines += buf;
    }
    if (out) {
        std::ofstream os(*out);
        if (!os) throw std::runtime_error("oracle: cannot open " + *out);
        os << "date,optimal_return\n" << lines;
    }
    std::cout << "oracle optimal total return " << total << " over " << series.episodes.size()
              << " episodes\n";
    return 0;
}

int run_report(const AppConfig& cfg, const std::optional<std::string>& data,
               const std::string& policy_path, const std::optional<std::string>& critic_path,
               const std::string& out_dir) {
    const MarketSeries series = cfg.load_series(data);
    const Policy policy = Policy::load(policy_path);
    const BacktestResult result = backtest(series, policy, cfg.train.env, cfg.backtest_seeds,
                                           cfg.backtest_greedy, cfg.train.threads);
    BoostedEnsemble critic;
    if (critic_path) critic = BoostedEnsemble::load(*critic_path);
    write_report(result, critic_path ? &critic : nullptr, out_dir);
    std::cout << "report written to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FX trading agent: natural actor-critic training and backtesting"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out = "out.csv";
    std::string out_dir = "out";
    std::string train_csv, valid_csv, valid_critic_csv, valid_actor_csv, policy_path;
    std::optional<std::string> data, baseline_kind, critic_path, oracle_out;
    std::optional<int> days;
    std::optional<std::uint64_t> seed;

    auto* synth = app.add_subcommand("synth", "generate a synthetic market CSV");
    synth->add_option("--config", config_path, "config file")->required();
    synth->add_option("--out", out, "output CSV path")->required();
    synth->add_option("--days", days, "override number of days");
    synth->add_option("--seed", seed, "override synthesis seed");

    auto* tr = app.add_subcommand("train", "train a policy");
    tr->add_option("--config", config_path)->required();
    tr->add_option("--train", train_csv, "training CSV")->required();
    tr->add_option("--valid", valid_csv, "validation CSV")->required();
    tr->add_option("--out-dir", out_dir, "output directory")->required();
    tr->add_option("--seed", seed, "override training seed");

    auto* sel = app.add_subcommand("select", "two-stage hyperparameter selection");
    sel->add_option("--config", config_path)->required();
    sel->add_option("--train", train_csv)->required();
    sel->add_option("--valid-critic", valid_critic_csv)->required();
    sel->add_option("--valid-actor", valid_actor_csv)->required();
    sel->add_option("--out", out, "best-config JSON path")->required();
    sel->add_option("--seed", seed);

    auto* bt = app.add_subcommand("backtest", "evaluate a policy or baseline");
    bt->add_option("--config", config_path)->required();
    bt->add_option("--data", data, "market CSV (defaults to the config market)");
    bt->add_option("--policy", policy_path, "policy JSON");
    bt->add_option("--baseline", baseline_kind, "buy_hold or sell_hold");
    bt->add_option("--out-dir", out_dir)->required();

    auto* orc = app.add_subcommand("oracle", "per-episode optimal returns (discrete DP)");
    orc->add_option("--config", config_path)->required();
    orc->add_option("--data", data);
    orc->add_option("--out", oracle_out, "per-episode CSV path");

    auto* rep = app.add_subcommand("report", "full CSV report bundle for a policy");
    rep->add_option("--config", config_path)->required();
    rep->add_option("--data", data);
    rep->add_option("--policy", policy_path)->required();
    rep->add_option("--critic", critic_path, "critic JSON for feature importances");
    rep->add_option("--out-dir", out_dir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const AppConfig cfg = AppConfig::load(config_path);
        if (synth->parsed()) return run_synth(cfg, out, days, seed);
        if (tr->parsed()) return run_train(cfg, train_csv, valid_csv, out_dir, seed);
        if (sel->parsed()) return run_select(cfg, train_csv, valid_critic_csv, valid_actor_csv, out, seed);
        if (bt->parsed())
            return run_backtest(cfg, data, policy_path.empty() ? std::nullopt : std::optional(policy_path),
                                baseline_kind, out_dir);
        if (orc->parsed()) return run_oracle(cfg, data, oracle_out);
        if (rep->parsed()) return run_report(cfg, data, policy_path, critic_path, out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
