#include "fnac/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fnac {

namespace {

std::vector<EpisodePath> paths_from_dataset(const Dataset& d) {
    std::vector<EpisodePath> paths(d.n_episodes());
    for (std::size_t e = 0; e < d.n_episodes(); ++e) {
        const std::size_t begin = d.episode_begin[e];
        const std::size_t end = e + 1 < d.n_episodes() ? d.episode_begin[e + 1] : d.size();
        EpisodePath& p = paths[e];
        p.date = d.dates[begin];
        p.episode_return = d.episode_returns[e];
        p.reference_price = d.reference_prices[e];
        for (std::size_t i = begin; i < end; ++i) {
            const TransitionSample& s = d.samples[i];
            p.rewards.push_back(s.reward);
            p.allocations.push_back(s.done ? 0.0 : s.action);
            p.orders.push_back(std::abs(s.action - s.state.allocation));
        }
    }
    return paths;
}

BacktestResult aggregate(const std::vector<Dataset>& runs) {
    BacktestResult out;
    const Dataset& first = runs.front();
    const std::size_t n_eps = first.n_episodes();
    for (std::size_t e = 0; e < n_eps; ++e)
        out.dates.push_back(first.dates[first.episode_begin[e]]);

    // per-seed cumulative percent curves
    std::vector<std::vector<double>> curves(runs.size(), std::vector<double>(n_eps, 0.0));
    for (std::size_t r = 0; r < runs.size(); ++r) {
        double acc = 0.0;
        for (std::size_t e = 0; e < n_eps; ++e) {
            acc += 100.0 * runs[r].episode_returns[e] / runs[r].reference_prices[e];
            curves[r][e] = acc;
        }
    }
    out.cumulative_mean.resize(n_eps);
    out.cumulative_std.resize(n_eps);
    for (std::size_t e = 0; e < n_eps; ++e) {
        double mean = 0.0;
        for (const auto& c : curves) mean += c[e];
        mean /= static_cast<double>(curves.size());
        double var = 0.0;
        for (const auto& c : curves) var += (c[e] - mean) * (c[e] - mean);
        var /= static_cast<double>(curves.size());
        out.cumulative_mean[e] = mean;
        out.cumulative_std[e] = std::sqrt(var);
    }

    double total = 0.0;
    for (const auto& run : runs)
        for (double r : run.episode_returns) total += r;
    out.mean_episode_return = total / static_cast<double>(runs.size() * n_eps);

    double mean_r = 0.0;
    for (const auto& s : first.samples) mean_r += s.reward;
    mean_r /= static_cast<double>(first.size());
    double var_r = 0.0;
    for (const auto& s : first.samples) var_r += (s.reward - mean_r) * (s.reward - mean_r);
    out.reward_std = std::sqrt(var_r / static_cast<double>(first.size()));

    out.paths = paths_from_dataset(first);
    return out;
}

}  // namespace

BacktestResult backtest(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                        const std::vector<std::uint64_t>& seeds, bool greedy, int threads) {
    if (series.episodes.empty()) throw std::invalid_argument("backtest: empty series");
    std::vector<std::uint64_t> use_seeds = seeds.empty() ? std::vector<std::uint64_t>{0} : seeds;
    std::vector<Dataset> runs;
    runs.reserve(use_seeds.size());
    for (std::uint64_t s : use_seeds) runs.push_back(rollout(series, policy, cfg, s, greedy, threads));
    return aggregate(runs);
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "buy_hold" || s == "buy-hold") return BaselineKind::kBuyHold;
    if (s == "sell_hold" || s == "sell-hold") return BaselineKind::kSellHold;
    throw std::invalid_argument("unknown baseline: " + s);
}

BacktestResult baseline(BaselineKind kind, const MarketSeries& series, const EnvConfig& cfg,
                        int threads) {
    if (series.episodes.empty()) throw std::invalid_argument("baseline: empty series");
    const double target = kind == BaselineKind::kBuyHold ? 1.0 : -1.0;
    const ActionChooser chooser = [target](const TradingState&, rng::Stream&) { return target; };
    std::vector<Dataset> runs;
    runs.push_back(rollout_with(series, cfg, chooser, 0, threads));
    return aggregate(runs);
}

OracleResult dp_oracle(const Episode& episode, const EnvConfig& cfg) {
    cfg.validate();
    if (cfg.mode != ActionMode::kContinuous && cfg.mode != ActionMode::kDiscrete)
        throw std::invalid_argument("dp_oracle: bad mode");
    if (cfg.mode == ActionMode::kContinuous)
        throw std::invalid_argument("dp_oracle: continuous mode unsupported");

    const std::vector<int> minutes = decision_minutes(cfg);
    const std::size_t horizon = minutes.size();
    // candidate order implements the tie-break: Flat first, then the smaller
    // exposure change among +/-1 never matters for value, so a fixed order does
    constexpr double kActions[3] = {0.0, -1.0, 1.0};
    constexpr double kAllocations[3] = {-1.0, 0.0, 1.0};

    // value[x] = best achievable return from the current decision onward when
    // holding allocation x; seeded with the forced-close cost
    std::vector<std::array<double, 3>> value(horizon + 1);
    std::vector<std::array<int, 3>> choice(horizon);
    const double close_spread = episode.bars[kEpisodeMinutes].spread;
    for (int xi = 0; xi < 3; ++xi)
        value[horizon][static_cast<std::size_t>(xi)] = force_close(kAllocations[xi], close_spread, cfg.fee);

    for (std::size_t i = horizon; i-- > 0;) {
        for (int xi = 0; xi < 3; ++xi) {
            double best = -std::numeric_limits<double>::infinity();
            int best_a = 0;
            for (int ai = 0; ai < 3; ++ai) {
                const double a = kActions[ai];
                const StepResult sr = step(episode, minutes[i], kAllocations[xi], a, cfg);
                const int next_xi = a < 0.0 ? 0 : (a > 0.0 ? 2 : 1);
                const double total = sr.reward + value[i + 1][static_cast<std::size_t>(next_xi)];
                if (total > best) {
                    best = total;
                    best_a = ai;
                }
            }
            value[i][static_cast<std::size_t>(xi)] = best;
            choice[i][static_cast<std::size_t>(xi)] = best_a;
        }
    }

    OracleResult out;
    out.value = value[0][1];  // episodes start Flat
    int xi = 1;
    for (std::size_t i = 0; i < horizon; ++i) {
        const int ai = choice[i][static_cast<std::size_t>(xi)];
        out.allocations.push_back(kActions[ai]);
        xi = kActions[ai] < 0.0 ? 0 : (kActions[ai] > 0.0 ? 2 : 1);
    }
    return out;
}

namespace {

void write_lines(const std::string& path, const std::string& header,
                 const std::vector<std::string>& lines) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot open " + path);
    out << header << '\n';
    for (const auto& l : lines) out << l << '\n';
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string date_string(std::int32_t days) {
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

}  // namespace

void write_report(const BacktestResult& result, const BoostedEnsemble* critic,
                  const std::string& out_dir) {
    if (result.paths.empty()) throw std::invalid_argument("report: empty backtest result");
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);

    {
        std::vector<std::string> lines;
        for (std::size_t e = 0; e < result.dates.size(); ++e)
            lines.push_back(date_string(result.dates[e]) + "," + fmt(result.cumulative_mean[e]) + "," +
                            fmt(result.cumulative_std[e]));
        write_lines((dir / "cumulative_returns.csv").string(), "date,mean,std", lines);
    }

    {
        // day x decision grid of allocations
        std::string header = "date";
        const std::size_t cols = result.paths.front().allocations.size();
        for (std::size_t c = 0; c < cols; ++c) header += ",a" + std::to_string(c);
        std::vector<std::string> lines;
        for (const auto& p : result.paths) {
            std::string line = date_string(p.date);
            for (double a : p.allocations) line += "," + fmt(a);
            lines.push_back(std::move(line));
        }
        write_lines((dir / "allocation_heatmap.csv").string(), header, lines);
    }

    {
        // order-size histogram over [0, 2]
        constexpr int kBins = 40;
        std::array<std::size_t, kBins> counts{};
        for (const auto& p : result.paths) {
            for (double o : p.orders) {
                int b = static_cast<int>(o / 2.0 * kBins);
                b = std::clamp(b, 0, kBins - 1);
                counts[static_cast<std::size_t>(b)] += 1;
            }
        }
        std::vector<std::string> lines;
        for (int b = 0; b < kBins; ++b)
            lines.push_back(fmt(2.0 * b / kBins) + "," + fmt(2.0 * (b + 1) / kBins) + "," +
                            std::to_string(counts[static_cast<std::size_t>(b)]));
        write_lines((dir / "order_sizes.csv").string(), "bin_lo,bin_hi,count", lines);
    }

    {
        // per-step reward histogram; edges derived from the observed range
        constexpr int kBins = 50;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& p : result.paths)
            for (double r : p.rewards) {
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        if (!(hi > lo)) hi = lo + 1.0;
        std::array<std::size_t, kBins> counts{};
        for (const auto& p : result.paths)
            for (double r : p.rewards) {
                int b = static_cast<int>((r - lo) / (hi - lo) * kBins);
                b = std::clamp(b, 0, kBins - 1);
                counts[static_cast<std::size_t>(b)] += 1;
            }
        std::vector<std::string> lines;
        for (int b = 0; b < kBins; ++b)
            lines.push_back(fmt(lo + (hi - lo) * b / kBins) + "," + fmt(lo + (hi - lo) * (b + 1) / kBins) +
                            "," + std::to_string(counts[static_cast<std::size_t>(b)]));
        write_lines((dir / "reward_hist.csv").string(), "bin_lo,bin_hi,count", lines);
    }

    if (critic != nullptr && !critic->empty()) {
        const FeatureImportance imp = critic->feature_importance();
        std::vector<std::string> lines;
        for (int f = 0; f < kStateDim; ++f) {
            std::string name;
            if (f < kDeltaWindow)
                name = "d1_" + std::to_string(f);
            else if (f == kFeatSpread)
                name = "spread";
            else if (f == kFeatWeekday)
                name = "weekday";
            else if (f == kFeatMinute)
                name = "minute";
            else
                name = "allocation";
            lines.push_back(name + "," + fmt(imp.gain[static_cast<std::size_t>(f)]));
        }
        write_lines((dir / "feature_importance.csv").string(), "feature,importance", lines);
    }
}

}  // namespace fnac
