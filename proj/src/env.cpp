#include "fnac/env.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fnac/parallel.hpp"

namespace fnac {

FeeSchedule FeeSchedule::constant_fee(double value) {
    FeeSchedule f;
    f.kind = FeeKind::kConstant;
    f.constant = value;
    f.validate();
    return f;
}

FeeSchedule FeeSchedule::half_identity() {
    FeeSchedule f;
    f.kind = FeeKind::kHalfIdentity;
    return f;
}

FeeSchedule FeeSchedule::step_default() {
    return step({0.75, 1.25}, {1.0, 1.75, 2.75});
}

FeeSchedule FeeSchedule::step(std::vector<double> thresholds, std::vector<double> values) {
    FeeSchedule f;
    f.kind = FeeKind::kStep;
    f.thresholds = std::move(thresholds);
    f.values = std::move(values);
    f.validate();
    return f;
}

void FeeSchedule::validate() const {
    switch (kind) {
        case FeeKind::kConstant:
            if (!(constant >= 0.0)) throw std::invalid_argument("fee: constant must be >= 0");
            return;
        case FeeKind::kHalfIdentity:
            return;
        case FeeKind::kStep: {
            if (values.size() != thresholds.size() + 1)
                throw std::invalid_argument("fee: step needs thresholds.size() + 1 values");
            for (std::size_t i = 0; i < thresholds.size(); ++i) {
                if (thresholds[i] < 0.0 || thresholds[i] > 2.0)
                    throw std::invalid_argument("fee: step thresholds must lie in [0, 2]");
                if (i > 0 && thresholds[i] <= thresholds[i - 1])
                    throw std::invalid_argument("fee: step thresholds must be strictly increasing");
            }
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (!(values[i] >= 0.0)) throw std::invalid_argument("fee: step values must be >= 0");
                if (i > 0 && values[i] < values[i - 1])
                    throw std::invalid_argument("fee: step values must be non-decreasing");
            }
            return;
        }
    }
    throw std::invalid_argument("fee: unknown kind");
}

double FeeSchedule::operator()(double order_size) const {
    const double x = std::abs(order_size);
    switch (kind) {
        case FeeKind::kConstant:
            return constant;
        case FeeKind::kHalfIdentity:
            return 0.5 * x;
        case FeeKind::kStep: {
            if (thresholds.empty()) return values.front();
            std::size_t band = x >= thresholds[0] ? 1 : 0;
            for (std::size_t j = 1; j < thresholds.size(); ++j)
                if (x > thresholds[j]) band = j + 1;
            return values[band];
        }
    }
    return 0.0;
}

std::string to_string(FeeKind kind) {
    switch (kind) {
        case FeeKind::kConstant: return "constant";
        case FeeKind::kHalfIdentity: return "half_identity";
        case FeeKind::kStep: return "step";
    }
    return "constant";
}

FeeKind fee_kind_from_string(const std::string& s) {
    if (s == "constant") return FeeKind::kConstant;
    if (s == "half_identity" || s == "half-identity") return FeeKind::kHalfIdentity;
    if (s == "step") return FeeKind::kStep;
    throw std::invalid_argument("unknown fee kind: " + s);
}

void EnvConfig::validate() const {
    if (persistence < 1) throw std::invalid_argument("env: persistence must be >= 1");
    fee.validate();
}

namespace {

void check_action(double a, ActionMode mode) {
    if (mode == ActionMode::kDiscrete) {
        if (a != -1.0 && a != 0.0 && a != 1.0)
            throw std::invalid_argument("invalid action: discrete mode allows only -1, 0, 1");
    } else if (!(a >= -1.0 && a <= 1.0)) {
        throw std::invalid_argument("invalid action: continuous mode allows [-1, 1]");
    }
}

}  // namespace

StepResult step(const Episode& episode, int t, double allocation, double action, const EnvConfig& cfg) {
    cfg.validate();
    if (t < kWarmupMinutes || t >= kEpisodeMinutes)
        throw std::out_of_range("step: decision minute out of range");
    check_action(action, cfg.mode);
    check_action(allocation, ActionMode::kContinuous);

    const int k_eff = std::min(cfg.persistence, kEpisodeMinutes - t);
    const double p_now = episode.bars[static_cast<std::size_t>(t)].mid;
    const double p_next = episode.bars[static_cast<std::size_t>(t + k_eff)].mid;
    const double sigma = episode.bars[static_cast<std::size_t>(t)].spread;
    const double order = std::abs(action - allocation);

    StepResult r;
    r.reward = action * (p_next - p_now) - cfg.fee(order) * sigma * order;
    r.next_t = t + k_eff;
    r.next_allocation = action;
    r.at_close = r.next_t == kEpisodeMinutes;
    return r;
}

double force_close(double allocation, double spread, const FeeSchedule& fee) {
    const double x = std::abs(allocation);
    return -fee(x) * spread * x;
}

std::vector<int> decision_minutes(const EnvConfig& cfg) {
    std::vector<int> ts;
    for (int t = kWarmupMinutes; t < kEpisodeMinutes; t += cfg.persistence) ts.push_back(t);
    return ts;
}

Dataset rollout_with(const MarketSeries& series, const EnvConfig& cfg, const ActionChooser& chooser,
                     std::uint64_t seed, int threads) {
    cfg.validate();
    const std::size_t n_eps = series.episodes.size();
    std::vector<std::vector<TransitionSample>> per_episode(n_eps);
    std::vector<double> returns(n_eps, 0.0);
    std::vector<double> refs(n_eps, 0.0);

    parallel_for(n_eps, threads, [&](std::size_t e) {
        const Episode& ep = series.episodes[e];
        rng::Stream stream(rng::stream_seed(seed, e));
        std::vector<TransitionSample>& rows = per_episode[e];

        double x = 0.0;  // warm-up holds Flat
        int t = kWarmupMinutes;
        refs[e] = ep.bars[static_cast<std::size_t>(t)].mid;
        double total = 0.0;
        for (;;) {
            TransitionSample row;
            row.state = build_state(ep, t, x);
            row.action = chooser(row.state, stream);
            const StepResult sr = step(ep, t, x, row.action, cfg);
            row.reward = sr.reward;
            row.next_state = build_state(ep, sr.next_t, sr.next_allocation);
            row.done = false;
            total += row.reward;
            rows.push_back(std::move(row));
            x = sr.next_allocation;
            t = sr.next_t;
            if (sr.at_close) break;
        }
        // forced close: one terminal record teaching the critic the exit cost
        TransitionSample close;
        close.state = build_state(ep, kEpisodeMinutes, x);
        close.action = 0.0;
        close.reward = force_close(x, ep.bars[kEpisodeMinutes].spread, cfg.fee);
        close.next_state = build_state(ep, kEpisodeMinutes, 0.0);
        close.done = true;
        total += close.reward;
        rows.push_back(std::move(close));
        returns[e] = total;
    });

    Dataset out;
    for (std::size_t e = 0; e < n_eps; ++e) {
        out.episode_begin.push_back(out.samples.size());
        out.episode_returns.push_back(returns[e]);
        out.reference_prices.push_back(refs[e]);
        for (auto& row : per_episode[e]) {
            out.dates.push_back(series.episodes[e].date);
            out.samples.push_back(std::move(row));
        }
    }
    return out;
}

Dataset rollout(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                std::uint64_t seed, bool greedy, int threads) {
    if (policy.mode() != cfg.mode)
        throw std::invalid_argument("rollout: policy mode does not match env mode");
    ActionChooser chooser;
    if (greedy) {
        chooser = [&policy](const TradingState& s, rng::Stream&) { return policy.greedy(s); };
    } else {
        chooser = [&policy](const TradingState& s, rng::Stream& stream) { return policy.sample(s, stream); };
    }
    return rollout_with(series, cfg, chooser, seed, threads);
}

void write_dataset_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    out << "date";
    for (int i = 0; i < kDeltaWindow; ++i) out << ",d1_" << i;
    out << ",spread,weekday,minute,allocation,action,reward,done\n";
    char buf[64];
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const TransitionSample& s = dataset.samples[i];
        out << dataset.dates[i];
        const auto f = s.state.features();
        for (double v : f) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g,%.17g,%d", s.action, s.reward, s.done ? 1 : 0);
        out << buf << '\n';
    }
}

}  // namespace fnac
