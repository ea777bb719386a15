#include "fnac/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fnac {

std::string to_string(RiskKind kind) {
    switch (kind) {
        case RiskKind::kNeutral: return "neutral";
        case RiskKind::kRcvar: return "rcvar";
        case RiskKind::kMeanVolatility: return "mean_volatility";
    }
    return "neutral";
}

RiskKind risk_kind_from_string(const std::string& s) {
    if (s == "neutral") return RiskKind::kNeutral;
    if (s == "rcvar") return RiskKind::kRcvar;
    if (s == "mean_volatility" || s == "mean-volatility") return RiskKind::kMeanVolatility;
    throw std::invalid_argument("unknown risk kind: " + s);
}

void RiskSpec::validate() const {
    if (kind == RiskKind::kRcvar && !(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("risk: rcvar alpha must lie in (0, 1]");
    if (kind == RiskKind::kMeanVolatility && lambda < 0.0)
        throw std::invalid_argument("risk: lambda must be >= 0");
}

double estimate_rho(const Dataset& dataset, double alpha) {
    if (dataset.size() == 0) throw std::invalid_argument("estimate_rho: empty dataset");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("estimate_rho: alpha in (0, 1]");
    std::vector<double> rewards;
    rewards.reserve(dataset.size());
    for (const auto& s : dataset.samples) rewards.push_back(s.reward);
    std::sort(rewards.begin(), rewards.end());
    const double h = alpha * static_cast<double>(rewards.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= rewards.size()) return rewards.back();
    return rewards[lo] + (h - static_cast<double>(lo)) * (rewards[lo + 1] - rewards[lo]);
}

double estimate_J(const Dataset& dataset) {
    if (dataset.size() == 0) throw std::invalid_argument("estimate_J: empty dataset");
    // summed in sorted order so the estimate is independent of sample order
    std::vector<double> rewards;
    rewards.reserve(dataset.size());
    for (const auto& s : dataset.samples) rewards.push_back(s.reward);
    std::sort(rewards.begin(), rewards.end());
    double sum = 0.0;
    for (double r : rewards) sum += r;
    return sum / static_cast<double>(dataset.size());
}

double transform_rcvar(double reward, double rho, double alpha) {
    return rho - std::max(rho - reward, 0.0) / alpha;
}

double transform_mean_volatility(double reward, double j, double lambda) {
    const double dev = reward - j;
    return reward - lambda * dev * dev;
}

RiskApplication apply_risk(Dataset& dataset, const RiskSpec& spec) {
    spec.validate();
    RiskApplication app;
    if (spec.kind == RiskKind::kNeutral) return app;
    app.active = true;

    if (spec.kind == RiskKind::kRcvar) {
        app.rho = spec.rho_fixed ? spec.rho : estimate_rho(dataset, spec.alpha);
        for (auto& s : dataset.samples) s.reward = transform_rcvar(s.reward, app.rho, spec.alpha);
    } else {
        app.j = estimate_J(dataset);
        for (auto& s : dataset.samples)
            s.reward = transform_mean_volatility(s.reward, app.j, spec.lambda);
    }

    for (std::size_t e = 0; e < dataset.n_episodes(); ++e) {
        const std::size_t begin = dataset.episode_begin[e];
        const std::size_t end = e + 1 < dataset.n_episodes() ? dataset.episode_begin[e + 1] : dataset.size();
        double total = 0.0;
        for (std::size_t i = begin; i < end; ++i) total += dataset.samples[i].reward;
        dataset.episode_returns[e] = total;
    }
    return app;
}

}  // namespace fnac
