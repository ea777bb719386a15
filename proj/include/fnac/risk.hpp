#pragma once

#include <string>

#include "fnac/env.hpp"

namespace fnac {

enum class RiskKind { kNeutral, kRcvar, kMeanVolatility };

std::string to_string(RiskKind kind);
RiskKind risk_kind_from_string(const std::string& s);

// Reward-based risk transformation applied to the batch dataset before each
// critic fit. rho and J are re-estimated once per training iteration from the
// freshly collected samples, then frozen for that iteration.
struct RiskSpec {
    RiskKind kind = RiskKind::kNeutral;
    double alpha = 0.25;     // rcvar tail level, (0, 1]
    bool rho_fixed = false;  // sweep rho directly instead of the alpha-quantile
    double rho = 0.0;        // used when rho_fixed
    double lambda = 0.0;     // mean-volatility penalty, >= 0

    void validate() const;
};

// Empirical alpha-quantile (linear interpolation between order statistics) of
// the per-step rewards; gamma = 1 makes the occupancy weighting uniform.
double estimate_rho(const Dataset& dataset, double alpha);

// Mean per-step reward.
double estimate_J(const Dataset& dataset);

// R_alpha = rho - (1/alpha) * max(rho - r, 0); caps rewards at rho and scales
// up shortfalls below it.
double transform_rcvar(double reward, double rho, double alpha);

// R_lambda = r - lambda * (r - J)^2.
double transform_mean_volatility(double reward, double j, double lambda);

struct RiskApplication {
    bool active = false;
    double rho = 0.0;  // RCVaR threshold used (NaN-free only when active)
    double j = 0.0;    // mean-volatility reference return
};

// Transforms dataset rewards in place per spec; episode_returns are updated
// to stay consistent. Neutral kind leaves the dataset untouched.
RiskApplication apply_risk(Dataset& dataset, const RiskSpec& spec);

}  // namespace fnac
