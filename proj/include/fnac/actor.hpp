#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fnac/market_data.hpp"
#include "fnac/random.hpp"

#include <json.hpp>

namespace fnac {

enum class ActionMode { kDiscrete, kContinuous };

std::string to_string(ActionMode mode);
ActionMode action_mode_from_string(const std::string& s);

// Network shape plus the fixed input scaling baked into the policy. The
// scaling keeps tanh pre-activations in a trainable range without any
// data-dependent normalization state.
struct PolicyArch {
    ActionMode mode = ActionMode::kDiscrete;
    std::vector<int> hidden;       // one layer (discrete) or two (continuous)
    double s_min = 1e-2;           // lower bound of the truncated-normal std
    std::array<double, kStateDim> input_scale{};

    static PolicyArch discrete(int hidden_units = 32);
    static PolicyArch continuous(int hidden1 = 32, int hidden2 = 32);

    int output_dim() const { return mode == ActionMode::kDiscrete ? 3 : 2; }
    int param_count() const;
    void validate() const;
};

// Distribution over actions at one state: a 3-point mass for the discrete
// policy, a normal truncated to [-1, 1] for the continuous one.
struct PolicyOutput {
    std::array<double, 3> probs{};  // over actions {-1, 0, 1}
    double mean = 0.0;
    double stddev = 0.0;
};

// Actions produced by inverse-CDF sampling are clamped this far inside the
// boundary before any log-density or gradient evaluation.
constexpr double kActionBoundaryEps = 1e-9;

// Feed-forward stochastic policy with flat parameter vector theta.
// Immutable value type: updates return a new Policy.
class Policy {
public:
    explicit Policy(PolicyArch arch);  // theta = 0
    Policy(PolicyArch arch, Eigen::VectorXd theta);

    // fan-in-scaled uniform weights, zero biases
    static Policy initialized(PolicyArch arch, std::uint64_t seed);

    const PolicyArch& arch() const { return arch_; }
    ActionMode mode() const { return arch_.mode; }
    const Eigen::VectorXd& theta() const { return theta_; }
    int param_count() const { return static_cast<int>(theta_.size()); }

    PolicyOutput forward(const TradingState& state) const;
    double log_prob(const TradingState& state, double action) const;
    Eigen::VectorXd grad_log_prob(const TradingState& state, double action) const;
    double sample(const TradingState& state, rng::Stream& stream) const;

    // argmax-probability action (discrete) or truncated-normal mean (continuous)
    double greedy(const TradingState& state) const;

    Policy natural_update(const Eigen::VectorXd& w, double alpha) const;

    nlohmann::json to_json() const;
    static Policy from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static Policy load(const std::string& path);

private:
    PolicyArch arch_;
    Eigen::VectorXd theta_;
};

// Mean of a normal(mu, sigma^2) truncated to [lo, hi].
double truncated_normal_mean(double mu, double sigma, double lo, double hi);

}  // namespace fnac
