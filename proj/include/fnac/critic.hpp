#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fnac/env.hpp"
#include "fnac/market_data.hpp"

#include <json.hpp>

namespace fnac {

struct CriticConfig {
    int rounds = 50;             // boosting rounds
    int trees_per_round = 1;     // bagged width per round
    double min_child_weight = 1; // minimum samples per leaf (hessian = 1 per sample)
    int max_depth = 4;
    double shrinkage = 0.1;      // eta
    double subsample = 1.0;      // row-sampling fraction per tree
    int sweeps = 3;              // Bellman target refresh passes per fit
    double min_split_gain = 0.0; // gamma-like split penalty; untuned default
    double l2_leaf = 0.0;        // lambda-like leaf shrinkage; untuned default

    void validate() const;
};

struct TreeNode {
    int feature = -1;        // split feature; -1 marks a leaf
    double threshold = 0.0;  // go left when feature value < threshold
    double value = 0.0;      // leaf prediction
    double gain = 0.0;       // squared-error reduction achieved by the split
    int left = -1;
    int right = -1;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    double weight = 1.0;          // shrinkage / round width

    double predict(std::span<const double> features) const;
};

struct FeatureImportance {
    std::array<double, kStateDim> gain{};  // normalized; sums to 1 unless degenerate
    bool degenerate = false;               // no splits anywhere in the ensemble
};

// Additive tree ensemble: prediction = base + sum_i weight_i * tree_i(x).
class BoostedEnsemble {
public:
    BoostedEnsemble() = default;
    BoostedEnsemble(double base, double shrinkage, std::vector<RegressionTree> trees)
        : base_(base), shrinkage_(shrinkage), trees_(std::move(trees)) {}

    double base() const { return base_; }
    double shrinkage() const { return shrinkage_; }
    const std::vector<RegressionTree>& trees() const { return trees_; }
    bool empty() const { return trees_.empty(); }

    double predict_features(std::span<const double> features) const;
    double predict(const TradingState& state) const;

    FeatureImportance feature_importance() const;

    nlohmann::json to_json() const;
    static BoostedEnsemble from_json(const nlohmann::json& j);
    void save(const std::string& path) const;
    static BoostedEnsemble load(const std::string& path);

private:
    double base_ = 0.0;
    double shrinkage_ = 1.0;
    std::vector<RegressionTree> trees_;
};

struct FitDiagnostics {
    double train_mse = 0.0;           // Bellman residual MSE of the returned ensemble
    std::vector<double> round_mse;    // regression MSE after each round of the last sweep
};

// Plain boosted regression on (features, targets); building block of the
// Bellman iteration and directly testable against per-leaf means.
BoostedEnsemble fit_regression(const std::vector<std::array<double, kStateDim>>& features,
                               const std::vector<double>& targets, const CriticConfig& cfg,
                               std::uint64_t seed, std::vector<double>* round_mse = nullptr);

// Fits V to the squared Bellman residual of the dataset by iterated
// regression: targets y = r + V_prev(s') * (1 - done) are refreshed for
// cfg.sweeps passes (gamma = 1 throughout).
BoostedEnsemble fit_value(const Dataset& dataset, const BoostedEnsemble* prev, const CriticConfig& cfg,
                          std::uint64_t seed, FitDiagnostics* diagnostics = nullptr);

}  // namespace fnac
