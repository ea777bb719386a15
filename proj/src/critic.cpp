#include "fnac/critic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fnac/random.hpp"

namespace fnac {

void CriticConfig::validate() const {
    if (rounds < 1) throw std::invalid_argument("critic: rounds must be >= 1");
    if (trees_per_round < 1) throw std::invalid_argument("critic: trees_per_round must be >= 1");
    if (!(min_child_weight >= 1.0)) throw std::invalid_argument("critic: min_child_weight must be >= 1");
    if (max_depth < 0) throw std::invalid_argument("critic: max_depth must be >= 0");
    if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw std::invalid_argument("critic: shrinkage in (0, 1]");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw std::invalid_argument("critic: subsample in (0, 1]");
    if (sweeps < 1) throw std::invalid_argument("critic: sweeps must be >= 1");
    if (min_split_gain < 0.0) throw std::invalid_argument("critic: min_split_gain must be >= 0");
    if (l2_leaf < 0.0) throw std::invalid_argument("critic: l2_leaf must be >= 0");
}

double RegressionTree::predict(std::span<const double> features) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = features[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

double BoostedEnsemble::predict_features(std::span<const double> features) const {
    double v = base_;
    for (const auto& tree : trees_) v += tree.weight * tree.predict(features);
    return v;
}

double BoostedEnsemble::predict(const TradingState& state) const {
    const auto f = state.features();
    return predict_features(f);
}

FeatureImportance BoostedEnsemble::feature_importance() const {
    if (trees_.empty()) throw std::invalid_argument("feature_importance: empty ensemble");
    FeatureImportance imp;
    double total = 0.0;
    for (const auto& tree : trees_) {
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            imp.gain[static_cast<std::size_t>(node.feature)] += node.gain;
            total += node.gain;
        }
    }
    if (total <= 0.0) {
        imp.gain.fill(0.0);
        imp.degenerate = true;
        return imp;
    }
    for (double& g : imp.gain) g /= total;
    return imp;
}

namespace {

// Sum in ascending value order; makes fitted models independent of the
// incoming sample order.
double canonical_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

struct TreeBuilder {
    const std::vector<std::array<double, kStateDim>>& features;
    const std::vector<double>& targets;
    const CriticConfig& cfg;
    std::vector<TreeNode> nodes;

    double leaf_value(const std::vector<int>& idx) const {
        std::vector<double> ys;
        ys.reserve(idx.size());
        for (int i : idx) ys.push_back(targets[static_cast<std::size_t>(i)]);
        const double sum = canonical_sum(std::move(ys));
        return sum / (static_cast<double>(idx.size()) + cfg.l2_leaf);
    }

    int build(const std::vector<int>& idx, int depth) {
        const int node_id = static_cast<int>(nodes.size());
        nodes.emplace_back();

        const std::size_t n = idx.size();
        const double min_count = cfg.min_child_weight;
        if (depth >= cfg.max_depth || static_cast<double>(n) < 2.0 * min_count) {
            nodes[static_cast<std::size_t>(node_id)].value = leaf_value(idx);
            return node_id;
        }

        // exact greedy split search; ties resolve to the lowest feature
        // index, then the lowest threshold (strict improvement required)
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_gain = 0.0;

        std::vector<std::pair<double, double>> col(n);  // (value, target), canonical order
        for (int f = 0; f < kStateDim; ++f) {
            for (std::size_t i = 0; i < n; ++i) {
                const int s = idx[i];
                col[i] = {features[static_cast<std::size_t>(s)][static_cast<std::size_t>(f)],
                          targets[static_cast<std::size_t>(s)]};
            }
            std::sort(col.begin(), col.end());

            double total_sum = 0.0, total_sq = 0.0;
            for (const auto& [v, y] : col) {
                total_sum += y;
                total_sq += y * y;
            }
            const double parent_sse = std::max(0.0, total_sq - total_sum * total_sum / static_cast<double>(n));
            if (parent_sse <= 0.0) continue;

            double left_sum = 0.0, left_sq = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += col[i].second;
                left_sq += col[i].second * col[i].second;
                if (col[i].first == col[i + 1].first) continue;  // thresholds between distinct values only
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(n - i - 1);
                if (nl < min_count || nr < min_count) continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse_l = std::max(0.0, left_sq - left_sum * left_sum / nl);
                const double sse_r = std::max(0.0, right_sq - right_sum * right_sum / nr);
                const double gain = parent_sse - sse_l - sse_r;
                if (gain > best_gain && gain > cfg.min_split_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = 0.5 * (col[i].first + col[i + 1].first);
                }
            }
        }

        if (best_feature < 0) {
            nodes[static_cast<std::size_t>(node_id)].value = leaf_value(idx);
            return node_id;
        }

        std::vector<int> left_idx, right_idx;
        left_idx.reserve(n);
        right_idx.reserve(n);
        for (int s : idx) {
            if (features[static_cast<std::size_t>(s)][static_cast<std::size_t>(best_feature)] < best_threshold)
                left_idx.push_back(s);
            else
                right_idx.push_back(s);
        }

        const int left = build(left_idx, depth + 1);
        const int right = build(right_idx, depth + 1);
        TreeNode& node = nodes[static_cast<std::size_t>(node_id)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.gain = best_gain;
        node.left = left;
        node.right = right;
        return node_id;
    }
};

RegressionTree build_tree(const std::vector<std::array<double, kStateDim>>& features,
                          const std::vector<double>& targets, const std::vector<int>& idx,
                          const CriticConfig& cfg) {
    TreeBuilder builder{features, targets, cfg, {}};
    builder.build(idx, 0);
    RegressionTree tree;
    tree.nodes = std::move(builder.nodes);
    return tree;
}

}  // namespace

BoostedEnsemble fit_regression(const std::vector<std::array<double, kStateDim>>& features,
                               const std::vector<double>& targets, const CriticConfig& cfg,
                               std::uint64_t seed, std::vector<double>* round_mse) {
    cfg.validate();
    const std::size_t n = features.size();
    if (n == 0) throw std::invalid_argument("fit_regression: empty dataset");
    if (targets.size() != n) throw std::invalid_argument("fit_regression: feature/target size mismatch");

    const double base = canonical_sum(targets) / static_cast<double>(n);
    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = targets[i] - base;

    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(cfg.rounds * cfg.trees_per_round));
    std::vector<int> all_idx(n);
    std::iota(all_idx.begin(), all_idx.end(), 0);

    if (round_mse) round_mse->clear();
    for (int round = 0; round < cfg.rounds; ++round) {
        std::vector<double> round_pred(n, 0.0);
        const double weight = cfg.shrinkage / static_cast<double>(cfg.trees_per_round);
        for (int b = 0; b < cfg.trees_per_round; ++b) {
            std::vector<int> idx;
            if (cfg.subsample >= 1.0) {
                idx = all_idx;
            } else {
                rng::Stream stream(
                    rng::stream_seed(seed, static_cast<std::uint64_t>(round) * 1000003ULL + static_cast<std::uint64_t>(b)));
                idx.reserve(n);
                for (std::size_t i = 0; i < n; ++i)
                    if (stream.uniform() < cfg.subsample) idx.push_back(static_cast<int>(i));
                if (idx.empty()) idx = all_idx;
            }
            RegressionTree tree = build_tree(features, residual, idx, cfg);
            tree.weight = weight;
            for (std::size_t i = 0; i < n; ++i) round_pred[i] += weight * tree.predict(features[i]);
            trees.push_back(std::move(tree));
        }
        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] -= round_pred[i];
            mse += residual[i] * residual[i];
        }
        if (round_mse) round_mse->push_back(mse / static_cast<double>(n));
    }
    return BoostedEnsemble(base, cfg.shrinkage, std::move(trees));
}

BoostedEnsemble fit_value(const Dataset& dataset, const BoostedEnsemble* prev, const CriticConfig& cfg,
                          std::uint64_t seed, FitDiagnostics* diagnostics) {
    cfg.validate();
    const std::size_t n = dataset.size();
    if (n == 0) throw std::invalid_argument("fit_value: empty dataset");

    std::vector<std::array<double, kStateDim>> features(n);
    std::vector<std::array<double, kStateDim>> next_features(n);
    for (std::size_t i = 0; i < n; ++i) {
        features[i] = dataset.samples[i].state.features();
        next_features[i] = dataset.samples[i].next_state.features();
        for (int f = 0; f < kStateDim; ++f) {
            if (!std::isfinite(features[i][static_cast<std::size_t>(f)]))
                throw std::invalid_argument("fit_value: non-finite feature " + std::to_string(f) +
                                            " in sample " + std::to_string(i));
        }
        if (!std::isfinite(dataset.samples[i].reward))
            throw std::invalid_argument("fit_value: non-finite reward in sample " + std::to_string(i));
    }

    BoostedEnsemble model;
    std::vector<double> targets(n);
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        const BoostedEnsemble* bootstrap = sweep == 0 ? prev : &model;
        for (std::size_t i = 0; i < n; ++i) {
            const TransitionSample& s = dataset.samples[i];
            double v_next = 0.0;
            if (!s.done && bootstrap != nullptr && !bootstrap->empty())
                v_next = bootstrap->predict_features(next_features[i]);
            targets[i] = s.reward + v_next;  // gamma = 1, undiscounted episodic setting
        }
        std::vector<double>* mse_sink = (diagnostics && sweep == cfg.sweeps - 1) ? &diagnostics->round_mse : nullptr;
        model = fit_regression(features, targets, cfg, rng::stream_seed(seed, static_cast<std::uint64_t>(sweep)),
                               mse_sink);
    }

    if (diagnostics) {
        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const TransitionSample& s = dataset.samples[i];
            const double v_next = s.done ? 0.0 : model.predict_features(next_features[i]);
            const double residual = s.reward + v_next - model.predict_features(features[i]);
            mse += residual * residual;
        }
        diagnostics->train_mse = mse / static_cast<double>(n);
    }
    return model;
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, int i) {
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    nlohmann::json j;
    if (n.is_leaf()) {
        j["value"] = n.value;
        return j;
    }
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["gain"] = n.gain;
    j["left"] = node_to_json(nodes, n.left);
    j["right"] = node_to_json(nodes, n.right);
    return j;
}

int node_from_json(const nlohmann::json& j, std::vector<TreeNode>& nodes) {
    const int id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    if (j.contains("value")) {
        nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || feature >= kStateDim)
        throw std::invalid_argument("critic json: split feature index out of range");
    const double threshold = j.at("threshold").get<double>();
    const double gain = j.value("gain", 0.0);
    const int left = node_from_json(j.at("left"), nodes);
    const int right = node_from_json(j.at("right"), nodes);
    TreeNode& n = nodes[static_cast<std::size_t>(id)];
    n.feature = feature;
    n.threshold = threshold;
    n.gain = gain;
    n.left = left;
    n.right = right;
    return id;
}

}  // namespace

nlohmann::json BoostedEnsemble::to_json() const {
    nlohmann::json j;
    j["base"] = base_;
    j["shrinkage"] = shrinkage_;
    j["trees"] = nlohmann::json::array();
    for (const auto& tree : trees_) {
        nlohmann::json t;
        t["weight"] = tree.weight;
        t["root"] = node_to_json(tree.nodes, 0);
        j["trees"].push_back(std::move(t));
    }
    return j;
}

BoostedEnsemble BoostedEnsemble::from_json(const nlohmann::json& j) {
    std::vector<RegressionTree> trees;
    for (const auto& t : j.at("trees")) {
        RegressionTree tree;
        tree.weight = t.at("weight").get<double>();
        node_from_json(t.at("root"), tree.nodes);
        trees.push_back(std::move(tree));
    }
    return BoostedEnsemble(j.at("base").get<double>(), j.at("shrinkage").get<double>(), std::move(trees));
}

void BoostedEnsemble::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("critic save: cannot open " + path);
    out << to_json().dump(2) << '\n';
}

BoostedEnsemble BoostedEnsemble::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("critic load: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace fnac
