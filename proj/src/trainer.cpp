#include "fnac/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fnac {

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("train: iterations must be >= 1");
    if (!(alpha >= 0.0)) throw std::invalid_argument("train: alpha must be >= 0");
    if (eval_every < 1) throw std::invalid_argument("train: eval_every must be >= 1");
    if (early_stop_patience < 1) throw std::invalid_argument("train: early_stop_patience must be >= 1");
    env.validate();
    risk.validate();
    critic.validate();
    if (ridge < 0.0) throw std::invalid_argument("train: ridge must be >= 0");
}

PolicyArch TrainConfig::make_arch() const {
    PolicyArch arch;
    if (env.mode == ActionMode::kDiscrete) {
        arch = hidden.empty() ? PolicyArch::discrete() : PolicyArch::discrete(hidden[0]);
        if (hidden.size() > 1) throw std::invalid_argument("train: discrete policy takes one hidden layer");
    } else {
        if (hidden.empty())
            arch = PolicyArch::continuous();
        else if (hidden.size() == 2)
            arch = PolicyArch::continuous(hidden[0], hidden[1]);
        else
            throw std::invalid_argument("train: continuous policy takes two hidden layers");
        arch.s_min = s_min;
    }
    return arch;
}

double evaluate_mean_return(const MarketSeries& series, const Policy& policy, const EnvConfig& cfg,
                            int threads) {
    const Dataset d = rollout(series, policy, cfg, 0, /*greedy=*/true, threads);
    if (d.n_episodes() == 0) return 0.0;
    double sum = 0.0;
    for (double r : d.episode_returns) sum += r;
    return sum / static_cast<double>(d.n_episodes());
}

void TrainReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("train report: cannot open " + path);
    out << "iteration,train_return,valid_return,w_norm,critic_mse,rho,j\n";
    char buf[256];
    for (const auto& r : records) {
        auto field = [&](double v) {
            if (std::isnan(v)) return std::string();
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            return std::string(buf);
        };
        out << r.iteration << ',' << field(r.train_return) << ',' << field(r.valid_return) << ','
            << field(r.w_norm) << ',' << field(r.critic_mse) << ',' << field(r.rho) << ','
            << field(r.j) << '\n';
    }
}

TrainResult train(const MarketSeries& train_series, const MarketSeries& valid_series,
                  const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train_series.episodes.empty()) throw std::invalid_argument("train: empty training series");

    Policy policy = Policy::initialized(cfg.make_arch(), seed);
    BoostedEnsemble critic;
    TrainReport report;

    Policy best_policy = policy;
    BoostedEnsemble best_critic;
    double best_valid = -std::numeric_limits<double>::infinity();
    int best_iteration = 0;
    int evals_since_best = 0;

    const std::uint64_t run_base = rng::mix(cfg.rollout_seed_base ^ rng::mix(seed));

    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        IterationRecord rec;
        rec.iteration = iter;

        Dataset data = rollout(train_series, policy, cfg.env,
                               rng::stream_seed(run_base, static_cast<std::uint64_t>(iter)),
                               /*greedy=*/false, cfg.threads);
        double train_return = 0.0;
        for (double r : data.episode_returns) train_return += r;
        rec.train_return = train_return / static_cast<double>(data.n_episodes());

        const RiskApplication risk = apply_risk(data, cfg.risk);
        if (risk.active) {
            if (cfg.risk.kind == RiskKind::kRcvar) rec.rho = risk.rho;
            if (cfg.risk.kind == RiskKind::kMeanVolatility) rec.j = risk.j;
        }

        FitDiagnostics diag;
        critic = fit_value(data, critic.empty() ? nullptr : &critic, cfg.critic,
                           rng::stream_seed(run_base + 1, static_cast<std::uint64_t>(iter)), &diag);
        rec.critic_mse = diag.train_mse;

        const CompatibleDesign design = build_design(data, policy, critic, cfg.weighting);
        const NaturalGradient ng = solve(design, cfg.ridge);
        rec.w_norm = ng.w.norm();
        if (!std::isfinite(rec.w_norm))
            throw std::runtime_error("train: non-finite natural gradient norm at iteration " +
                                     std::to_string(iter));

        policy = policy.natural_update(ng.w, cfg.alpha);

        bool stop = false;
        if (iter % cfg.eval_every == 0 || iter == cfg.iterations) {
            rec.valid_return = evaluate_mean_return(valid_series, policy, cfg.env, cfg.threads);
            if (rec.valid_return > best_valid) {
                best_valid = rec.valid_return;
                best_policy = policy;
                best_critic = critic;
                best_iteration = iter;
                evals_since_best = 0;
            } else {
                ++evals_since_best;
                if (evals_since_best >= cfg.early_stop_patience) stop = true;
            }
        }

        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.records.push_back(rec);
        if (stop) break;
    }

    if (best_iteration == 0) {  // no evaluation happened (empty valid set edge)
        best_policy = policy;
        best_critic = critic;
        best_valid = 0.0;
    }
    report.best_iteration = best_iteration;
    report.best_valid_return = best_valid;
    return TrainResult{std::move(best_policy), std::move(best_critic), std::move(report)};
}

namespace {

double run_and_score(const TrainConfig& cfg, const MarketSeries& train_series,
                     const MarketSeries& valid_series, std::uint64_t seed) {
    const TrainResult result = train(train_series, valid_series, cfg, seed);
    return result.report.best_valid_return;
}

}  // namespace

SelectionResult select_model(const HyperGrid& grid, const MarketSeries& train_series,
                             const MarketSeries& valid_critic, const MarketSeries& valid_actor,
                             const TrainConfig& base, std::uint64_t seed) {
    if (grid.critic_shrinkage.empty() || grid.critic_rounds.empty() || grid.min_child_weight.empty() ||
        grid.ridge.empty() || grid.alpha.empty() || grid.hidden.empty())
        throw std::invalid_argument("select_model: empty grid dimension");

    SelectionResult result;
    result.best = base;

    // stage 1: critic and ridge knobs, scored on the first validation set
    double best_score = -std::numeric_limits<double>::infinity();
    TrainConfig stage1_best = base;
    for (double shrinkage : grid.critic_shrinkage) {
        for (int rounds : grid.critic_rounds) {
            for (double mcw : grid.min_child_weight) {
                for (double ridge : grid.ridge) {
                    TrainConfig cfg = base;
                    cfg.critic.shrinkage = shrinkage;
                    cfg.critic.rounds = rounds;
                    cfg.critic.min_child_weight = mcw;
                    cfg.ridge = ridge;
                    const double score = run_and_score(cfg, train_series, valid_critic, seed);
                    result.stage1.push_back({cfg, score});
                    if (score > best_score) {
                        best_score = score;
                        stage1_best = cfg;
                    }
                }
            }
        }
    }

    // stage 2: actor knobs on the second validation set
    best_score = -std::numeric_limits<double>::infinity();
    TrainConfig stage2_best = stage1_best;
    for (double alpha : grid.alpha) {
        for (const auto& hidden : grid.hidden) {
            TrainConfig cfg = stage1_best;
            cfg.alpha = alpha;
            cfg.hidden = hidden;
            const double score = run_and_score(cfg, train_series, valid_actor, seed);
            result.stage2.push_back({cfg, score});
            if (score > best_score) {
                best_score = score;
                stage2_best = cfg;
            }
        }
    }

    result.best = stage2_best;
    return result;
}

}  // namespace fnac
