#pragma once

#include <Eigen/Core>
#include <string>

#include "fnac/actor.hpp"
#include "fnac/critic.hpp"
#include "fnac/env.hpp"

namespace fnac {

enum class Weighting { kUniform, kEmpirical };

std::string to_string(Weighting w);
Weighting weighting_from_string(const std::string& s);

// Per-sample compatible basis rows phi(s, a) = d log pi / d theta, TD-residual
// targets and state-occupancy weights. The weighted least-squares solution of
// this design is the natural gradient.
struct CompatibleDesign {
    Eigen::MatrixXd rows;     // N x P
    Eigen::VectorXd targets;  // N: r + V(s') * (1 - done) - V(s), gamma = 1
    Eigen::VectorXd weights;  // N, all > 0
};

struct NaturalGradient {
    Eigen::VectorXd w;
    double residual_norm = 0.0;   // ||(M + ridge I) w - b||
    double condition = 0.0;       // estimate of cond(M + ridge I)
    double ridge = 0.0;
    bool fallback = false;        // eigendecomposition pseudo-inverse used
    bool degenerate = false;      // all-zero design, w = 0 returned
};

// weighting kEmpirical sets weight = 1 / visitation count of the sample's
// (episode day, minute) pair; kUniform sets all weights to 1.
CompatibleDesign build_design(const Dataset& dataset, const Policy& policy, const BoostedEnsemble& critic,
                              Weighting weighting = Weighting::kUniform);

// Solves (M + ridge I) w = b with M = sum w_t phi phi^T / sum w_t and
// b = sum w_t phi residual / sum w_t. Cholesky first; eigendecomposition
// pseudo-inverse (cutoff 1e-10 relative) when the factorization fails.
NaturalGradient solve(const CompatibleDesign& design, double ridge);

// Normalized second-moment matrix of the basis rows; with uniform weights this
// is the empirical Fisher information estimate.
Eigen::MatrixXd normal_matrix(const CompatibleDesign& design);

}  // namespace fnac
