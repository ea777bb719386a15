#include "fnac/advantage.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fnac {

std::string to_string(Weighting w) {
    return w == Weighting::kUniform ? "uniform" : "empirical";
}

Weighting weighting_from_string(const std::string& s) {
    if (s == "uniform") return Weighting::kUniform;
    if (s == "empirical") return Weighting::kEmpirical;
    throw std::invalid_argument("unknown weighting: " + s);
}

CompatibleDesign build_design(const Dataset& dataset, const Policy& policy, const BoostedEnsemble& critic,
                              Weighting weighting) {
    const std::size_t n = dataset.size();
    if (n == 0) throw std::invalid_argument("build_design: empty dataset");
    const int p = policy.param_count();

    CompatibleDesign design;
    design.rows.resize(static_cast<Eigen::Index>(n), p);
    design.targets.resize(static_cast<Eigen::Index>(n));
    design.weights = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));

    if (weighting == Weighting::kEmpirical) {
        std::map<std::pair<std::int32_t, int>, double> visits;
        for (std::size_t i = 0; i < n; ++i)
            visits[{dataset.dates[i], dataset.samples[i].state.minute}] += 1.0;
        for (std::size_t i = 0; i < n; ++i)
            design.weights[static_cast<Eigen::Index>(i)] =
                1.0 / visits[{dataset.dates[i], dataset.samples[i].state.minute}];
    }

    for (std::size_t i = 0; i < n; ++i) {
        const TransitionSample& s = dataset.samples[i];
        const Eigen::VectorXd phi = policy.grad_log_prob(s.state, s.action);
        for (int j = 0; j < p; ++j) {
            if (!std::isfinite(phi[j]))
                throw std::runtime_error("build_design: non-finite gradient at sample " + std::to_string(i) +
                                         ", parameter " + std::to_string(j));
        }
        design.rows.row(static_cast<Eigen::Index>(i)) = phi.transpose();
        const double v_next = s.done ? 0.0 : critic.predict(s.next_state);
        design.targets[static_cast<Eigen::Index>(i)] = s.reward + v_next - critic.predict(s.state);
    }
    return design;
}

Eigen::MatrixXd normal_matrix(const CompatibleDesign& design) {
    const Eigen::Index p = design.rows.cols();
    const double total = design.weights.sum();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    const Eigen::MatrixXd scaled =
        design.weights.array().sqrt().matrix().asDiagonal() * design.rows;
    m.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose(), 1.0 / total);
    m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
    return m;
}

namespace {

// Largest/smallest eigenvalue estimates by (inverse) power iteration; cheap
// relative to the factorization at the P that occurs here.
double power_iteration_max(const Eigen::MatrixXd& a) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows()).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 25; ++it) {
        v = (a * v).eval();
        const double norm = v.norm();
        if (norm == 0.0) return 0.0;
        v /= norm;
        lambda = norm;
    }
    return lambda;
}

double inverse_power_iteration_min(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index p) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(p).normalized();
    double mu = 0.0;
    for (int it = 0; it < 25; ++it) {
        v = llt.solve(v).eval();
        const double norm = v.norm();
        if (norm == 0.0) return 0.0;
        v /= norm;
        mu = norm;
    }
    return mu > 0.0 ? 1.0 / mu : 0.0;
}

}  // namespace

NaturalGradient solve(const CompatibleDesign& design, double ridge) {
    if (design.rows.cols() == 0) throw std::invalid_argument("solve: design has no parameters");
    if (design.rows.rows() == 0) throw std::invalid_argument("solve: design has no samples");
    if (ridge < 0.0) throw std::invalid_argument("solve: ridge must be >= 0");
    if ((design.weights.array() <= 0.0).any()) throw std::invalid_argument("solve: weights must be > 0");

    const Eigen::Index p = design.rows.cols();
    const double total = design.weights.sum();

    Eigen::MatrixXd m = normal_matrix(design);
    const Eigen::VectorXd b =
        design.rows.transpose() * design.weights.cwiseProduct(design.targets) / total;

    NaturalGradient out;
    out.ridge = ridge;

    if (m.norm() == 0.0 && ridge == 0.0) {
        out.w = Eigen::VectorXd::Zero(p);
        out.degenerate = true;
        out.residual_norm = b.norm();
        out.condition = std::numeric_limits<double>::infinity();
        return out;
    }

    Eigen::MatrixXd a = m;
    a.diagonal().array() += ridge;

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    bool factored = llt.info() == Eigen::Success;
    if (factored) {
        out.w = llt.solve(b);
        // near-singular systems can pass the factorization yet solve poorly
        factored = out.w.allFinite() && (a * out.w - b).norm() <= 1e-8 * (b.norm() + 1.0);
    }
    if (factored) {
        const double lambda_max = power_iteration_max(a);
        const double lambda_min = inverse_power_iteration_min(llt, p);
        out.condition = lambda_min > 0.0 ? lambda_max / lambda_min : std::numeric_limits<double>::infinity();
    } else {
        // semidefinite or numerically indefinite system: spectral pseudo-inverse
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        const Eigen::VectorXd& vals = eig.eigenvalues();
        const double cutoff = 1e-10 * std::max(vals.cwiseAbs().maxCoeff(), 0.0);
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(p);
        double kept_min = std::numeric_limits<double>::infinity();
        double kept_max = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (vals[i] > cutoff) {
                inv[i] = 1.0 / vals[i];
                kept_min = std::min(kept_min, vals[i]);
                kept_max = std::max(kept_max, vals[i]);
            }
        }
        out.w = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose() * b;
        out.fallback = true;
        out.condition = kept_max > 0.0 ? kept_max / kept_min : std::numeric_limits<double>::infinity();
    }

    if (!out.w.allFinite()) throw std::runtime_error("solve: non-finite natural gradient");
    out.residual_norm = (a * out.w - b).norm();
    return out;
}

}  // namespace fnac
