#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fnac/advantage.hpp"
#include "fnac/random.hpp"

using namespace fnac;

namespace {

TradingState random_state(rng::Stream& stream) {
    TradingState s;
    for (auto& d : s.deltas) d = 2e-4 * (stream.uniform() - 0.5);
    s.spread = 2e-4 * stream.uniform();
    s.weekday = static_cast<int>(stream.uniform() * 5);
    s.minute = 45 + static_cast<int>(stream.uniform() * 555);
    s.allocation = stream.uniform(-1.0, 1.0);
    return s;
}

Dataset tiny_dataset(const Policy& policy, rng::Stream& stream, int n, double reward_scale = 1.0) {
    Dataset d;
    d.episode_begin.push_back(0);
    d.episode_returns.push_back(0.0);
    d.reference_prices.push_back(1.0);
    rng::Stream action_stream(stream.bits());
    for (int i = 0; i < n; ++i) {
        TransitionSample s;
        s.state = random_state(stream);
        s.next_state = random_state(stream);
        s.action = policy.sample(s.state, action_stream);
        s.reward = reward_scale * stream.uniform(-1.0, 1.0);
        s.done = i == n - 1;
        d.samples.push_back(s);
        d.dates.push_back(18995);
    }
    return d;
}

// plain Gaussian elimination with partial pivoting; the independent oracle
Eigen::VectorXd gaussian_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        a.row(col).swap(a.row(pivot));
        std::swap(b[col], b[pivot]);
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            a.row(r) -= f * a.row(col);
            b[r] -= f * b[col];
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index r = n; r-- > 0;) {
        double s = b[r];
        for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
        x[r] = s / a(r, r);
    }
    return x;
}

CompatibleDesign random_design(rng::Stream& stream, int n, int p) {
    CompatibleDesign d;
    d.rows.resize(n, p);
    d.targets.resize(n);
    d.weights = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) d.rows(i, j) = stream.uniform(-1.0, 1.0);
        d.targets[i] = stream.uniform(-1.0, 1.0);
    }
    return d;
}

}  // namespace

TEST_CASE("mean-head basis coordinates vanish when the action equals the mean") {
    // symmetric continuous policy (zero theta): mu = 0; sampling exactly 0
    const Policy policy(PolicyArch::continuous(4, 4));
    rng::Stream stream(1);

    Dataset d;
    d.episode_begin.push_back(0);
    d.episode_returns.push_back(0.0);
    d.reference_prices.push_back(1.0);
    TransitionSample s;
    s.state = random_state(stream);
    s.next_state = random_state(stream);
    s.action = 0.0;  // equals the policy mean
    s.reward = 0.0;
    s.done = true;
    d.samples.push_back(s);
    d.dates.push_back(18995);

    const BoostedEnsemble critic;  // zero trees -> V = 0
    const CompatibleDesign design = build_design(d, policy, critic);
    // with zero hidden weights only the output-layer bias coordinates can be
    // nonzero; the mean-head bias is the second-to-last parameter
    const Eigen::Index p = design.rows.cols();
    CHECK(design.rows(0, p - 2) == doctest::Approx(0.0).epsilon(1e-15));  // mean bias
    // the std-head coordinate need not vanish; tanh'(0)=1 keeps it finite
    CHECK(std::isfinite(design.rows(0, p - 1)));
}

TEST_CASE("zero TD residuals produce zero targets") {
    const Policy policy = Policy::initialized(PolicyArch::discrete(4), 7);
    rng::Stream stream(2);
    Dataset d = tiny_dataset(policy, stream, 10, /*reward_scale=*/0.0);
    const BoostedEnsemble critic;  // V = 0 everywhere
    const CompatibleDesign design = build_design(d, policy, critic);
    CHECK(design.targets.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("design rows equal finite differences of log pi") {
    const Policy policy = Policy::initialized(PolicyArch::discrete(4), 3);
    rng::Stream stream(3);
    Dataset d = tiny_dataset(policy, stream, 3);
    const BoostedEnsemble critic;
    const CompatibleDesign design = build_design(d, policy, critic);
    for (int i = 0; i < 3; ++i) {
        const TransitionSample& s = d.samples[static_cast<std::size_t>(i)];
        const Eigen::VectorXd theta = policy.theta();
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            const double eps = 1e-6;
            Eigen::VectorXd hi = theta, lo = theta;
            hi[j] += eps;
            lo[j] -= eps;
            const double fd = (Policy(policy.arch(), hi).log_prob(s.state, s.action) -
                               Policy(policy.arch(), lo).log_prob(s.state, s.action)) /
                              (2 * eps);
            CHECK(design.rows(i, j) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

TEST_CASE("build_design empirical weighting uses inverse visitation counts") {
    const Policy policy = Policy::initialized(PolicyArch::discrete(4), 11);
    rng::Stream stream(4);
    Dataset d = tiny_dataset(policy, stream, 6);
    // force two samples onto the same (day, minute) pair
    d.samples[1].state.minute = d.samples[0].state.minute;
    const BoostedEnsemble critic;
    const CompatibleDesign design = build_design(d, policy, critic, Weighting::kEmpirical);
    CHECK(design.weights[0] == doctest::Approx(0.5));
    CHECK(design.weights[1] == doctest::Approx(0.5));
    CHECK(design.weights[2] == doctest::Approx(1.0));
}

TEST_CASE("solve: identity basis returns the targets") {
    const int p = 6;
    CompatibleDesign d;
    d.rows = Eigen::MatrixXd::Identity(p, p);
    d.targets.resize(p);
    for (int i = 0; i < p; ++i) d.targets[i] = 0.5 * i - 1.0;
    d.weights = Eigen::VectorXd::Ones(p);
    const NaturalGradient g = solve(d, 0.0);
    // M = I/p normalized, b = targets/p: identical solution either way
    for (int i = 0; i < p; ++i) CHECK(g.w[i] == doctest::Approx(d.targets[i]).epsilon(1e-10));
    CHECK_FALSE(g.degenerate);
}

TEST_CASE("solve: huge ridge shrinks the solution toward zero") {
    rng::Stream stream(5);
    const CompatibleDesign d = random_design(stream, 30, 8);
    const NaturalGradient g = solve(d, 1e12);
    CHECK(g.w.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("solve matches the Gaussian-elimination oracle") {
    rng::Stream stream(6);
    const CompatibleDesign d = random_design(stream, 20, 5);
    const double ridge = 0.1;
    const NaturalGradient g = solve(d, ridge);

    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(5, 5);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
    for (int i = 0; i < 20; ++i) {
        m += d.rows.row(i).transpose() * d.rows.row(i);
        b += d.rows.row(i).transpose() * d.targets[i];
    }
    m /= 20.0;
    b /= 20.0;
    m.diagonal().array() += ridge;
    const Eigen::VectorXd oracle = gaussian_solve(m, b);
    CHECK((g.w - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("normal-equation residual stays below the spec bound") {
    rng::Stream stream(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 20 + static_cast<int>(stream.uniform() * 180);
        const int p = 2 + static_cast<int>(stream.uniform() * 48);
        const CompatibleDesign d = random_design(stream, n, p);
        const double ridge = stream.uniform() < 0.5 ? 0.0 : 0.05;
        const NaturalGradient g = solve(d, ridge);
        Eigen::MatrixXd a = normal_matrix(d);
        a.diagonal().array() += ridge;
        const Eigen::VectorXd b = d.rows.transpose() * d.targets / static_cast<double>(n);
        CHECK((a * g.w - b).norm() <= 1e-8 * (b.norm() + 1.0));
    }
}

TEST_CASE("ridge monotonicity: larger ridge gives smaller solutions") {
    rng::Stream stream(8);
    const CompatibleDesign d = random_design(stream, 50, 10);
    double prev = std::numeric_limits<double>::infinity();
    for (double ridge : {0.0, 0.01, 0.1, 1.0, 10.0}) {
        const double norm = solve(d, ridge).w.norm();
        CHECK(norm <= prev + 1e-12);
        prev = norm;
    }
}

TEST_CASE("normalized M with uniform weights equals the empirical Fisher estimate") {
    const Policy policy = Policy::initialized(PolicyArch::discrete(4), 21);
    rng::Stream stream(9);
    Dataset d = tiny_dataset(policy, stream, 40);
    const BoostedEnsemble critic;
    const CompatibleDesign design = build_design(d, policy, critic, Weighting::kUniform);
    const Eigen::MatrixXd m = normal_matrix(design);

    // direct empirical Fisher from the same gradients
    const Eigen::Index p = design.rows.cols();
    Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const Eigen::VectorXd phi = policy.grad_log_prob(d.samples[i].state, d.samples[i].action);
        fisher += phi * phi.transpose();
    }
    fisher /= static_cast<double>(d.size());
    CHECK((m - fisher).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("duplicating every sample leaves the solution unchanged") {
    rng::Stream stream(10);
    const CompatibleDesign d = random_design(stream, 25, 6);
    CompatibleDesign doubled;
    doubled.rows.resize(50, 6);
    doubled.rows << d.rows, d.rows;
    doubled.targets.resize(50);
    doubled.targets << d.targets, d.targets;
    doubled.weights = Eigen::VectorXd::Ones(50);
    for (double ridge : {0.0, 0.3}) {
        const Eigen::VectorXd a = solve(d, ridge).w;
        const Eigen::VectorXd b = solve(doubled, ridge).w;
        CHECK((a - b).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("degenerate all-zero design yields a flagged zero solution") {
    CompatibleDesign d;
    d.rows = Eigen::MatrixXd::Zero(10, 4);
    d.targets = Eigen::VectorXd::Zero(10);
    d.weights = Eigen::VectorXd::Ones(10);
    const NaturalGradient g = solve(d, 0.0);
    CHECK(g.degenerate);
    CHECK(g.w.norm() == 0.0);

    CompatibleDesign none;
    none.rows = Eigen::MatrixXd::Zero(0, 0);
    none.targets = Eigen::VectorXd::Zero(0);
    none.weights = Eigen::VectorXd::Zero(0);
    CHECK_THROWS_AS(solve(none, 0.0), std::invalid_argument);
}

TEST_CASE("rank-deficient design triggers the spectral fallback") {
    // an all-zero basis coordinate gives M a zero pivot, defeating Cholesky
    CompatibleDesign d;
    d.rows.resize(12, 3);
    rng::Stream stream(11);
    for (int i = 0; i < 12; ++i) {
        d.rows(i, 0) = stream.uniform(-1.0, 1.0);
        d.rows(i, 1) = 0.0;
        d.rows(i, 2) = stream.uniform(-1.0, 1.0);
    }
    d.targets.resize(12);
    for (int i = 0; i < 12; ++i) d.targets[i] = stream.uniform(-1.0, 1.0);
    d.weights = Eigen::VectorXd::Ones(12);
    const NaturalGradient g = solve(d, 0.0);
    CHECK(g.fallback);
    CHECK(g.w.allFinite());
    CHECK(g.w[1] == 0.0);  // pseudo-inverse zeroes the untouched direction
    // the solution still solves the consistent system
    const Eigen::MatrixXd m = normal_matrix(d);
    const Eigen::VectorXd b = d.rows.transpose() * d.targets / 12.0;
    CHECK((m * g.w - b).norm() <= 1e-8 * (b.norm() + 1.0));
}
