#include "fnac/actor.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace fnac {

std::string to_string(ActionMode mode) {
    return mode == ActionMode::kDiscrete ? "discrete" : "continuous";
}

ActionMode action_mode_from_string(const std::string& s) {
    if (s == "discrete") return ActionMode::kDiscrete;
    if (s == "continuous") return ActionMode::kContinuous;
    throw std::invalid_argument("unknown action mode: " + s);
}

namespace {

std::array<double, kStateDim> default_input_scale() {
    std::array<double, kStateDim> scale{};
    for (int i = 0; i < kDeltaWindow; ++i) scale[static_cast<std::size_t>(i)] = 1e3;
    scale[kFeatSpread] = 1e4;
    scale[kFeatWeekday] = 1.0 / 6.0;
    scale[kFeatMinute] = 1.0 / kEpisodeMinutes;
    scale[kFeatAllocation] = 1.0;
    return scale;
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5*log(2*pi)

// Truncated-normal bookkeeping shared by log_prob / gradients / sampling.
struct Truncation {
    double mu, s, lo_z, hi_z, mass;  // mass = Phi(hi_z) - Phi(lo_z)
};

Truncation truncation(double mu, double s) {
    Truncation t;
    t.mu = mu;
    t.s = s;
    t.lo_z = (-1.0 - mu) / s;
    t.hi_z = (1.0 - mu) / s;
    t.mass = rng::normal_cdf(t.hi_z) - rng::normal_cdf(t.lo_z);
    return t;
}

int discrete_action_index(double action) {
    if (action == -1.0) return 0;
    if (action == 0.0) return 1;
    if (action == 1.0) return 2;
    throw std::invalid_argument("discrete action must be -1, 0 or 1");
}

constexpr double kDiscreteActions[3] = {-1.0, 0.0, 1.0};

}  // namespace

PolicyArch PolicyArch::discrete(int hidden_units) {
    PolicyArch a;
    a.mode = ActionMode::kDiscrete;
    a.hidden = {hidden_units};
    a.input_scale = default_input_scale();
    return a;
}

PolicyArch PolicyArch::continuous(int hidden1, int hidden2) {
    PolicyArch a;
    a.mode = ActionMode::kContinuous;
    a.hidden = {hidden1, hidden2};
    a.s_min = 1e-2;
    a.input_scale = default_input_scale();
    return a;
}

void PolicyArch::validate() const {
    const std::size_t want = mode == ActionMode::kDiscrete ? 1 : 2;
    if (hidden.size() != want)
        throw std::invalid_argument("policy arch: expected " + std::to_string(want) + " hidden layer(s)");
    for (int h : hidden)
        if (h < 1) throw std::invalid_argument("policy arch: hidden sizes must be >= 1");
    if (!(s_min > 0.0)) throw std::invalid_argument("policy arch: s_min must be > 0");
}

int PolicyArch::param_count() const {
    int count = 0;
    int in = kStateDim;
    for (int h : hidden) {
        count += h * in + h;
        in = h;
    }
    count += output_dim() * in + output_dim();
    return count;
}

Policy::Policy(PolicyArch arch) : arch_(std::move(arch)) {
    arch_.validate();
    theta_ = Eigen::VectorXd::Zero(arch_.param_count());
}

Policy::Policy(PolicyArch arch, Eigen::VectorXd theta) : arch_(std::move(arch)), theta_(std::move(theta)) {
    arch_.validate();
    if (theta_.size() != arch_.param_count())
        throw std::invalid_argument("policy: theta length does not match architecture");
}

Policy Policy::initialized(PolicyArch arch, std::uint64_t seed) {
    arch.validate();
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(arch.param_count());
    rng::Stream stream(rng::mix(seed));
    int offset = 0;
    int in = kStateDim;
    std::vector<int> outs(arch.hidden.begin(), arch.hidden.end());
    outs.push_back(arch.output_dim());
    for (int out : outs) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        for (int i = 0; i < out * in; ++i) theta[offset + i] = stream.uniform(-bound, bound);
        offset += out * in + out;  // biases stay zero
        in = out;
    }
    return Policy(std::move(arch), std::move(theta));
}

namespace {

// Activations kept around for backprop. layers[k] is the input to layer k;
// layers.back() is the raw (pre-softmax / pre-squash) output.
struct ForwardTrace {
    std::vector<Eigen::VectorXd> inputs;
    Eigen::VectorXd raw_out;
};

}  // namespace

// Shared forward walk. Weight matrices live in theta column-major, biases
// directly after each matrix.
static ForwardTrace run_network(const PolicyArch& arch, const Eigen::VectorXd& theta,
                                const TradingState& state) {
    if (!theta.allFinite()) throw std::invalid_argument("policy: non-finite parameter");

    const auto raw = state.features();
    Eigen::VectorXd x(kStateDim);
    for (int i = 0; i < kStateDim; ++i)
        x[i] = raw[static_cast<std::size_t>(i)] * arch.input_scale[static_cast<std::size_t>(i)];

    ForwardTrace trace;
    trace.inputs.push_back(std::move(x));

    int offset = 0;
    int in = kStateDim;
    std::vector<int> outs(arch.hidden.begin(), arch.hidden.end());
    outs.push_back(arch.output_dim());
    for (std::size_t l = 0; l < outs.size(); ++l) {
        const int out = outs[l];
        Eigen::Map<const Eigen::MatrixXd> W(theta.data() + offset, out, in);
        Eigen::Map<const Eigen::VectorXd> b(theta.data() + offset + out * in, out);
        Eigen::VectorXd pre = W * trace.inputs.back() + b;
        offset += out * in + out;
        in = out;
        if (l + 1 < outs.size()) {
            trace.inputs.push_back(pre.array().tanh().matrix());
        } else {
            trace.raw_out = std::move(pre);
        }
    }
    return trace;
}

// Backpropagates d(logp)/d(raw output) into a flat gradient over theta.
static Eigen::VectorXd backpropagate(const PolicyArch& arch, const Eigen::VectorXd& theta,
                                     const ForwardTrace& trace, Eigen::VectorXd grad_out) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    std::vector<int> outs(arch.hidden.begin(), arch.hidden.end());
    outs.push_back(arch.output_dim());

    std::vector<int> offsets(outs.size());
    int offset = 0;
    int in = kStateDim;
    for (std::size_t l = 0; l < outs.size(); ++l) {
        offsets[l] = offset;
        offset += outs[l] * in + outs[l];
        in = outs[l];
    }

    Eigen::VectorXd d = std::move(grad_out);
    for (int l = static_cast<int>(outs.size()) - 1; l >= 0; --l) {
        const int out = outs[static_cast<std::size_t>(l)];
        const int in_dim = static_cast<int>(trace.inputs[static_cast<std::size_t>(l)].size());
        const Eigen::VectorXd& z = trace.inputs[static_cast<std::size_t>(l)];
        Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets[static_cast<std::size_t>(l)], out, in_dim);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets[static_cast<std::size_t>(l)] + out * in_dim, out);
        gW = d * z.transpose();
        gb = d;
        if (l > 0) {
            Eigen::Map<const Eigen::MatrixXd> W(theta.data() + offsets[static_cast<std::size_t>(l)], out, in_dim);
            d = (W.transpose() * d).cwiseProduct(
                (1.0 - z.array().square()).matrix());
        }
    }
    return grad;
}

PolicyOutput Policy::forward(const TradingState& state) const {
    const ForwardTrace trace = run_network(arch_, theta_, state);
    PolicyOutput out;
    if (arch_.mode == ActionMode::kDiscrete) {
        const Eigen::VectorXd& logits = trace.raw_out;
        const double m = logits.maxCoeff();
        Eigen::Vector3d e = (logits.array() - m).exp();
        e /= e.sum();
        for (int i = 0; i < 3; ++i) out.probs[static_cast<std::size_t>(i)] = e[i];
    } else {
        out.mean = std::tanh(trace.raw_out[0]);
        out.stddev = arch_.s_min + softplus(trace.raw_out[1]);
    }
    return out;
}

double Policy::log_prob(const TradingState& state, double action) const {
    if (arch_.mode == ActionMode::kDiscrete) {
        const int idx = discrete_action_index(action);
        const ForwardTrace trace = run_network(arch_, theta_, state);
        const Eigen::VectorXd& logits = trace.raw_out;
        const double m = logits.maxCoeff();
        const double lse = m + std::log((logits.array() - m).exp().sum());
        return logits[idx] - lse;
    }
    if (action < -1.0 || action > 1.0)
        throw std::invalid_argument("continuous action outside [-1, 1]");
    const double a = std::clamp(action, -1.0 + kActionBoundaryEps, 1.0 - kActionBoundaryEps);
    const PolicyOutput out = forward(state);
    const Truncation tr = truncation(out.mean, out.stddev);
    const double z = (a - tr.mu) / tr.s;
    return -0.5 * z * z - std::log(tr.s) - kHalfLog2Pi - std::log(tr.mass);
}

Eigen::VectorXd Policy::grad_log_prob(const TradingState& state, double action) const {
    const ForwardTrace trace = run_network(arch_, theta_, state);
    if (arch_.mode == ActionMode::kDiscrete) {
        const int idx = discrete_action_index(action);
        const Eigen::VectorXd& logits = trace.raw_out;
        const double m = logits.maxCoeff();
        Eigen::VectorXd p = (logits.array() - m).exp();
        p /= p.sum();
        Eigen::VectorXd grad_out = -p;
        grad_out[idx] += 1.0;  // onehot(a) - probs
        return backpropagate(arch_, theta_, trace, std::move(grad_out));
    }

    if (action < -1.0 || action > 1.0)
        throw std::invalid_argument("continuous action outside [-1, 1]");
    const double a = std::clamp(action, -1.0 + kActionBoundaryEps, 1.0 - kActionBoundaryEps);

    const double mean_raw = trace.raw_out[0];
    const double std_raw = trace.raw_out[1];
    const double mu = std::tanh(mean_raw);
    const double s = arch_.s_min + softplus(std_raw);

    const Truncation tr = truncation(mu, s);
    const double z = (a - mu) / s;
    const double pdf_hi = rng::normal_pdf(tr.hi_z);
    const double pdf_lo = rng::normal_pdf(tr.lo_z);

    // d logp / d mu and d logp / d s, including the truncation normalizer
    const double dmu = z / s + (pdf_hi - pdf_lo) / (s * tr.mass);
    const double ds = (z * z - 1.0) / s + (tr.hi_z * pdf_hi - tr.lo_z * pdf_lo) / (s * tr.mass);

    Eigen::VectorXd grad_out(2);
    grad_out[0] = dmu * (1.0 - mu * mu);
    grad_out[1] = ds * sigmoid(std_raw);
    return backpropagate(arch_, theta_, trace, std::move(grad_out));
}

double Policy::sample(const TradingState& state, rng::Stream& stream) const {
    const PolicyOutput out = forward(state);
    if (arch_.mode == ActionMode::kDiscrete) {
        const double u = stream.uniform();
        double acc = 0.0;
        for (int i = 0; i < 3; ++i) {
            acc += out.probs[static_cast<std::size_t>(i)];
            if (u < acc) return kDiscreteActions[i];
        }
        return kDiscreteActions[2];
    }
    const Truncation tr = truncation(out.mean, out.stddev);
    const double u = stream.uniform_open();
    const double p = rng::normal_cdf(tr.lo_z) + u * tr.mass;
    const double a = tr.mu + tr.s * rng::normal_quantile(std::clamp(p, 1e-300, 1.0 - 1e-16));
    return std::clamp(a, -1.0 + kActionBoundaryEps, 1.0 - kActionBoundaryEps);
}

double Policy::greedy(const TradingState& state) const {
    const PolicyOutput out = forward(state);
    if (arch_.mode == ActionMode::kDiscrete) {
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (out.probs[static_cast<std::size_t>(i)] > out.probs[static_cast<std::size_t>(best)]) best = i;
        return kDiscreteActions[best];
    }
    return truncated_normal_mean(out.mean, out.stddev, -1.0, 1.0);
}

Policy Policy::natural_update(const Eigen::VectorXd& w, double alpha) const {
    if (w.size() != theta_.size())
        throw std::invalid_argument("natural_update: gradient dimension " + std::to_string(w.size()) +
                                    " does not match parameter count " + std::to_string(theta_.size()));
    return Policy(arch_, theta_ + alpha * w);
}

double truncated_normal_mean(double mu, double sigma, double lo, double hi) {
    const double a = (lo - mu) / sigma;
    const double b = (hi - mu) / sigma;
    const double mass = rng::normal_cdf(b) - rng::normal_cdf(a);
    return mu + sigma * (rng::normal_pdf(a) - rng::normal_pdf(b)) / mass;
}

nlohmann::json Policy::to_json() const {
    nlohmann::json j;
    j["mode"] = to_string(arch_.mode);
    j["hidden"] = arch_.hidden;
    j["s_min"] = arch_.s_min;
    j["input_scale"] = arch_.input_scale;
    j["theta"] = std::vector<double>(theta_.data(), theta_.data() + theta_.size());
    return j;
}

Policy Policy::from_json(const nlohmann::json& j) {
    PolicyArch arch;
    arch.mode = action_mode_from_string(j.at("mode").get<std::string>());
    arch.hidden = j.at("hidden").get<std::vector<int>>();
    arch.s_min = j.at("s_min").get<double>();
    const auto scale = j.at("input_scale").get<std::vector<double>>();
    if (scale.size() != static_cast<std::size_t>(kStateDim))
        throw std::invalid_argument("policy json: input_scale must have 49 entries");
    std::copy(scale.begin(), scale.end(), arch.input_scale.begin());
    const auto theta = j.at("theta").get<std::vector<double>>();
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    return Policy(std::move(arch), std::move(t));
}

void Policy::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("policy save: cannot open " + path);
    out << to_json().dump(2) << '\n';
}

Policy Policy::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("policy load: cannot open " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
}

}  // namespace fnac
