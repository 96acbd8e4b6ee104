#include "pdlight/learner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pdlight {

namespace {

constexpr const char* kCheckpointHeader = "pdlight-qnetwork v1";

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

}  // namespace

QNetwork::QNetwork(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("QNetwork: need at least input and output widths");
    for (std::size_t s : sizes_) {
        if (s == 0) throw std::invalid_argument("QNetwork: zero-width layer");
    }
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        const auto out = static_cast<Eigen::Index>(sizes_[l]);
        const auto in = static_cast<Eigen::Index>(sizes_[l - 1]);
        layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
    }
}

QNetwork QNetwork::initialized(std::vector<std::size_t> layer_sizes, Rng& rng) {
    QNetwork net(std::move(layer_sizes));
    for (auto& layer : net.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weights.cols()));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
            for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = dist(rng);
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = dist(rng);
    }
    return net;
}

Eigen::VectorXd QNetwork::forward(std::span<const double> input) const {
    if (input.size() != input_width()) {
        throw std::invalid_argument("QNetwork::forward: expected width " + std::to_string(input_width()) + ", got " +
                                    std::to_string(input.size()));
    }
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::VectorXd z = layers_[l].weights * a + layers_[l].bias;
        a = l + 1 < layers_.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    return a;
}

Eigen::MatrixXd QNetwork::forward_batch(const Eigen::MatrixXd& inputs) const {
    if (static_cast<std::size_t>(inputs.rows()) != input_width()) {
        throw std::invalid_argument("QNetwork::forward_batch: input width mismatch");
    }
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Eigen::MatrixXd z = (layers_[l].weights * a).colwise() + layers_[l].bias;
        a = l + 1 < layers_.size() ? relu(z) : z;
    }
    return a;
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    return n;
}

bool QNetwork::all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(),
                       [](const Layer& l) { return l.weights.allFinite() && l.bias.allFinite(); });
}

double td_target(double reward, std::span<const double> next_state, const QNetwork& target_net, double gamma,
                 bool terminal) {
    if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("td_target: gamma must lie in [0, 1]");
    if (terminal || gamma == 0.0) return reward;
    return reward + gamma * target_net.forward(next_state).maxCoeff();
}

LossAndGradient loss_and_gradient(const QNetwork& net, const Eigen::MatrixXd& states,
                                  std::span<const std::uint32_t> actions, std::span<const double> targets) {
    const auto batch = static_cast<Eigen::Index>(actions.size());
    if (batch == 0) throw std::invalid_argument("loss_and_gradient: empty batch");
    if (states.cols() != batch || targets.size() != actions.size()) {
        throw std::invalid_argument("loss_and_gradient: batch shape mismatch");
    }
    if (static_cast<std::size_t>(states.rows()) != net.input_width()) {
        throw std::invalid_argument("loss_and_gradient: state width mismatch");
    }
    const auto& layers = net.layers();
    const std::size_t depth = layers.size();

    // Forward pass keeping pre-activations for the rectifier masks.
    std::vector<Eigen::MatrixXd> activations{states};
    std::vector<Eigen::MatrixXd> pre;
    for (std::size_t l = 0; l < depth; ++l) {
        Eigen::MatrixXd z = (layers[l].weights * activations.back()).colwise() + layers[l].bias;
        pre.push_back(z);
        activations.push_back(l + 1 < depth ? relu(z) : z);
    }

    const Eigen::MatrixXd& q = activations.back();
    const double inv_batch = 1.0 / static_cast<double>(batch);
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), batch);
    double loss = 0.0;
    for (Eigen::Index j = 0; j < batch; ++j) {
        const auto a = static_cast<Eigen::Index>(actions[static_cast<std::size_t>(j)]);
        if (a >= q.rows()) throw std::invalid_argument("loss_and_gradient: action out of range");
        const double err = targets[static_cast<std::size_t>(j)] - q(a, j);
        loss += err * err;
        delta(a, j) = -2.0 * err * inv_batch;
    }
    loss *= inv_batch;

    LossAndGradient out;
    out.loss = loss;
    out.gradient.layers.resize(depth);
    for (std::size_t l = depth; l-- > 0;) {
        out.gradient.layers[l].weights = delta * activations[l].transpose();
        out.gradient.layers[l].bias = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
            delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
    }
    return out;
}

void apply_gradient(QNetwork& net, const NetworkGradient& gradient, double learning_rate) {
    auto& layers = net.layers();
    if (gradient.layers.size() != layers.size()) throw std::invalid_argument("apply_gradient: depth mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= learning_rate * gradient.layers[l].weights;
        layers[l].bias -= learning_rate * gradient.layers[l].bias;
    }
}

double train_step(QNetwork& net, const QNetwork& target_net, std::span<const Transition> batch, double gamma,
                  double learning_rate) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    if (!net.same_architecture(target_net)) throw std::invalid_argument("train_step: target architecture mismatch");
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto width = static_cast<Eigen::Index>(net.input_width());
    if (width != static_cast<Eigen::Index>(kObservationWidth)) {
        throw std::invalid_argument("train_step: network input width must equal the observation width");
    }
    Eigen::MatrixXd states(width, n);
    Eigen::MatrixXd next(width, n);
    std::vector<std::uint32_t> actions(batch.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& t = batch[static_cast<std::size_t>(j)];
        states.col(j) = Eigen::Map<const Eigen::VectorXd>(t.state.data(), width);
        next.col(j) = Eigen::Map<const Eigen::VectorXd>(t.next_state.data(), width);
        actions[static_cast<std::size_t>(j)] = t.action;
    }
    const Eigen::MatrixXd next_q = target_net.forward_batch(next);
    std::vector<double> targets(batch.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& t = batch[static_cast<std::size_t>(j)];
        targets[static_cast<std::size_t>(j)] = t.terminal ? t.reward : t.reward + gamma * next_q.col(j).maxCoeff();
    }
    const auto result = loss_and_gradient(net, states, actions, targets);
    apply_gradient(net, result.gradient, learning_rate);
    return result.loss;
}

void sync_target(const QNetwork& net, QNetwork& target_net) {
    if (!net.same_architecture(target_net)) throw std::invalid_argument("sync_target: architecture mismatch");
    target_net = net;
}

double epsilon(const EpsilonSchedule& schedule, std::size_t episode) {
    if (schedule.horizon <= 1) return episode == 0 ? schedule.start : schedule.end;
    const auto last = static_cast<double>(schedule.horizon - 1);
    const double frac = std::min(1.0, static_cast<double>(episode) / last);
    return schedule.start + (schedule.end - schedule.start) * frac;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    storage_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
    if (t.action >= 4) throw std::invalid_argument("ReplayBuffer: action out of range");
    if (storage_.size() < capacity_) {
        storage_.push_back(t);
        return;
    }
    storage_[head_] = t;
    head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
    if (i >= storage_.size()) throw std::out_of_range("ReplayBuffer::at");
    return storage_[(head_ + i) % storage_.size()];
}

std::optional<std::vector<Transition>> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
    if (batch == 0 || storage_.size() <= batch) return std::nullopt;
    // Floyd's algorithm: B distinct indices without materialising a permutation.
    const std::size_t n = storage_.size();
    std::vector<std::size_t> chosen;
    chosen.reserve(batch);
    for (std::size_t j = n - batch; j < n; ++j) {
        std::uniform_int_distribution<std::size_t> pick(0, j);
        const std::size_t t = pick(rng);
        chosen.push_back(std::find(chosen.begin(), chosen.end(), t) == chosen.end() ? t : j);
    }
    std::vector<Transition> out;
    out.reserve(batch);
    for (std::size_t i : chosen) out.push_back(storage_[i]);
    return out;
}

std::string serialize(const QNetwork& net) {
    std::ostringstream os;
    os << kCheckpointHeader << '\n' << "layers";
    for (std::size_t s : net.layer_sizes()) os << ' ' << s;
    os << '\n' << std::hexfloat;
    for (const auto& layer : net.layers()) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) os << (c ? " " : "") << layer.weights(r, c);
            os << '\n';
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) os << (r ? " " : "") << layer.bias(r);
        os << '\n';
    }
    return os.str();
}

QNetwork deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCheckpointHeader) throw std::runtime_error("checkpoint: bad header");
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing layer sizes");
    std::istringstream sizes_line(line);
    std::string tag;
    sizes_line >> tag;
    if (tag != "layers") throw std::runtime_error("checkpoint: missing layer sizes");
    std::vector<std::size_t> sizes;
    for (std::size_t s; sizes_line >> s;) sizes.push_back(s);
    QNetwork net(sizes);
    // operator>> does not parse hexfloat portably; strtod does.
    auto next_value = [&]() {
        std::string token;
        if (!(is >> token)) throw std::runtime_error("checkpoint: truncated parameters");
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') throw std::runtime_error("checkpoint: bad number '" + token + "'");
        return v;
    };
    for (auto& layer : net.layers()) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = next_value();
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = next_value();
    }
    if (std::string extra; is >> extra) throw std::runtime_error("checkpoint: trailing data");
    return net;
}

void save_checkpoint(const QNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << serialize(net);
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

}  // namespace pdlight
