#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdlight/observation.hpp"

namespace pdlight {

using Rng = std::mt19937_64;

// Fully connected network: rectifier on hidden layers, identity on the output layer.
class QNetwork {
public:
    struct Layer {
        Eigen::MatrixXd weights;  // out x in
        Eigen::VectorXd bias;     // out
    };

    // All parameters zero.
    explicit QNetwork(std::vector<std::size_t> layer_sizes);

    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
    static QNetwork initialized(std::vector<std::size_t> layer_sizes, Rng& rng);

    const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
    std::size_t input_width() const { return sizes_.front(); }
    std::size_t output_width() const { return sizes_.back(); }

    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    Eigen::VectorXd forward(std::span<const double> input) const;
    // Columns are samples.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

    std::size_t parameter_count() const;
    bool all_finite() const;
    bool same_architecture(const QNetwork& other) const { return sizes_ == other.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<Layer> layers_;
};

inline const std::vector<std::size_t> kDefaultLayerSizes = {kObservationWidth, 32, 32, 4};

struct NetworkGradient {
    std::vector<QNetwork::Layer> layers;
};

struct Transition {
    Observation state{};
    std::uint32_t action = 0;
    double reward = 0.0;
    Observation next_state{};
    bool terminal = false;
};

// r if terminal, otherwise r + gamma * max_a target(next)[a].
double td_target(double reward, std::span<const double> next_state, const QNetwork& target_net, double gamma,
                 bool terminal);

struct LossAndGradient {
    double loss = 0.0;
    NetworkGradient gradient;
};

// J = (1/B) sum_j (targets_j - Q(states_j)[actions_j])^2 and dJ/dtheta by backpropagation.
LossAndGradient loss_and_gradient(const QNetwork& net, const Eigen::MatrixXd& states,
                                  std::span<const std::uint32_t> actions, std::span<const double> targets);

void apply_gradient(QNetwork& net, const NetworkGradient& gradient, double learning_rate);

// One gradient-descent step on the squared TD error of the batch. Returns the pre-update loss.
double train_step(QNetwork& net, const QNetwork& target_net, std::span<const Transition> batch, double gamma,
                  double learning_rate);

void sync_target(const QNetwork& net, QNetwork& target_net);

struct EpsilonSchedule {
    double start = 0.8;
    double end = 0.2;
    std::size_t horizon = 100;  // episodes
};

// Linear from start (episode 0) to end (episode horizon-1), held at end afterwards.
double epsilon(const EpsilonSchedule& schedule, std::size_t episode);

// Bounded FIFO memory with uniform sampling without replacement.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity = 10000);

    void push(const Transition& t);
    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Oldest first.
    const Transition& at(std::size_t i) const;

    // nullopt while size() <= batch (the caller skips training).
    std::optional<std::vector<Transition>> sample(std::size_t batch, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next slot to overwrite once full
    std::vector<Transition> storage_;
};

// Text checkpoint: header line, layer sizes, then every parameter in hexadecimal floating point.
std::string serialize(const QNetwork& net);
QNetwork deserialize(const std::string& text);
void save_checkpoint(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace pdlight
