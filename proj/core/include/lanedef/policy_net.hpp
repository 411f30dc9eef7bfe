#pragma once

// Feedforward actor/critic networks with analytic gradients.
//
// Tensors are column-major batches: an input batch is (input_dim x B) and the
// network returns (output_dim x B). Every network is input -> 128 ReLU -> 128
// ReLU -> affine output. Policy outputs are concatenated categorical logits,
// one segment per head; critics have a single scalar output.

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "lanedef/rng.hpp"

namespace lanedef {

struct NetSpec {
  int input_dim = 0;
  std::vector<int> hidden{128, 128};
  std::vector<int> heads;  // categorical head sizes; empty for a critic
  bool value_head = false;

  int output_dim() const;
  void validate() const;
  bool operator==(const NetSpec&) const = default;
};

NetSpec defender_policy_spec();
NetSpec attacker_policy_spec();
NetSpec defender_value_spec();
NetSpec attacker_value_spec();

struct DenseLayer {
  Eigen::MatrixXd weight;  // (out x in)
  Eigen::VectorXd bias;    // (out)
};

/// Weights of one network, or a gradient with the same shape.
struct PolicyParams {
  std::vector<DenseLayer> layers;

  static PolicyParams zeros_like(const PolicyParams& other);

  std::size_t size() const;
  /// Flat view in declaration order: layer by layer, row-major weight then bias.
  double& at(std::size_t flat_index);
  double at(std::size_t flat_index) const;
  bool all_finite() const;
  void set_zero();
  bool operator==(const PolicyParams& other) const;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // input, then each post-ReLU hidden layer
};

class Mlp {
 public:
  Mlp() = default;
  /// All weights and biases zero.
  explicit Mlp(NetSpec spec);
  /// Orthogonal init with gain sqrt(2) on hidden layers and `output_gain` on the last.
  Mlp(NetSpec spec, Rng& rng, double output_gain);

  const NetSpec& spec() const { return spec_; }
  PolicyParams& params() { return params_; }
  const PolicyParams& params() const { return params_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, ForwardCache& cache) const;

  /// Backpropagates dLoss/dOutput (output_dim x B) and overwrites `grads`.
  void backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_output, PolicyParams& grads) const;

 private:
  void check_input(const Eigen::MatrixXd& inputs) const;

  NetSpec spec_;
  PolicyParams params_;
};

// ---------------------------------------------------------------------------
// Categorical heads

/// Head sizes of a policy. With `mask_params_on_noop`, head 0 is a spawn
/// switch whose index 0 means "do nothing"; the remaining heads then have no
/// effect and are left out of log-probabilities and entropies.
struct ActionLayout {
  std::vector<int> heads;
  bool mask_params_on_noop = false;

  int total() const;
  bool masked(std::span<const int> actions) const {
    return mask_params_on_noop && !actions.empty() && actions[0] == 0;
  }
};

ActionLayout defender_action_layout();
/// spawn(2) lane(10) health(15) damage(5) speed(5) range(25) regen(4) leech(6)
/// phys_def(6) magic_def(6) phys_pen(6) magic_pen(6) dtype(2)
ActionLayout attacker_action_layout();

struct SampledAction {
  std::vector<int> indices;
  double log_prob = 0.0;
};

struct LogProbEntropy {
  double log_prob = 0.0;
  double entropy = 0.0;
};

std::vector<double> softmax(std::span<const double> logits);

/// Samples every head independently. All heads are always drawn so the random
/// stream advances identically regardless of the spawn outcome.
SampledAction sample_action(const ActionLayout& layout, std::span<const double> logits, Rng& rng);

LogProbEntropy log_prob_and_entropy(const ActionLayout& layout, std::span<const double> logits,
                                    std::span<const int> actions);

/// Adds d(coef_log_prob * log_prob + coef_entropy * entropy)/d(logits) into
/// `grad_logits` and returns the (log_prob, entropy) pair.
LogProbEntropy accumulate_log_prob_entropy_grad(const ActionLayout& layout, std::span<const double> logits,
                                                std::span<const int> actions, double coef_log_prob,
                                                double coef_entropy, std::span<double> grad_logits);

// ---------------------------------------------------------------------------
// Optimiser

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(const PolicyParams& like, AdamConfig config = {});

  /// Throws TrainingError if `grads` contains a non-finite value; params are
  /// left untouched in that case.
  void step(PolicyParams& params, const PolicyParams& grads, double learning_rate);
  std::int64_t steps() const { return t_; }

 private:
  AdamConfig config_;
  PolicyParams m_;
  PolicyParams v_;
  std::int64_t t_ = 0;
};

inline void grad_step(PolicyParams& params, const PolicyParams& grads, AdamOptimizer& optimizer,
                      double learning_rate) {
  optimizer.step(params, grads, learning_rate);
}

// ---------------------------------------------------------------------------
// Gradient checking

/// Scalar loss of a network output batch. When `grad_output` is non-null it
/// receives dLoss/dOutput with the output's shape.
using OutputLoss = std::function<double(const Eigen::MatrixXd& output, Eigen::MatrixXd* grad_output)>;

struct GradCheckOptions {
  int samples = 256;
  double step = 1e-5;
  std::uint64_t seed = 0;
  /// Negative control: perturb the analytic gradient at this flat index.
  std::optional<std::size_t> corrupt_index;
  double corrupt_by = 1.0;
};

/// Max relative error |a - n| / max(|a| + |n|, 1e-6) between backprop and
/// central differences over a random subset of parameters.
double grad_check(const Mlp& net, const Eigen::MatrixXd& inputs, const OutputLoss& loss,
                  const GradCheckOptions& options = {});

}  // namespace lanedef
