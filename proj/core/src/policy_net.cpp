#include "lanedef/policy_net.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lanedef/errors.hpp"
#include "lanedef/obs_reward.hpp"

namespace lanedef {

// ---------------------------------------------------------------------------
// NetSpec

int NetSpec::output_dim() const {
  return std::accumulate(heads.begin(), heads.end(), 0) + (value_head ? 1 : 0);
}

void NetSpec::validate() const {
  if (input_dim < 1) throw UsageError("NetSpec: input_dim must be positive");
  if (hidden.empty()) throw UsageError("NetSpec: at least one hidden layer required");
  for (int h : hidden)
    if (h < 1) throw UsageError("NetSpec: hidden widths must be positive");
  for (int h : heads)
    if (h < 2) throw UsageError("NetSpec: categorical heads need at least 2 options");
  if (heads.empty() && !value_head) throw UsageError("NetSpec: network has no outputs");
}

ActionLayout defender_action_layout() { return {{6}, false}; }

ActionLayout attacker_action_layout() {
  return {{2, 10, 15, 5, 5, 25, 4, 6, 6, 6, 6, 6, 2}, true};
}

int ActionLayout::total() const { return std::accumulate(heads.begin(), heads.end(), 0); }

NetSpec defender_policy_spec() { return {kDefenderObsSize, {128, 128}, defender_action_layout().heads, false}; }
NetSpec attacker_policy_spec() { return {kAttackerObsSize, {128, 128}, attacker_action_layout().heads, false}; }
NetSpec defender_value_spec() { return {kDefenderObsSize, {128, 128}, {}, true}; }
NetSpec attacker_value_spec() { return {kAttackerObsSize, {128, 128}, {}, true}; }

// ---------------------------------------------------------------------------
// PolicyParams

PolicyParams PolicyParams::zeros_like(const PolicyParams& other) {
  PolicyParams p;
  p.layers.reserve(other.layers.size());
  for (const auto& l : other.layers)
    p.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  return p;
}

std::size_t PolicyParams::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& PolicyParams::at(std::size_t flat) {
  for (auto& l : layers) {
    const auto w = static_cast<std::size_t>(l.weight.size());
    if (flat < w) {
      const auto cols = static_cast<std::size_t>(l.weight.cols());
      return l.weight(static_cast<Eigen::Index>(flat / cols), static_cast<Eigen::Index>(flat % cols));
    }
    flat -= w;
    const auto b = static_cast<std::size_t>(l.bias.size());
    if (flat < b) return l.bias(static_cast<Eigen::Index>(flat));
    flat -= b;
  }
  throw UsageError("PolicyParams::at: index out of range");
}

double PolicyParams::at(std::size_t flat) const { return const_cast<PolicyParams*>(this)->at(flat); }

bool PolicyParams::all_finite() const {
  for (const auto& l : layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

void PolicyParams::set_zero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

bool PolicyParams::operator==(const PolicyParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size())
      return false;
    if (a.weight != b.weight || a.bias != b.bias) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Mlp

namespace {

std::vector<int> layer_widths(const NetSpec& spec) {
  std::vector<int> w{spec.input_dim};
  w.insert(w.end(), spec.hidden.begin(), spec.hidden.end());
  w.push_back(spec.output_dim());
  return w;
}

Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int tall = std::max(rows, cols);
  const int narrow = std::min(rows, cols);
  Eigen::MatrixXd g(tall, narrow);
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, narrow);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(narrow, narrow);
  for (int k = 0; k < narrow; ++k)
    if (r(k, k) < 0) q.col(k) *= -1.0;
  Eigen::MatrixXd w = rows >= cols ? q : Eigen::MatrixXd(q.transpose());
  return gain * w;
}

}  // namespace

Mlp::Mlp(NetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const auto w = layer_widths(spec_);
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    params_.layers.push_back({Eigen::MatrixXd::Zero(w[i + 1], w[i]), Eigen::VectorXd::Zero(w[i + 1])});
}

Mlp::Mlp(NetSpec spec, Rng& rng, double output_gain) : Mlp(std::move(spec)) {
  const std::size_t n = params_.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& l = params_.layers[i];
    const double gain = i + 1 == n ? output_gain : std::sqrt(2.0);
    l.weight = orthogonal(static_cast<int>(l.weight.rows()), static_cast<int>(l.weight.cols()), gain, rng);
  }
}

void Mlp::check_input(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != spec_.input_dim) {
    std::ostringstream msg;
    msg << "Mlp::forward: expected input rows " << spec_.input_dim << ", got " << inputs.rows();
    throw UsageError(msg.str());
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs) const {
  check_input(inputs);
  Eigen::MatrixXd a = inputs;
  const std::size_t n = params_.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = params_.layers[i];
    Eigen::MatrixXd z = l.weight * a;
    z.colwise() += l.bias;
    if (i + 1 < n) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& inputs, ForwardCache& cache) const {
  check_input(inputs);
  const std::size_t n = params_.layers.size();
  cache.activations.resize(n);
  cache.activations[0] = inputs;
  Eigen::MatrixXd out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = params_.layers[i];
    Eigen::MatrixXd z = l.weight * cache.activations[i];
    z.colwise() += l.bias;
    if (i + 1 < n) {
      cache.activations[i + 1] = z.cwiseMax(0.0);
    } else {
      out = std::move(z);
    }
  }
  return out;
}

void Mlp::backward(const ForwardCache& cache, const Eigen::MatrixXd& grad_output, PolicyParams& grads) const {
  const std::size_t n = params_.layers.size();
  if (cache.activations.size() != n) throw UsageError("Mlp::backward: cache does not match network");
  if (grad_output.rows() != spec_.output_dim() || grad_output.cols() != cache.activations[0].cols())
    throw UsageError("Mlp::backward: grad_output shape mismatch");
  if (grads.layers.size() != n) grads = PolicyParams::zeros_like(params_);

  Eigen::MatrixXd delta = grad_output;
  for (std::size_t k = n; k-- > 0;) {
    const auto& a_in = cache.activations[k];
    grads.layers[k].weight.noalias() = delta * a_in.transpose();
    grads.layers[k].bias = delta.rowwise().sum();
    if (k == 0) break;
    Eigen::MatrixXd back = params_.layers[k].weight.transpose() * delta;
    delta = (a_in.array() > 0.0).select(back, 0.0);
  }
}

// ---------------------------------------------------------------------------
// Categorical heads

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace {

void check_logits(const ActionLayout& layout, std::span<const double> logits) {
  if (static_cast<int>(logits.size()) != layout.total())
    throw UsageError("logits size does not match action layout");
}

// log-softmax of one head into `out`.
void log_softmax(std::span<const double> z, std::span<double> out) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] - lse;
}

}  // namespace

SampledAction sample_action(const ActionLayout& layout, std::span<const double> logits, Rng& rng) {
  check_logits(layout, logits);
  SampledAction s;
  s.indices.resize(layout.heads.size());
  std::vector<double> logp;
  double total = 0.0;
  std::size_t offset = 0;
  for (std::size_t h = 0; h < layout.heads.size(); ++h) {
    const auto k = static_cast<std::size_t>(layout.heads[h]);
    const auto z = logits.subspan(offset, k);
    logp.resize(k);
    log_softmax(z, logp);
    const double u = rng.uniform();
    double cdf = 0.0;
    std::size_t pick = k - 1;
    for (std::size_t i = 0; i < k; ++i) {
      cdf += std::exp(logp[i]);
      if (u < cdf) {
        pick = i;
        break;
      }
    }
    s.indices[h] = static_cast<int>(pick);
    if (h == 0 || !layout.masked(s.indices)) total += logp[pick];
    offset += k;
  }
  s.log_prob = total;
  return s;
}

LogProbEntropy accumulate_log_prob_entropy_grad(const ActionLayout& layout, std::span<const double> logits,
                                                std::span<const int> actions, double coef_log_prob,
                                                double coef_entropy, std::span<double> grad_logits) {
  check_logits(layout, logits);
  if (actions.size() != layout.heads.size()) throw UsageError("action count does not match head count");
  const bool want_grad = !grad_logits.empty();
  if (want_grad && grad_logits.size() != logits.size()) throw UsageError("grad_logits has wrong size");

  LogProbEntropy r;
  const std::size_t active = layout.masked(actions) ? 1 : layout.heads.size();
  std::vector<double> logp;
  std::size_t offset = 0;
  for (std::size_t h = 0; h < active; ++h) {
    const auto k = static_cast<std::size_t>(layout.heads[h]);
    const int a = actions[h];
    if (a < 0 || a >= static_cast<int>(k)) throw UsageError("action index outside head");
    logp.resize(k);
    log_softmax(logits.subspan(offset, k), logp);
    double entropy = 0.0;
    for (std::size_t i = 0; i < k; ++i) entropy -= std::exp(logp[i]) * logp[i];
    r.log_prob += logp[static_cast<std::size_t>(a)];
    r.entropy += entropy;
    if (want_grad) {
      for (std::size_t i = 0; i < k; ++i) {
        const double p = std::exp(logp[i]);
        // d log p_a / dz_i = [i == a] - p_i ; dH/dz_i = -p_i (log p_i + H)
        double g = coef_log_prob * ((static_cast<int>(i) == a ? 1.0 : 0.0) - p);
        g += coef_entropy * (-p * (logp[i] + entropy));
        grad_logits[offset + i] += g;
      }
    }
    offset += k;
  }
  return r;
}

LogProbEntropy log_prob_and_entropy(const ActionLayout& layout, std::span<const double> logits,
                                    std::span<const int> actions) {
  return accumulate_log_prob_entropy_grad(layout, logits, actions, 0.0, 0.0, {});
}

// ---------------------------------------------------------------------------
// Adam

AdamOptimizer::AdamOptimizer(const PolicyParams& like, AdamConfig config)
    : config_(config), m_(PolicyParams::zeros_like(like)), v_(PolicyParams::zeros_like(like)) {}

void AdamOptimizer::step(PolicyParams& params, const PolicyParams& grads, double lr) {
  if (grads.layers.size() != params.layers.size() || m_.layers.size() != params.layers.size())
    throw UsageError("AdamOptimizer::step: shape mismatch");
  for (std::size_t i = 0; i < grads.layers.size(); ++i) {
    const auto& g = grads.layers[i];
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      std::ostringstream msg;
      msg << "non-finite gradient in layer " << i << " (weight " << g.weight.rows() << "x" << g.weight.cols()
          << ", |w|max=" << g.weight.cwiseAbs().maxCoeff() << ", |b|max=" << g.bias.cwiseAbs().maxCoeff()
          << ") at optimiser step " << t_;
      throw TrainingError(msg.str());
    }
  }
  ++t_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double step = lr / c1;
  const double eps = config_.epsilon;
  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    p.array() -= step * m.array() / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    update(params.layers[i].weight, m_.layers[i].weight, v_.layers[i].weight, grads.layers[i].weight);
    update(params.layers[i].bias, m_.layers[i].bias, v_.layers[i].bias, grads.layers[i].bias);
  }
}

// ---------------------------------------------------------------------------
// Gradient check

double grad_check(const Mlp& net, const Eigen::MatrixXd& inputs, const OutputLoss& loss,
                  const GradCheckOptions& options) {
  ForwardCache cache;
  const Eigen::MatrixXd out = net.forward(inputs, cache);
  Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  loss(out, &grad_out);
  PolicyParams analytic = PolicyParams::zeros_like(net.params());
  net.backward(cache, grad_out, analytic);

  const std::size_t total = analytic.size();
  std::vector<std::size_t> picks;
  if (options.samples <= 0 || static_cast<std::size_t>(options.samples) >= total) {
    picks.resize(total);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
  } else {
    Rng rng(options.seed);
    picks.reserve(static_cast<std::size_t>(options.samples));
    for (int i = 0; i < options.samples; ++i)
      picks.push_back(static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(total - 1))));
  }
  if (options.corrupt_index) {
    analytic.at(*options.corrupt_index) += options.corrupt_by;
    picks.push_back(*options.corrupt_index);
  }

  Mlp probe = net;
  double worst = 0.0;
  for (std::size_t idx : picks) {
    double& w = probe.params().at(idx);
    const double saved = w;
    w = saved + options.step;
    const double up = loss(probe.forward(inputs), nullptr);
    w = saved - options.step;
    const double down = loss(probe.forward(inputs), nullptr);
    w = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = analytic.at(idx);
    const double err = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace lanedef
