#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rigid/graph.hpp"
#include "rigid/rigidity.hpp"

namespace rigid {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Action slots
//
// For a state with k vertices the slots are, in order: every pair {v,w}
// (v < w, lexicographic) with the empty apex, then for apex u = 0..k-1 every
// pair avoiding u. That is C(k,2)(k-1) slots. A 1-extension slot whose pair is
// not an edge is invalid but still scored.

struct Slot {
  int apex = -1;  // -1 for the empty apex (0-extension)
  int v = 0;
  int w = 1;
  Extension extension() const;
};

std::vector<Slot> slots_for(int k);
std::size_t slot_count(int k);

enum class SlotClass { Invalid = 0, E0 = 1, E1a = 2, E1b = 3, E1c = 4 };

/// E1a/E1b/E1c: one, two or three edges among {u, v, w}.
SlotClass slot_class(const Graph& g, const Slot& s);

struct ActionDistribution {
  int k = 0;
  std::vector<Slot> slots;
  std::vector<char> valid;
  Vec logits;
  Vec probs;
  Vec log_probs;

  double entropy() const;
  /// Index of the slot holding `e`, or -1.
  int index_of(const Extension& e) const;
};

/// Softmax over every slot.
ActionDistribution make_distribution(const Graph& g, Vec logits);

inline constexpr int kResampleCap = 32;

/// Draws a slot; invalid draws are discarded and redrawn up to kResampleCap
/// times, after which the draw is taken from the valid slots renormalized
/// (uniformly if their mass underflows to zero).
int sample_slot(const ActionDistribution& dist, Rng& rng);
Extension sample_action(const ActionDistribution& dist, Rng& rng);

// ---------------------------------------------------------------------------
// Parameters and Adam

struct Tensor {
  std::string name;
  Mat value;
  Mat m;
  Mat v;
};

class ParamSet {
 public:
  std::size_t add(const std::string& name, int rows, int cols);
  std::size_t index_of(const std::string& name) const;
  Tensor& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor& operator[](std::size_t i) const { return tensors_[i]; }
  std::vector<Tensor>& tensors() { return tensors_; }
  const std::vector<Tensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;
  std::vector<Mat> zeros_like() const;

  std::int64_t adam_steps = 0;

 private:
  std::vector<Tensor> tensors_;
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(ParamSet& params, const std::vector<Mat>& grads, const AdamConfig& cfg);

// ---------------------------------------------------------------------------
// Policies

struct Sample {
  Graph state;
  Extension action;
};

struct LossResult {
  double loss = 0;
  std::vector<Mat> grads;
};

/// Softmax cross-entropy with an entropy bonus for one state:
/// -log p[target] - eta * H(p). Writes d/dlogits into `dz`, scaled by `scale`.
double softmax_loss(const ActionDistribution& dist, int target, double eta, double scale,
                    Vec& dz);

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string kind() const = 0;
  /// Largest target vertex count this policy can construct.
  int n_max() const { return n_max_; }

  virtual ActionDistribution distribution(const Graph& g) const = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;

  /// Mean over D of -log pi(a|G) - eta * H(pi(.|G)) and its gradient.
  LossResult loss_and_gradients(const std::vector<Sample>& data, double eta) const;

  void adam_step(const std::vector<Mat>& grads, const AdamConfig& cfg = {});

  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  void save(const std::string& path) const;
  std::string serialize() const;

  /// Architecture constants written to and checked against weight files.
  virtual std::vector<std::pair<std::string, long>> shape_header() const = 0;

 protected:
  explicit Policy(int n_max) : n_max_(n_max) {}

  /// Adds scale * d(state loss)/d(theta) into grads; returns the state loss.
  virtual double accumulate(const Graph& g, int target, double eta, double scale,
                            std::vector<Mat>& grads) const = 0;

  int n_max_;
  ParamSet params_;
};

/// Permutation-equivariant policy: a GIN encoder over [LDP; lambda_k; kappa]
/// features, sum-aggregated extension representations and an MLP head.
class GinPolicy : public Policy {
 public:
  static constexpr int kFeatures = 8;
  static constexpr int kLayers = 3;
  static constexpr int kHidden = 128;
  static constexpr int kEmbed = 32;
  static constexpr int kHeadIn = 2 * kEmbed + 5;
  static constexpr int kHeadHidden = 128;

  GinPolicy(int n_max, std::uint64_t seed);

  std::string kind() const override { return "gin"; }
  ActionDistribution distribution(const Graph& g) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<GinPolicy>(*this); }

  /// h^(0) rows for a state on k = g.order() vertices.
  Mat features(const Graph& g) const;
  /// Final vertex embeddings.
  Mat encode(const Graph& g) const;
  /// Head input for one slot.
  Vec slot_representation(const Mat& h, const Graph& g, const Slot& s) const;

  /// Copy of this policy able to build graphs on n vertices; new step
  /// embeddings repeat the last trained one.
  GinPolicy extended_to(int n) const;
  std::vector<std::pair<std::string, long>> shape_header() const override;

 protected:
  double accumulate(const Graph& g, int target, double eta, double scale,
                    std::vector<Mat>& grads) const override;

 private:
  struct Cache;
  void bind();
  void forward(const Graph& g, Cache& c) const;

  struct Layer {
    std::size_t eps, w1, b1, w2, b2;
  };
  Layer layers_[kLayers]{};
  std::size_t steps_ = 0;
  std::size_t hw1_ = 0, hb1_ = 0, hw2_ = 0, hb2_ = 0, hw3_ = 0, hb3_ = 0;
};

/// Non-equivariant baseline: an MLP on the zero-padded upper-triangular
/// adjacency bits with one output per slot of the largest state. Slots that do
/// not exist at the current size are left out of the softmax.
class FlatMlpPolicy : public Policy {
 public:
  static constexpr int kHidden = 128;

  FlatMlpPolicy(int n_max, std::uint64_t seed);

  std::string kind() const override { return "flat-mlp"; }
  ActionDistribution distribution(const Graph& g) const override;
  std::unique_ptr<Policy> clone() const override { return std::make_unique<FlatMlpPolicy>(*this); }

  int input_size() const;
  int output_size() const;
  /// Output unit of a slot, independent of the state size.
  int output_index(const Slot& s) const;
  std::vector<std::pair<std::string, long>> shape_header() const override;

 protected:
  double accumulate(const Graph& g, int target, double eta, double scale,
                    std::vector<Mat>& grads) const override;

 private:
  void bind();
  Vec input(const Graph& g) const;

  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, w3_ = 0, b3_ = 0;
};

enum class PolicyKind { Gin, FlatMlp };
PolicyKind parse_policy_kind(const std::string& text);

std::unique_ptr<Policy> make_policy(PolicyKind kind, int n_max, std::uint64_t seed);

/// Reads a weight file written by Policy::save. When expected_n_max > 0 the
/// stored n_max must match.
std::unique_ptr<Policy> load_policy(const std::string& path, int expected_n_max = 0);
std::unique_ptr<Policy> parse_policy(const std::string& text, int expected_n_max = 0);

/// Policy for target n from one trained for fewer vertices. Only the GIN
/// policy can be extended.
std::unique_ptr<Policy> extend_to_n(const Policy& source, int n);

}  // namespace rigid
