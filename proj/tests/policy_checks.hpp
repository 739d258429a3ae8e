#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "rigid/policy.hpp"
#include "rigid/rigidity.hpp"
#include "support.hpp"

namespace rigid::test {

inline Graph random_state(int k, std::mt19937_64& rng) {
  Graph g = Graph::complete(2);
  while (g.order() < k) {
    const auto ext = enumerate_extensions(g);
    g = apply_extension(g, ext[rng() % ext.size()]);
  }
  return g;
}

inline Extension mapped(const Extension& e, const std::vector<Vertex>& perm) {
  const auto p = [&](Vertex v) { return perm[static_cast<std::size_t>(v)]; };
  return e.apex ? Extension::one(p(*e.apex), p(e.v), p(e.w)) : Extension::zero(p(e.v), p(e.w));
}

inline Extension random_valid_action(const ActionDistribution& d, std::mt19937_64& rng) {
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < d.valid.size(); ++i) {
    if (d.valid[i]) valid.push_back(i);
  }
  return d.slots[valid[rng() % valid.size()]].extension();
}

inline double loss_of(const Policy& p, const std::vector<Sample>& data, double eta) {
  return p.loss_and_gradients(data, eta).loss;
}

/// Relative error between the analytic directional derivative and a central
/// difference along `dir`, restricted to the tensors in `which`.
inline double directional_error(const Policy& policy, const std::vector<Sample>& data, double eta,
                         const std::vector<std::size_t>& which, std::mt19937_64& rng) {
  const LossResult r = policy.loss_and_gradients(data, eta);
  // Rounding noise of a central difference with step h is about noise / h.
  const double noise = 4e-16 * std::max(1.0, std::abs(loss_of(policy, data, eta)));
  std::normal_distribution<double> normal;
  double err = 0;
  // A step that crosses a ReLU kink gives a central difference that moves
  // with h. Such directions are redrawn, as are directions whose derivative
  // is too small for the h = 1e-6 quotient to resolve.
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::vector<Mat> dir = policy.params().zeros_like();
    double norm2 = 0;
    for (std::size_t t : which) {
      for (Eigen::Index i = 0; i < dir[t].size(); ++i) dir[t].data()[i] = normal(rng);
      norm2 += dir[t].squaredNorm();
    }
    double analytic = 0;
    for (std::size_t t : which) {
      dir[t] /= std::sqrt(norm2);
      analytic += (r.grads[t].array() * dir[t].array()).sum();
    }
    auto central = [&](double h) {
      auto up = policy.clone();
      auto down = policy.clone();
      for (std::size_t t : which) {
        up->params()[t].value += h * dir[t];
        down->params()[t].value -= h * dir[t];
      }
      return (loss_of(*up, data, eta) - loss_of(*down, data, eta)) / (2 * h);
    };
    const double numeric = central(1e-6);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    if (scale < 1e5 * noise / 1e-6) continue;
    const double mid = central(1e-7);
    const double fine = central(1e-8);
    err = std::abs(analytic - numeric) / scale;
    if (std::abs(mid - numeric) <= 1e-5 * scale + noise / 1e-7 &&
        std::abs(fine - numeric) <= 1e-5 * scale + noise / 1e-8) {
      return err;
    }
  }
  return err;
}

/// Gives every bias a small random value. Zero biases put pre-activations of
/// all-zero input rows exactly on the ReLU kink.
inline std::unique_ptr<Policy> generic_point(const Policy& policy, std::mt19937_64& rng) {
  auto copy = policy.clone();
  std::normal_distribution<double> small(0.0, 0.05);
  for (auto& t : copy->params().tensors()) {
    if (t.name.find(".b") == std::string::npos) continue;
    for (Eigen::Index i = 0; i < t.value.size(); ++i) t.value.data()[i] += small(rng);
  }
  return copy;
}

/// Worst error over one all-parameter direction and one direction per tensor
/// per tensor.
inline double gradient_error(const Policy& base, const std::vector<Sample>& data, double eta,
                      std::mt19937_64& rng) {
  const auto point = generic_point(base, rng);
  const Policy& policy = *point;
  std::vector<std::size_t> all(policy.params().size());
  std::iota(all.begin(), all.end(), 0);
  double worst = directional_error(policy, data, eta, all, rng);
  for (std::size_t t = 0; t < all.size(); ++t) {
    worst = std::max(worst, directional_error(policy, data, eta, {t}, rng));
  }
  return worst;
}

inline std::vector<Sample> random_dataset(const Policy& policy, int n_max, std::mt19937_64& rng) {
  std::vector<Sample> data;
  const int count = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < count; ++i) {
    const int k = 2 + static_cast<int>(rng() % static_cast<unsigned>(n_max - 2));
    const Graph g = random_state(k, rng).relabeled(test::random_permutation(k, rng));
    data.push_back({g, random_valid_action(policy.distribution(g), rng)});
  }
  return data;
}


/// Largest slot-wise gap between pi(.|sigma G) and sigma pi(.|G) over
/// `trials` random (graph, permutation, parameter) triples.
inline double equivariance_deviation(int trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0;
  for (int trial = 0; trial < trials; ++trial) {
    GinPolicy p(12, rng());
    const int k = 3 + static_cast<int>(rng() % 9);
    const Graph g = random_state(k, rng);
    const auto perm = test::random_permutation(k, rng);
    const ActionDistribution a = p.distribution(g);
    const ActionDistribution b = p.distribution(g.relabeled(perm));
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
      const int j = b.index_of(mapped(a.slots[i].extension(), perm));
      if (j < 0 || a.valid[i] != b.valid[static_cast<std::size_t>(j)]) return 1.0;
      worst = std::max(worst, std::abs(a.probs[static_cast<Eigen::Index>(i)] - b.probs[j]));
    }
  }
  return worst;
}

}  // namespace rigid::test
