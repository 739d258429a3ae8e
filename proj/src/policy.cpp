#include "rigid/policy.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rigid {

// ---------------------------------------------------------------------------
// Slots

Extension Slot::extension() const {
  return apex < 0 ? Extension::zero(v, w) : Extension::one(apex, v, w);
}

std::size_t slot_count(int k) {
  const auto kk = static_cast<std::size_t>(k);
  return k < 2 ? 0 : kk * (kk - 1) / 2 * (kk - 1);
}

std::vector<Slot> slots_for(int k) {
  std::vector<Slot> out;
  out.reserve(slot_count(k));
  for (int v = 0; v < k; ++v) {
    for (int w = v + 1; w < k; ++w) out.push_back({-1, v, w});
  }
  for (int u = 0; u < k; ++u) {
    for (int v = 0; v < k; ++v) {
      if (v == u) continue;
      for (int w = v + 1; w < k; ++w) {
        if (w != u) out.push_back({u, v, w});
      }
    }
  }
  return out;
}

SlotClass slot_class(const Graph& g, const Slot& s) {
  if (s.apex < 0) return SlotClass::E0;
  if (!g.has_edge(s.v, s.w)) return SlotClass::Invalid;
  const int edges = 1 + (g.has_edge(s.apex, s.v) ? 1 : 0) + (g.has_edge(s.apex, s.w) ? 1 : 0);
  return static_cast<SlotClass>(1 + edges);
}

double ActionDistribution::entropy() const {
  double h = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0) h -= probs[i] * log_probs[i];
  }
  return h;
}

int ActionDistribution::index_of(const Extension& e) const {
  const int apex = e.apex ? *e.apex : -1;
  if ((e.kind == ExtensionKind::Zero) != (apex < 0)) return -1;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].apex == apex && slots[i].v == e.v && slots[i].w == e.w) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

ActionDistribution make_distribution(const Graph& g, Vec logits) {
  ActionDistribution d;
  d.k = g.order();
  d.slots = slots_for(d.k);
  if (static_cast<std::size_t>(logits.size()) != d.slots.size()) {
    throw DomainError("logit count does not match the slot count");
  }
  d.valid.resize(d.slots.size());
  for (std::size_t i = 0; i < d.slots.size(); ++i) {
    d.valid[i] = slot_class(g, d.slots[i]) != SlotClass::Invalid ? 1 : 0;
  }
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  d.log_probs = logits.array() - lse;
  d.probs = d.log_probs.array().exp();
  d.logits = std::move(logits);
  return d;
}

namespace {

int draw(const Vec& weights, double total, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double r = unit(rng) * total;
  int last = -1;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    last = static_cast<int>(i);
    r -= weights[i];
    if (r < 0) return last;
  }
  return last;
}

}  // namespace

int sample_slot(const ActionDistribution& dist, Rng& rng) {
  const double total = dist.probs.sum();
  for (int attempt = 0; attempt < kResampleCap; ++attempt) {
    const int i = draw(dist.probs, total, rng);
    if (i >= 0 && dist.valid[static_cast<std::size_t>(i)]) return i;
  }
  Vec masked = dist.probs;
  std::vector<int> valid;
  for (std::size_t i = 0; i < dist.valid.size(); ++i) {
    if (dist.valid[i]) {
      valid.push_back(static_cast<int>(i));
    } else {
      masked[static_cast<Eigen::Index>(i)] = 0;
    }
  }
  if (valid.empty()) throw DomainError("state has no applicable extension");
  const double mass = masked.sum();
  if (mass > 0) return draw(masked, mass, rng);
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

Extension sample_action(const ActionDistribution& dist, Rng& rng) {
  return dist.slots[static_cast<std::size_t>(sample_slot(dist, rng))].extension();
}

// ---------------------------------------------------------------------------
// Parameters

std::size_t ParamSet::add(const std::string& name, int rows, int cols) {
  tensors_.push_back({name, Mat::Zero(rows, cols), Mat::Zero(rows, cols), Mat::Zero(rows, cols)});
  return tensors_.size() - 1;
}

std::size_t ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  throw DomainError("no parameter tensor named '" + name + "'");
}

std::size_t ParamSet::scalar_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors_) total += static_cast<std::size_t>(t.value.size());
  return total;
}

std::vector<Mat> ParamSet::zeros_like() const {
  std::vector<Mat> out;
  out.reserve(tensors_.size());
  for (const auto& t : tensors_) out.push_back(Mat::Zero(t.value.rows(), t.value.cols()));
  return out;
}

void adam_step(ParamSet& params, const std::vector<Mat>& grads, const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw DomainError("gradient/parameter count mismatch");
  ++params.adam_steps;
  const double t = static_cast<double>(params.adam_steps);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Mat& g = grads[i];
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * g;
    p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    p.value.array() -=
        cfg.lr * (p.m.array() / c1) / ((p.v.array() / c2).sqrt() + cfg.eps);
  }
}

namespace {

void glorot(Mat& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
}

Mat relu(const Mat& x) { return x.cwiseMax(0.0); }

Mat relu_mask(const Mat& x) { return (x.array() > 0.0).cast<double>(); }

}  // namespace

// ---------------------------------------------------------------------------
// Loss

double softmax_loss(const ActionDistribution& dist, int target, double eta, double scale,
                    Vec& dz) {
  const double h = dist.entropy();
  const double loss = -dist.log_probs[target] - eta * h;
  dz = dist.probs;
  dz[target] -= 1.0;
  if (eta != 0.0) {
    dz.array() += eta * dist.probs.array() * (dist.log_probs.array() + h);
  }
  dz *= scale;
  return loss;
}

LossResult Policy::loss_and_gradients(const std::vector<Sample>& data, double eta) const {
  LossResult out;
  out.grads = params_.zeros_like();
  if (data.empty()) return out;
  const double scale = 1.0 / static_cast<double>(data.size());
  for (const auto& s : data) {
    if (!s.action.applicable_to(s.state)) {
      throw DomainError("dataset action " + to_string(s.action) + " is not a valid slot");
    }
    const auto slots = slots_for(s.state.order());
    int target = -1;
    const int apex = s.action.apex ? *s.action.apex : -1;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i].apex == apex && slots[i].v == s.action.v && slots[i].w == s.action.w) {
        target = static_cast<int>(i);
        break;
      }
    }
    if (target < 0) throw DomainError("dataset action " + to_string(s.action) + " has no slot");
    out.loss += scale * accumulate(s.state, target, eta, scale, out.grads);
  }
  return out;
}

void Policy::adam_step(const std::vector<Mat>& grads, const AdamConfig& cfg) {
  rigid::adam_step(params_, grads, cfg);
}

// ---------------------------------------------------------------------------
// GIN policy

GinPolicy::GinPolicy(int n_max, std::uint64_t seed) : Policy(n_max) {
  if (n_max < 3) throw DomainError("policy needs n_max >= 3");
  for (int l = 0; l < kLayers; ++l) {
    const std::string p = "gin." + std::to_string(l) + ".";
    params_.add(p + "eps", 1, 1);
    params_.add(p + "w1", l == 0 ? kFeatures : kEmbed, kHidden);
    params_.add(p + "b1", 1, kHidden);
    params_.add(p + "w2", kHidden, kEmbed);
    params_.add(p + "b2", 1, kEmbed);
  }
  params_.add("step_embedding", n_max - 2, 2);
  params_.add("head.w1", kHeadIn, kHeadHidden);
  params_.add("head.b1", 1, kHeadHidden);
  params_.add("head.w2", kHeadHidden, kHeadHidden);
  params_.add("head.b2", 1, kHeadHidden);
  params_.add("head.w3", kHeadHidden, 1);
  params_.add("head.b3", 1, 1);
  bind();

  Rng rng(seed);
  for (auto& t : params_.tensors()) {
    const bool weight = t.name.find(".w") != std::string::npos;
    if (weight) glorot(t.value, rng);
  }
  std::normal_distribution<double> small(0.0, 0.01);
  Mat& steps = params_[steps_].value;
  for (Eigen::Index i = 0; i < steps.size(); ++i) steps.data()[i] = small(rng);
}

void GinPolicy::bind() {
  for (int l = 0; l < kLayers; ++l) {
    const std::string p = "gin." + std::to_string(l) + ".";
    layers_[l] = {params_.index_of(p + "eps"), params_.index_of(p + "w1"),
                  params_.index_of(p + "b1"), params_.index_of(p + "w2"),
                  params_.index_of(p + "b2")};
  }
  steps_ = params_.index_of("step_embedding");
  hw1_ = params_.index_of("head.w1");
  hb1_ = params_.index_of("head.b1");
  hw2_ = params_.index_of("head.w2");
  hb2_ = params_.index_of("head.b2");
  hw3_ = params_.index_of("head.w3");
  hb3_ = params_.index_of("head.b3");
}

std::vector<std::pair<std::string, long>> GinPolicy::shape_header() const {
  return {{"features", kFeatures},   {"gin_layers", kLayers}, {"gin_hidden", kHidden},
          {"gin_out", kEmbed},       {"head_in", kHeadIn},    {"head_hidden", kHeadHidden},
          {"head_layers", 3}};
}

Mat GinPolicy::features(const Graph& g) const {
  const int k = g.order();
  if (k < 2 || k > n_max_ - 1) {
    throw DomainError("step " + std::to_string(k) + " outside the embedded range [2, " +
                      std::to_string(n_max_ - 1) + "]");
  }
  const Mat& steps = params_[steps_].value;
  Mat h(k, kFeatures);
  for (int v = 0; v < k; ++v) {
    const LdpVector d = ldp(g, v);
    h.row(v) << d.degree, d.min, d.max, d.mean, d.std, steps(k - 2, 0), steps(k - 2, 1),
        clustering(g, v);
  }
  return h;
}

struct GinPolicy::Cache {
  std::vector<Slot> slots;
  std::vector<int> cls;
  Mat adj;
  Mat h[kLayers + 1];
  Mat a[kLayers];
  Mat z1[kLayers];
  Mat r1[kLayers];
  Mat z2[kLayers];
  Mat p;
  Mat q;
  Mat hz1;
  Mat hr1;
  Mat hz2;
  Mat hr2;
  Vec logits;
};

void GinPolicy::forward(const Graph& g, Cache& c) const {
  const int k = g.order();
  c.adj = Mat::Zero(k, k);
  for (int v = 0; v < k; ++v) {
    Row r = g.neighbors(v);
    while (r != 0) {
      c.adj(v, std::countr_zero(r)) = 1.0;
      r &= r - 1;
    }
  }
  c.h[0] = features(g);
  for (int l = 0; l < kLayers; ++l) {
    const Layer& L = layers_[l];
    const double eps = params_[L.eps].value(0, 0);
    c.a[l] = (1.0 + eps) * c.h[l] + c.adj * c.h[l];
    c.z1[l] = c.a[l] * params_[L.w1].value;
    c.z1[l].rowwise() += params_[L.b1].value.row(0);
    c.r1[l] = relu(c.z1[l]);
    c.z2[l] = c.r1[l] * params_[L.w2].value;
    c.z2[l].rowwise() += params_[L.b2].value.row(0);
    c.h[l + 1] = l + 1 < kLayers ? relu(c.z2[l]) : c.z2[l];
  }

  const Mat& h = c.h[kLayers];
  const Mat& w1 = params_[hw1_].value;
  c.p = h * w1.topRows(kEmbed);
  c.q = h * w1.middleRows(kEmbed, kEmbed);
  c.slots = slots_for(k);
  const auto s_count = static_cast<Eigen::Index>(c.slots.size());
  c.cls.resize(c.slots.size());
  c.hz1.resize(s_count, kHeadHidden);
  const auto b1 = params_[hb1_].value.row(0);
  for (Eigen::Index s = 0; s < s_count; ++s) {
    const Slot& sl = c.slots[static_cast<std::size_t>(s)];
    const int cls = static_cast<int>(slot_class(g, sl));
    c.cls[static_cast<std::size_t>(s)] = cls;
    auto row = c.hz1.row(s);
    row = c.p.row(sl.v) + c.p.row(sl.w) + w1.row(2 * kEmbed + cls) + b1;
    if (sl.apex >= 0) row += c.p.row(sl.apex) + c.q.row(sl.v) + c.q.row(sl.w);
  }
  c.hr1 = relu(c.hz1);
  c.hz2 = c.hr1 * params_[hw2_].value;
  c.hz2.rowwise() += params_[hb2_].value.row(0);
  c.hr2 = relu(c.hz2);
  c.logits = c.hr2 * params_[hw3_].value.col(0);
  c.logits.array() += params_[hb3_].value(0, 0);
}

Mat GinPolicy::encode(const Graph& g) const {
  Cache c;
  forward(g, c);
  return c.h[kLayers];
}

Vec GinPolicy::slot_representation(const Mat& h, const Graph& g, const Slot& s) const {
  Vec x = Vec::Zero(kHeadIn);
  x.head(kEmbed) = (h.row(s.v) + h.row(s.w)).transpose();
  if (s.apex >= 0) {
    x.head(kEmbed) += h.row(s.apex).transpose();
    x.segment(kEmbed, kEmbed) = (h.row(s.v) + h.row(s.w)).transpose();
  }
  x[2 * kEmbed + static_cast<int>(slot_class(g, s))] = 1.0;
  return x;
}

ActionDistribution GinPolicy::distribution(const Graph& g) const {
  Cache c;
  forward(g, c);
  return make_distribution(g, std::move(c.logits));
}

double GinPolicy::accumulate(const Graph& g, int target, double eta, double scale,
                             std::vector<Mat>& grads) const {
  Cache c;
  forward(g, c);
  const ActionDistribution dist = make_distribution(g, c.logits);
  Vec dz;
  const double loss = softmax_loss(dist, target, eta, scale, dz);

  grads[hw3_].col(0) += c.hr2.transpose() * dz;
  grads[hb3_](0, 0) += dz.sum();
  Mat d = dz * params_[hw3_].value.col(0).transpose();
  d = d.cwiseProduct(relu_mask(c.hz2));
  grads[hw2_] += c.hr1.transpose() * d;
  grads[hb2_] += d.colwise().sum();
  d = (d * params_[hw2_].value.transpose()).cwiseProduct(relu_mask(c.hz1));
  grads[hb1_] += d.colwise().sum();

  const int k = g.order();
  Mat dp = Mat::Zero(k, kHeadHidden);
  Mat dq = Mat::Zero(k, kHeadHidden);
  Mat& gw1 = grads[hw1_];
  for (std::size_t s = 0; s < c.slots.size(); ++s) {
    const Slot& sl = c.slots[s];
    const auto row = d.row(static_cast<Eigen::Index>(s));
    dp.row(sl.v) += row;
    dp.row(sl.w) += row;
    gw1.row(2 * kEmbed + c.cls[s]) += row;
    if (sl.apex >= 0) {
      dp.row(sl.apex) += row;
      dq.row(sl.v) += row;
      dq.row(sl.w) += row;
    }
  }
  const Mat& h = c.h[kLayers];
  const Mat& w1 = params_[hw1_].value;
  gw1.topRows(kEmbed) += h.transpose() * dp;
  gw1.middleRows(kEmbed, kEmbed) += h.transpose() * dq;
  Mat dh = dp * w1.topRows(kEmbed).transpose() + dq * w1.middleRows(kEmbed, kEmbed).transpose();

  for (int l = kLayers - 1; l >= 0; --l) {
    const Layer& L = layers_[l];
    Mat dz2 = l + 1 < kLayers ? Mat(dh.cwiseProduct(relu_mask(c.z2[l]))) : dh;
    grads[L.w2] += c.r1[l].transpose() * dz2;
    grads[L.b2] += dz2.colwise().sum();
    Mat dz1 = (dz2 * params_[L.w2].value.transpose()).cwiseProduct(relu_mask(c.z1[l]));
    grads[L.w1] += c.a[l].transpose() * dz1;
    grads[L.b1] += dz1.colwise().sum();
    const Mat da = dz1 * params_[L.w1].value.transpose();
    grads[L.eps](0, 0) += da.cwiseProduct(c.h[l]).sum();
    const double eps = params_[L.eps].value(0, 0);
    dh = (1.0 + eps) * da + c.adj * da;
  }
  grads[steps_](k - 2, 0) += dh.col(5).sum();
  grads[steps_](k - 2, 1) += dh.col(6).sum();
  return loss;
}

GinPolicy GinPolicy::extended_to(int n) const {
  if (n <= n_max_) return *this;
  GinPolicy out(n, 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor& src = params_[i];
    Tensor& dst = out.params_[i];
    if (i != steps_) {
      dst = src;
      continue;
    }
    const Eigen::Index old_rows = src.value.rows();
    dst.value.topRows(old_rows) = src.value;
    dst.m.topRows(old_rows) = src.m;
    dst.v.topRows(old_rows) = src.v;
    for (Eigen::Index r = old_rows; r < dst.value.rows(); ++r) {
      dst.value.row(r) = src.value.row(old_rows - 1);
    }
  }
  out.params_.adam_steps = params_.adam_steps;
  return out;
}

// ---------------------------------------------------------------------------
// Flat MLP ablation

namespace {

int pair_index(int v, int w) { return w * (w - 1) / 2 + v; }

}  // namespace

FlatMlpPolicy::FlatMlpPolicy(int n_max, std::uint64_t seed) : Policy(n_max) {
  if (n_max < 3) throw DomainError("policy needs n_max >= 3");
  params_.add("flat.w1", input_size(), kHidden);
  params_.add("flat.b1", 1, kHidden);
  params_.add("flat.w2", kHidden, kHidden);
  params_.add("flat.b2", 1, kHidden);
  params_.add("flat.w3", kHidden, output_size());
  params_.add("flat.b3", 1, output_size());
  bind();
  Rng rng(seed);
  for (auto& t : params_.tensors()) {
    if (t.name.find(".w") != std::string::npos) glorot(t.value, rng);
  }
}

void FlatMlpPolicy::bind() {
  w1_ = params_.index_of("flat.w1");
  b1_ = params_.index_of("flat.b1");
  w2_ = params_.index_of("flat.w2");
  b2_ = params_.index_of("flat.b2");
  w3_ = params_.index_of("flat.w3");
  b3_ = params_.index_of("flat.b3");
}

std::vector<std::pair<std::string, long>> FlatMlpPolicy::shape_header() const {
  return {{"input", input_size()}, {"hidden", kHidden}, {"layers", 3}, {"output", output_size()}};
}

int FlatMlpPolicy::input_size() const { return n_max_ * (n_max_ - 1) / 2; }

int FlatMlpPolicy::output_size() const {
  const int big = n_max_ - 1;
  return (big + 1) * (big * (big - 1) / 2);
}

int FlatMlpPolicy::output_index(const Slot& s) const {
  const int big = n_max_ - 1;
  return (s.apex + 1) * (big * (big - 1) / 2) + pair_index(s.v, s.w);
}

Vec FlatMlpPolicy::input(const Graph& g) const {
  const int k = g.order();
  if (k < 2 || k > n_max_ - 1) {
    throw DomainError("step " + std::to_string(k) + " outside [2, " + std::to_string(n_max_ - 1) +
                      "]");
  }
  Vec x = Vec::Zero(input_size());
  for (const auto& e : g.edges()) x[pair_index(e.u, e.v)] = 1.0;
  return x;
}

ActionDistribution FlatMlpPolicy::distribution(const Graph& g) const {
  const Vec x = input(g);
  Eigen::RowVectorXd a = x.transpose() * params_[w1_].value + params_[b1_].value.row(0);
  a = a.cwiseMax(0.0);
  Eigen::RowVectorXd b = a * params_[w2_].value + params_[b2_].value.row(0);
  b = b.cwiseMax(0.0);
  const auto slots = slots_for(g.order());
  Vec logits(static_cast<Eigen::Index>(slots.size()));
  const Mat& w3 = params_[w3_].value;
  const Mat& b3 = params_[b3_].value;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const int o = output_index(slots[s]);
    logits[static_cast<Eigen::Index>(s)] = b.dot(w3.col(o)) + b3(0, o);
  }
  return make_distribution(g, std::move(logits));
}

double FlatMlpPolicy::accumulate(const Graph& g, int target, double eta, double scale,
                                 std::vector<Mat>& grads) const {
  const Vec x = input(g);
  const Eigen::RowVectorXd za = x.transpose() * params_[w1_].value + params_[b1_].value.row(0);
  const Eigen::RowVectorXd ra = za.cwiseMax(0.0);
  const Eigen::RowVectorXd zb = ra * params_[w2_].value + params_[b2_].value.row(0);
  const Eigen::RowVectorXd rb = zb.cwiseMax(0.0);
  const auto slots = slots_for(g.order());
  const Mat& w3 = params_[w3_].value;
  Vec logits(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const int o = output_index(slots[s]);
    logits[static_cast<Eigen::Index>(s)] = rb.dot(w3.col(o)) + params_[b3_].value(0, o);
  }
  const ActionDistribution dist = make_distribution(g, std::move(logits));
  Vec dz;
  const double loss = softmax_loss(dist, target, eta, scale, dz);

  Eigen::RowVectorXd drb = Eigen::RowVectorXd::Zero(kHidden);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const int o = output_index(slots[s]);
    const double d = dz[static_cast<Eigen::Index>(s)];
    grads[w3_].col(o) += d * rb.transpose();
    grads[b3_](0, o) += d;
    drb += d * w3.col(o).transpose();
  }
  const Eigen::RowVectorXd dzb = drb.cwiseProduct((zb.array() > 0.0).cast<double>().matrix());
  grads[w2_] += ra.transpose() * dzb;
  grads[b2_].row(0) += dzb;
  const Eigen::RowVectorXd dza =
      (dzb * params_[w2_].value.transpose()).cwiseProduct((za.array() > 0.0).cast<double>().matrix());
  grads[w1_] += x * dza;
  grads[b1_].row(0) += dza;
  return loss;
}

// ---------------------------------------------------------------------------
// Construction and persistence

PolicyKind parse_policy_kind(const std::string& text) {
  if (text == "gin") return PolicyKind::Gin;
  if (text == "flat-mlp") return PolicyKind::FlatMlp;
  throw UsageError("unknown policy '" + text + "' (expected gin or flat-mlp)");
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, int n_max, std::uint64_t seed) {
  if (kind == PolicyKind::Gin) return std::make_unique<GinPolicy>(n_max, seed);
  return std::make_unique<FlatMlpPolicy>(n_max, seed);
}

namespace {

constexpr const char* kMagic = "rigid-policy-weights";
constexpr int kVersion = 1;

void write_row(std::ostream& out, const char* label, const Mat& m) {
  out << label;
  for (Eigen::Index i = 0; i < m.size(); ++i) out << ' ' << m.data()[i];
  out << '\n';
}

void read_row(std::istream& in, const std::string& label, Mat& m, const std::string& tensor) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("weight file ends inside tensor " + tensor);
  std::istringstream fields(line);
  std::string got;
  fields >> got;
  if (got != label) {
    throw DomainError("weight file: expected '" + label + "' row for tensor " + tensor);
  }
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::string token;
    if (!(fields >> token)) throw DomainError("weight file: short row for tensor " + tensor);
    char* end = nullptr;
    m.data()[i] = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') {
      throw DomainError("weight file: bad number '" + token + "' in tensor " + tensor);
    }
  }
  std::string extra;
  if (fields >> extra) throw DomainError("weight file: long row for tensor " + tensor);
}

}  // namespace

std::string Policy::serialize() const {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << kind() << '\n';
  out << "n_max " << n_max_ << '\n';
  for (const auto& [key, value] : shape_header()) out << key << ' ' << value << '\n';
  out << "adam_steps " << params_.adam_steps << '\n';
  out << "tensors " << params_.size() << '\n';
  out << std::hexfloat;
  for (const auto& t : params_.tensors()) {
    out << "tensor " << t.name << ' ' << std::dec << t.value.rows() << ' ' << t.value.cols()
        << std::hexfloat << '\n';
    write_row(out, "value", t.value);
    write_row(out, "m", t.m);
    write_row(out, "v", t.v);
  }
  out << "end\n";
  return out.str();
}

void Policy::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write weight file '" + path + "'");
  out << serialize();
  if (!out) throw UsageError("failed writing weight file '" + path + "'");
}

std::unique_ptr<Policy> parse_policy(const std::string& text, int expected_n_max) {
  std::istringstream in(text);
  auto expect = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw DomainError("weight file: missing '" + key + "'");
    std::istringstream fields(line);
    std::string got;
    std::string value;
    fields >> got >> value;
    if (got != key) throw DomainError("weight file: expected '" + key + "', found '" + got + "'");
    return value;
  };
  if (expect(kMagic) != std::to_string(kVersion)) {
    throw DomainError("weight file: unsupported version");
  }
  const PolicyKind kind = parse_policy_kind(expect("kind"));
  const int n_max = std::stoi(expect("n_max"));
  if (expected_n_max > 0 && n_max != expected_n_max) {
    throw DomainError("weight file was trained for n_max = " + std::to_string(n_max) +
                      ", expected " + std::to_string(expected_n_max));
  }
  auto policy = make_policy(kind, n_max, 0);
  for (const auto& [key, value] : policy->shape_header()) {
    const std::string got = expect(key);
    if (got != std::to_string(value)) {
      throw DomainError("weight file: " + key + " = " + got + ", this build uses " +
                        std::to_string(value));
    }
  }
  ParamSet& params = policy->params();
  params.adam_steps = std::stoll(expect("adam_steps"));
  if (expect("tensors") != std::to_string(params.size())) {
    throw DomainError("weight file: tensor count mismatch");
  }
  for (auto& t : params.tensors()) {
    std::string line;
    std::getline(in, line);
    std::istringstream fields(line);
    std::string tag;
    std::string name;
    long rows = -1;
    long cols = -1;
    fields >> tag >> name >> rows >> cols;
    if (tag != "tensor" || name != t.name || rows != t.value.rows() || cols != t.value.cols()) {
      throw DomainError("weight file: expected tensor " + t.name + " " +
                        std::to_string(t.value.rows()) + "x" + std::to_string(t.value.cols()) +
                        ", found '" + line + "'");
    }
    read_row(in, "value", t.value, t.name);
    read_row(in, "m", t.m, t.name);
    read_row(in, "v", t.v, t.name);
  }
  std::string tail;
  std::getline(in, tail);
  if (tail != "end") throw DomainError("weight file: missing end marker");
  return policy;
}

std::unique_ptr<Policy> load_policy(const std::string& path, int expected_n_max) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open weight file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_policy(text.str(), expected_n_max);
}

std::unique_ptr<Policy> extend_to_n(const Policy& source, int n) {
  const auto* gin = dynamic_cast<const GinPolicy*>(&source);
  if (gin == nullptr) {
    if (n == source.n_max()) return source.clone();
    throw DomainError("the " + source.kind() +
                      " policy has a size-dependent input and cannot be extended");
  }
  return std::make_unique<GinPolicy>(gin->extended_to(n));
}

}  // namespace rigid
