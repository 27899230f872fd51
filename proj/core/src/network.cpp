#include "newscnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "newscnn/error.hpp"

namespace newscnn {

const char* to_string(Head head) { return head == Head::kBinary ? "binary" : "multiclass3"; }

Head parse_head(std::string_view text) {
  if (text == "binary") return Head::kBinary;
  if (text == "multiclass3" || text == "multiclass") return Head::kMulticlass3;
  throw Error("unknown head '" + std::string(text) + "' (binary|multiclass3)");
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ShapeError("invalid model config: " + msg); };
  if (p < 1) fail("p must be >= 1");
  if (m < 1) fail("m must be >= 1");
  if (filter_widths.empty()) fail("at least one filter width is required");
  std::set<int> distinct(filter_widths.begin(), filter_widths.end());
  if (distinct.size() != filter_widths.size()) fail("filter widths must be distinct");
  for (int h : filter_widths) {
    if (h < 2) fail("filter width " + std::to_string(h) + " < 2");
    if (static_cast<std::size_t>(h) > m) {
      fail("filter width " + std::to_string(h) + " exceeds m=" + std::to_string(m));
    }
  }
  if (filters_per_width < 1) fail("filters_per_width must be >= 1");
  if (pool_size < 1) fail("pool size must be >= 1");
  if (hidden2 < 1) fail("hidden2 must be >= 1");
  if (!(hidden2 < hidden1)) fail("hidden sizes must decrease (hidden2 < hidden1)");
  if (!(hidden1 < pooled_feature_size())) {
    fail("hidden1=" + std::to_string(hidden1) + " must be smaller than the pooled feature length " +
         std::to_string(pooled_feature_size()));
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must lie in [0,1)");
}

std::size_t ModelConfig::pooled_feature_size() const {
  std::size_t total = 0;
  for (int h : filter_widths) {
    if (static_cast<std::size_t>(h) <= m && pool_size > 0) total += filters_per_width * pooled_length(h);
  }
  return total;
}

ModelParameters ModelParameters::zeros(const ModelConfig& c) {
  ModelParameters params;
  for (int h : c.filter_widths) {
    params.conv.push_back({h, Matrix(c.filters_per_width, static_cast<std::size_t>(h) * c.p),
                           std::vector<double>(c.filters_per_width, 0.0)});
  }
  params.w1 = Matrix(c.hidden1, c.pooled_feature_size());
  params.b1.assign(c.hidden1, 0.0);
  params.w2 = Matrix(c.hidden2, c.hidden1);
  params.b2.assign(c.hidden2, 0.0);
  params.w_out = Matrix(c.output_size(), c.hidden2);
  params.b_out.assign(c.output_size(), 0.0);
  return params;
}

std::size_t ModelParameters::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](const std::string&, std::span<const double> v) { n += v.size(); });
  return n;
}

bool ModelParameters::shapes_match(const ModelConfig& c) const {
  ModelParameters ref = zeros(c);
  if (ref.conv.size() != conv.size()) return false;
  for (std::size_t b = 0; b < conv.size(); ++b) {
    const auto& x = conv[b];
    const auto& y = ref.conv[b];
    if (x.width != y.width || x.filters.rows != y.filters.rows || x.filters.cols != y.filters.cols ||
        x.filters.data.size() != y.filters.data.size() || x.bias.size() != y.bias.size()) {
      return false;
    }
  }
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data.size() == b.data.size();
  };
  return same(w1, ref.w1) && b1.size() == ref.b1.size() && same(w2, ref.w2) && b2.size() == ref.b2.size() &&
         same(w_out, ref.w_out) && b_out.size() == ref.b_out.size();
}

ModelParameters init_parameters(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  ModelParameters params = ModelParameters::zeros(c);
  Rng rng = make_stream(seed, "param-init");
  auto glorot = [&](Matrix& w, double fan_in, double fan_out) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& x : w.data) x = dist(rng);
  };
  for (auto& bank : params.conv) {
    // Conv1D kernel (h, p, filters): fan_in = h*p, fan_out = h*filters
    double h = bank.width;
    glorot(bank.filters, h * static_cast<double>(c.p), h * static_cast<double>(c.filters_per_width));
  }
  glorot(params.w1, static_cast<double>(params.w1.cols), static_cast<double>(params.w1.rows));
  glorot(params.w2, static_cast<double>(params.w2.cols), static_cast<double>(params.w2.rows));
  glorot(params.w_out, static_cast<double>(params.w_out.cols), static_cast<double>(params.w_out.rows));
  return params;
}

int ModelOutput::predicted_class(double threshold) const {
  if (head == Head::kBinary) return probs[0] >= threshold ? 1 : 0;
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

namespace {

// Pre-activation map (before relu) for one filter.
void conv_pre(std::span<const double> x, std::span<const double> filter, double bias, std::size_t p,
              std::vector<double>& out) {
  const std::size_t window = filter.size();
  const std::size_t m = x.size() / p;
  const std::size_t h = window / p;
  out.resize(m - h + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = dot(filter, x.subspan(k * p, window)) + bias;
}

void pool_into(std::span<const double> c, std::size_t w, std::span<double> values, std::span<std::size_t> argmax) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    std::size_t begin = j * w;
    std::size_t end = std::min(begin + w, c.size());
    std::size_t best = begin;
    for (std::size_t k = begin + 1; k < end; ++k) {
      if (c[k] > c[best]) best = k;
    }
    values[j] = c[best];
    argmax[j] = best;
  }
}

void dense_into(std::span<const double> in, const Matrix& w, std::span<const double> b, std::vector<double>& out) {
  out.resize(w.rows);
  for (std::size_t k = 0; k < w.rows; ++k) out[k] = dot(w.row(k), in) + b[k];
}

}  // namespace

std::vector<double> conv_forward(std::span<const double> x, std::span<const double> filter, double bias, int h) {
  if (h < 1 || filter.empty() || filter.size() % static_cast<std::size_t>(h) != 0) {
    throw ShapeError("conv_forward: filter length must be h*p");
  }
  const std::size_t p = filter.size() / static_cast<std::size_t>(h);
  if (x.size() % p != 0) throw ShapeError("conv_forward: input length must be m*p");
  if (static_cast<std::size_t>(h) > x.size() / p) throw ShapeError("conv_forward: filter width exceeds m");
  std::vector<double> c;
  conv_pre(x, filter, bias, p, c);
  for (double& v : c) v = relu(v);
  return c;
}

PoolResult maxpool(std::span<const double> c, std::size_t w) {
  if (c.empty()) throw ShapeError("maxpool: empty feature map");
  if (w < 1) throw ShapeError("maxpool: pool size must be >= 1");
  PoolResult r;
  std::size_t n = (c.size() + w - 1) / w;
  r.values.resize(n);
  r.argmax.resize(n);
  pool_into(c, w, r.values, r.argmax);
  return r;
}

std::vector<double> dense_forward(std::span<const double> zprev, const Matrix& w, std::span<const double> b,
                                  Activation activation) {
  if (w.cols != zprev.size() || w.rows != b.size()) throw ShapeError("dense_forward: shape mismatch");
  std::vector<double> out;
  dense_into(zprev, w, b, out);
  if (activation == Activation::kRelu) {
    for (double& v : out) v = relu(v);
  }
  return out;
}

std::vector<double> apply_dropout(std::span<const double> v, double rate, PassMode mode, Rng& rng,
                                  std::vector<std::uint8_t>* mask) {
  std::vector<double> out(v.begin(), v.end());
  if (mode == PassMode::kTest) {
    for (double& x : out) x *= (1.0 - rate);
    return out;
  }
  if (mask) mask->assign(v.size(), 1);
  if (rate <= 0.0) return out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (unit(rng) < rate) {
      out[i] = 0.0;
      if (mask) (*mask)[i] = 0;
    }
  }
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

std::array<double, 3> softmax3(const std::array<double, 3>& z) {
  double mx = std::max({z[0], z[1], z[2]});
  std::array<double, 3> e{std::exp(z[0] - mx), std::exp(z[1] - mx), std::exp(z[2] - mx)};
  double s = e[0] + e[1] + e[2];
  return {e[0] / s, e[1] / s, e[2] / s};
}

double loss_binary(double sigma, int y) {
  if (y != 0 && y != 1) throw Error("binary label must be 0 or 1");
  double s = std::clamp(sigma, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
  return -(y * std::log(s) + (1 - y) * std::log(1.0 - s));
}

double loss_categorical(const std::array<double, 3>& probs, int y) {
  if (y < 0 || y > 2) throw Error("categorical label must be 0, 1 or 2");
  return -std::log(std::clamp(probs[static_cast<std::size_t>(y)], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon));
}

double sample_loss(const ModelOutput& out, int y) {
  return out.head == Head::kBinary ? loss_binary(out.sigma(), y) : loss_categorical(out.probs, y);
}

ModelOutput forward(const EncodedHeadline& enc, const EmbeddingTable& table, const ModelParameters& params,
                    const ModelConfig& config, PassMode mode, Rng* dropout_rng, ForwardCache* cache) {
  const std::size_t p = config.p;
  if (enc.indices.size() != config.m) {
    throw ShapeError("forward: encoded length " + std::to_string(enc.indices.size()) + " != m=" +
                     std::to_string(config.m));
  }
  if (table.dim() != p) throw ShapeError("forward: embedding dim != p");
  if (params.conv.size() != config.filter_widths.size() || params.w1.rows != config.hidden1 ||
      params.w1.cols != config.pooled_feature_size() || params.w2.rows != config.hidden2 ||
      params.w_out.rows != config.output_size()) {
    throw ShapeError("forward: parameters do not match config");
  }
  const bool train = mode == PassMode::kTrain;
  if (train && config.dropout_rate > 0.0 && !dropout_rng) {
    throw Error("forward: train mode with dropout needs a dropout RNG");
  }

  ForwardCache local;
  ForwardCache& c = (train && cache) ? *cache : local;
  c = ForwardCache{};
  c.indices = enc.indices;
  c.x.resize(config.m * p);
  lookup_concat(enc, table, c.x);

  c.z.resize(config.pooled_feature_size());
  c.conv.resize(params.conv.size());
  std::size_t offset = 0;
  std::vector<double> map;
  for (std::size_t b = 0; b < params.conv.size(); ++b) {
    const ConvBank& bank = params.conv[b];
    if (bank.width != config.filter_widths[b] || bank.filters.cols != static_cast<std::size_t>(bank.width) * p) {
      throw ShapeError("forward: conv bank shape mismatch");
    }
    const std::size_t pooled = config.pooled_length(bank.width);
    ConvCache& cc = c.conv[b];
    cc.pre.resize(bank.filters.rows);
    cc.argmax.resize(bank.filters.rows);
    for (std::size_t f = 0; f < bank.filters.rows; ++f) {
      conv_pre(c.x, bank.filters.row(f), bank.bias[f], p, cc.pre[f]);
      map.resize(cc.pre[f].size());
      for (std::size_t k = 0; k < map.size(); ++k) map[k] = relu(cc.pre[f][k]);
      cc.argmax[f].resize(pooled);
      pool_into(map, config.pool_size, std::span<double>(c.z).subspan(offset, pooled), cc.argmax[f]);
      offset += pooled;
    }
  }

  if (params.w1.cols != c.z.size()) throw ShapeError("forward: dense1 input size mismatch");
  Rng unused_rng(0);
  Rng& drop = dropout_rng ? *dropout_rng : unused_rng;

  dense_into(c.z, params.w1, params.b1, c.h1_pre);
  std::vector<double> a1(c.h1_pre.size());
  for (std::size_t i = 0; i < a1.size(); ++i) a1[i] = relu(c.h1_pre[i]);
  c.h1_out = apply_dropout(a1, config.dropout_rate, mode, drop, &c.mask1);

  dense_into(c.h1_out, params.w2, params.b2, c.h2_pre);
  std::vector<double> a2(c.h2_pre.size());
  for (std::size_t i = 0; i < a2.size(); ++i) a2[i] = relu(c.h2_pre[i]);
  c.h2_out = apply_dropout(a2, config.dropout_rate, mode, drop, &c.mask2);

  dense_into(c.h2_out, params.w_out, params.b_out, c.logits);
  ModelOutput out;
  out.head = config.head;
  if (config.head == Head::kBinary) {
    out.probs = {sigmoid(c.logits[0]), 0.0, 0.0};
  } else {
    out.probs = softmax3({c.logits[0], c.logits[1], c.logits[2]});
  }
  c.output = out;
  c.populated = train;
  return out;
}

Gradients Gradients::zeros(const ModelConfig& config) { return {ModelParameters::zeros(config), {}}; }

void backward_accumulate(const ForwardCache& c, int y, const ModelParameters& params, const ModelConfig& config,
                         const EmbeddingTable& table, Gradients& g, double scale) {
  if (!c.populated) throw Error("backward: no train-mode forward cache");
  const std::size_t p = config.p;

  // dL/dlogits. The loss clamps probabilities, but the gradient is taken from
  // the unclamped expression; the two differ only inside the clamp band.
  std::vector<double> delta(c.logits.size());
  if (config.head == Head::kBinary) {
    delta[0] = c.output.probs[0] - static_cast<double>(y);
  } else {
    for (std::size_t k = 0; k < 3; ++k) delta[k] = c.output.probs[k] - (static_cast<int>(k) == y ? 1.0 : 0.0);
  }

  // output layer
  std::vector<double> g_h2(params.w_out.cols, 0.0);
  for (std::size_t k = 0; k < delta.size(); ++k) {
    auto gw = g.model.w_out.row(k);
    auto w = params.w_out.row(k);
    for (std::size_t j = 0; j < gw.size(); ++j) {
      gw[j] += scale * delta[k] * c.h2_out[j];
      g_h2[j] += w[j] * delta[k];
    }
    g.model.b_out[k] += scale * delta[k];
  }

  // hidden 2
  for (std::size_t j = 0; j < g_h2.size(); ++j) {
    if (!c.mask2[j] || c.h2_pre[j] <= 0.0) g_h2[j] = 0.0;
  }
  std::vector<double> g_h1(params.w2.cols, 0.0);
  for (std::size_t j = 0; j < g_h2.size(); ++j) {
    if (g_h2[j] == 0.0) continue;
    auto gw = g.model.w2.row(j);
    auto w = params.w2.row(j);
    for (std::size_t i = 0; i < gw.size(); ++i) {
      gw[i] += scale * g_h2[j] * c.h1_out[i];
      g_h1[i] += w[i] * g_h2[j];
    }
    g.model.b2[j] += scale * g_h2[j];
  }

  // hidden 1
  for (std::size_t i = 0; i < g_h1.size(); ++i) {
    if (!c.mask1[i] || c.h1_pre[i] <= 0.0) g_h1[i] = 0.0;
  }
  std::vector<double> g_z(params.w1.cols, 0.0);
  for (std::size_t i = 0; i < g_h1.size(); ++i) {
    if (g_h1[i] == 0.0) continue;
    auto gw = g.model.w1.row(i);
    auto w = params.w1.row(i);
    for (std::size_t q = 0; q < gw.size(); ++q) {
      gw[q] += scale * g_h1[i] * c.z[q];
      g_z[q] += w[q] * g_h1[i];
    }
    g.model.b1[i] += scale * g_h1[i];
  }

  // pooling + convolution; each map position sits in exactly one pool window
  const bool embed_grad = table.trainable();
  std::vector<double> g_x(embed_grad ? c.x.size() : 0, 0.0);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < params.conv.size(); ++b) {
    const ConvBank& bank = params.conv[b];
    ConvBank& gbank = g.model.conv[b];
    const ConvCache& cc = c.conv[b];
    const std::size_t window = bank.filters.cols;
    for (std::size_t f = 0; f < bank.filters.rows; ++f) {
      auto gfilter = gbank.filters.row(f);
      auto filter = bank.filters.row(f);
      for (std::size_t j = 0; j < cc.argmax[f].size(); ++j, ++offset) {
        double gj = g_z[offset];
        std::size_t pos = cc.argmax[f][j];
        if (gj == 0.0 || cc.pre[f][pos] <= 0.0) continue;
        gbank.bias[f] += scale * gj;
        const double* xw = c.x.data() + pos * p;
        for (std::size_t t = 0; t < window; ++t) gfilter[t] += scale * gj * xw[t];
        if (embed_grad) {
          double* gxw = g_x.data() + pos * p;
          for (std::size_t t = 0; t < window; ++t) gxw[t] += gj * filter[t];
        }
      }
    }
  }

  if (!embed_grad) return;
  for (std::size_t k = 0; k < c.indices.size(); ++k) {
    std::int32_t idx = c.indices[k];
    if (idx == 0) continue;
    auto& row = g.embedding[idx];
    if (row.empty()) row.assign(p, 0.0);
    for (std::size_t t = 0; t < p; ++t) row[t] += scale * g_x[k * p + t];
  }
}

Gradients backward(const ForwardCache& cache, int y, const ModelParameters& params, const ModelConfig& config,
                   const EmbeddingTable& table) {
  Gradients g = Gradients::zeros(config);
  backward_accumulate(cache, y, params, config, table, g, 1.0);
  return g;
}

}  // namespace newscnn
