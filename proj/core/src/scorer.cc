// Copyright 2026 The DUIP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "duip/scorer.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "duip/errors.h"
#include "duip/ops.h"

namespace duip {
namespace {

constexpr double kInitRange = 0.1;
constexpr double kNormEpsilon = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

double gelu(double u) {
  return 0.5 * u * (1.0 + std::tanh(kGeluScale * (u + kGeluCubic * u * u * u)));
}

double gelu_grad(double u) {
  const double t = std::tanh(kGeluScale * (u + kGeluCubic * u * u * u));
  return 0.5 * (1.0 + t) +
         0.5 * u * (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * u * u);
}

// Row-wise layer norm of x [rows x d].
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  NormCache& cache) {
  const std::size_t rows = x.rows();
  const std::size_t d = x.cols();
  cache.normalized = Tensor({rows, d});
  cache.inv_std.assign(rows, 0.0);
  Tensor y({rows, d});
  for (std::size_t r = 0; r < rows; ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv_std = 1.0 / std::sqrt(var + kNormEpsilon);
    cache.inv_std[r] = inv_std;
    auto nr = cache.normalized.row(r);
    auto yr = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      nr[c] = (xr[c] - mean) * inv_std;
      yr[c] = gain[c] * nr[c] + bias[c];
    }
  }
  return y;
}

// Accumulates gain/bias gradients and adds d loss / d x into `dx`.
void layer_norm_backward(const Tensor& dy, const Tensor& gain,
                         const NormCache& cache, Tensor& d_gain, Tensor& d_bias,
                         Tensor& dx) {
  const std::size_t rows = dy.rows();
  const std::size_t d = dy.cols();
  std::vector<double> dn(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto dyr = dy.row(r);
    const auto nr = cache.normalized.row(r);
    double mean_dn = 0.0;
    double mean_dn_n = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      d_gain[c] += dyr[c] * nr[c];
      d_bias[c] += dyr[c];
      dn[c] = dyr[c] * gain[c];
      mean_dn += dn[c];
      mean_dn_n += dn[c] * nr[c];
    }
    mean_dn /= static_cast<double>(d);
    mean_dn_n /= static_cast<double>(d);
    auto dxr = dx.row(r);
    const double inv_std = cache.inv_std[r];
    for (std::size_t c = 0; c < d; ++c) {
      dxr[c] += inv_std * (dn[c] - mean_dn - nr[c] * mean_dn_n);
    }
  }
}

void check_prompt(const ScorerParams& params, const PromptSequence& prompt) {
  if (prompt.length() == 0) throw DomainError("scorer: empty prompt");
  if (prompt.length() > params.max_len()) {
    throw DomainError("scorer: prompt of length " +
                      std::to_string(prompt.length()) +
                      " exceeds max_len " + std::to_string(params.max_len()));
  }
  if (prompt.dim() != params.dim() || prompt.embeddings.rows() != prompt.length()) {
    throw DimensionError("scorer: prompt embeddings are " +
                         shape_to_string(prompt.embeddings.shape()) +
                         " but the model width is " + std::to_string(params.dim()));
  }
  if (params.heads == 0 || params.dim() % params.heads != 0) {
    throw DimensionError("scorer: width " + std::to_string(params.dim()) +
                         " is not divisible by " + std::to_string(params.heads) +
                         " heads");
  }
}

}  // namespace

ScorerParams ScorerParams::zeros(const ScorerConfig& config) {
  if (config.n_items == 0 || config.n_tokens < config.n_items ||
      config.d_lm == 0 || config.d_ff == 0 || config.max_len == 0 ||
      config.heads == 0) {
    throw DomainError("scorer dimensions must be positive");
  }
  if (config.d_lm % config.heads != 0) {
    throw DimensionError("d_lm " + std::to_string(config.d_lm) +
                         " is not divisible by " + std::to_string(config.heads) +
                         " heads");
  }
  const std::size_t d = config.d_lm;
  ScorerParams p;
  p.heads = config.heads;
  p.token_embed = Tensor({config.n_tokens, d});
  p.pos_embed = Tensor({config.max_len, d});
  p.layers.resize(config.layers);
  for (auto& layer : p.layers) {
    layer.ln1_gain = Tensor({d});
    layer.ln1_bias = Tensor({d});
    layer.w_q = Tensor({d, d});
    layer.w_k = Tensor({d, d});
    layer.w_v = Tensor({d, d});
    layer.w_o = Tensor({d, d});
    layer.ln2_gain = Tensor({d});
    layer.ln2_bias = Tensor({d});
    layer.w_ff1 = Tensor({d, config.d_ff});
    layer.w_ff2 = Tensor({config.d_ff, d});
  }
  p.lnf_gain = Tensor({d});
  p.lnf_bias = Tensor({d});
  p.head_w = Tensor({d, config.n_items});
  p.head_b = Tensor({config.n_items});
  return p;
}

ScorerParams ScorerParams::initialize(const ScorerConfig& config, Rng& rng) {
  ScorerParams p = zeros(config);
  p.for_each([&](std::string_view name, Tensor& t) {
    if (name.ends_with("_gain")) {
      t.fill(1.0);
    } else if (t.rank() == 2) {
      rng.fill_uniform(t, -kInitRange, kInitRange);
    }
  });
  return p;
}

ScorerForward forward_scorer(const ScorerParams& params,
                             const PromptSequence& prompt) {
  check_prompt(params, prompt);
  const std::size_t T = prompt.length();
  const std::size_t d = params.dim();
  const std::size_t n_heads = params.heads;
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  ScorerForward out;
  ScorerTrace& tr = out.trace;
  tr.length = T;
  tr.layers.resize(params.layers.size());

  Tensor x = prompt.embeddings;
  for (std::size_t t = 0; t < T; ++t) axpy(1.0, params.pos_embed.row(t), x.row(t));

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const ScorerLayer& layer = params.layers[l];
    LayerTrace& lt = tr.layers[l];
    lt.input = x;
    lt.attn_in = layer_norm(x, layer.ln1_gain, layer.ln1_bias, lt.ln1);
    lt.q = Tensor({T, d});
    lt.k = Tensor({T, d});
    lt.v = Tensor({T, d});
    matmul_acc(lt.attn_in, layer.w_q, lt.q);
    matmul_acc(lt.attn_in, layer.w_k, lt.k);
    matmul_acc(lt.attn_in, layer.w_v, lt.v);

    lt.attn_concat = Tensor({T, d});
    lt.attn_probs.assign(n_heads, Tensor({T, T}));
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * dh;
      Tensor& probs = lt.attn_probs[h];
      for (std::size_t i = 0; i < T; ++i) {
        const auto qi = lt.q.row(i).subspan(off, dh);
        auto pr = probs.row(i).first(i + 1);
        for (std::size_t j = 0; j <= i; ++j) {
          pr[j] = dot(qi, lt.k.row(j).subspan(off, dh)) * scale;
        }
        softmax_inplace(pr);
        auto zi = lt.attn_concat.row(i).subspan(off, dh);
        for (std::size_t j = 0; j <= i; ++j) {
          axpy(pr[j], lt.v.row(j).subspan(off, dh), zi);
        }
      }
    }
    matmul_acc(lt.attn_concat, layer.w_o, x);
    lt.mid = x;

    lt.ff_in = layer_norm(x, layer.ln2_gain, layer.ln2_bias, lt.ln2);
    lt.ff_pre = Tensor({T, layer.w_ff1.cols()});
    matmul_acc(lt.ff_in, layer.w_ff1, lt.ff_pre);
    lt.ff_act = lt.ff_pre;
    for (double& v : lt.ff_act.data()) v = gelu(v);
    matmul_acc(lt.ff_act, layer.w_ff2, x);
  }

  const auto last = x.row(T - 1);
  tr.final_state = Tensor({1, d}, std::vector<double>(last.begin(), last.end()));
  Tensor normed = layer_norm(tr.final_state, params.lnf_gain, params.lnf_bias, tr.lnf);
  tr.final_norm = Tensor({d}, std::vector<double>(normed.data().begin(),
                                                  normed.data().end()));

  Tensor logits = params.head_b;
  vecmat_acc(tr.final_norm.data(), params.head_w, logits.data());
  softmax_inplace(logits.data());
  out.scored.probs = std::move(logits);
  out.scored.ranking = rank_by_probability(out.scored.probs);
  return out;
}

ScoredItems score_candidates(const ScorerParams& params,
                             const PromptSequence& prompt) {
  return forward_scorer(params, prompt).scored;
}

std::vector<std::size_t> rank_by_probability(const Tensor& probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b];
  });
  return order;
}

std::vector<std::size_t> top_k_by_probability(const Tensor& probs, std::size_t k) {
  if (k < 1 || k > probs.size()) {
    throw DomainError("top_k: k = " + std::to_string(k) + " outside [1, " +
                      std::to_string(probs.size()) + "]");
  }
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

std::size_t predict_next(const ScorerParams& params, const PromptSequence& prompt) {
  const ScoredItems scored = score_candidates(params, prompt);
  std::size_t best = 0;
  for (std::size_t i = 1; i < scored.probs.size(); ++i) {
    if (scored.probs[i] > scored.probs[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> top_k(const ScorerParams& params,
                               const PromptSequence& prompt, std::size_t k) {
  if (k < 1 || k > params.n_items()) {
    throw DomainError("top_k: k = " + std::to_string(k) + " outside [1, " +
                      std::to_string(params.n_items()) + "]");
  }
  return top_k_by_probability(score_candidates(params, prompt).probs, k);
}

Tensor scorer_backward_acc(const ScorerParams& params,
                           const PromptSequence& prompt,
                           const ScorerForward& forward, std::size_t target,
                           ScorerParams& grads) {
  const ScorerTrace& tr = forward.trace;
  const std::size_t T = prompt.length();
  const std::size_t d = params.dim();
  const std::size_t n = params.n_items();
  if (tr.length != T || tr.layers.size() != params.layers.size() ||
      forward.scored.probs.size() != n || tr.final_norm.size() != d) {
    throw StateError("scorer_backward: cached forward pass does not match this prompt");
  }
  if (grads.layers.size() != params.layers.size() ||
      !grads.token_embed.same_shape(params.token_embed) ||
      !grads.head_w.same_shape(params.head_w)) {
    throw StateError("scorer_backward: gradient buffers do not match parameters");
  }
  if (target >= n) {
    throw IndexError("scorer_backward: target " + std::to_string(target) +
                     " outside " + std::to_string(n) + " items");
  }
  const std::size_t n_heads = params.heads;
  const std::size_t dh = d / n_heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // loss = -log(p_t + eps); dloss/dz_k = -p_t / (p_t + eps) * (delta_tk - p_k)
  const Tensor& probs = forward.scored.probs;
  const double pt = probs[target];
  // Below the floor the loss is flat.
  const double w = pt > kCrossEntropyEpsilon ? 1.0 : 0.0;
  std::vector<double> dlogits(n);
  for (std::size_t k = 0; k < n; ++k) {
    dlogits[k] = w * (probs[k] - (k == target ? 1.0 : 0.0));
  }
  axpy(1.0, dlogits, grads.head_b.data());
  outer_acc(tr.final_norm.data(), dlogits, grads.head_w);
  Tensor dnorm({1, d});
  matvec_acc(params.head_w, dlogits, dnorm.data());

  Tensor dfinal({1, d});
  layer_norm_backward(dnorm, params.lnf_gain, tr.lnf, grads.lnf_gain,
                      grads.lnf_bias, dfinal);

  // Gradient of the residual stream, [T x d]. Only the last row is seeded.
  Tensor dx({T, d});
  std::copy(dfinal.data().begin(), dfinal.data().end(), dx.row(T - 1).begin());

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const ScorerLayer& layer = params.layers[l];
    ScorerLayer& g = grads.layers[l];
    const LayerTrace& lt = tr.layers[l];

    // Feed-forward branch: x_out = mid + gelu(ff_in W1) W2.
    Tensor dact({T, layer.w_ff2.rows()});
    matmul_bt_acc(dx, layer.w_ff2, dact);
    matmul_at_acc(lt.ff_act, dx, g.w_ff2);
    for (std::size_t i = 0; i < dact.size(); ++i) dact[i] *= gelu_grad(lt.ff_pre[i]);
    matmul_at_acc(lt.ff_in, dact, g.w_ff1);
    Tensor dff_in({T, d});
    matmul_bt_acc(dact, layer.w_ff1, dff_in);
    layer_norm_backward(dff_in, layer.ln2_gain, lt.ln2, g.ln2_gain, g.ln2_bias, dx);

    // Attention branch: mid = input + concat W_O.
    Tensor dconcat({T, d});
    matmul_bt_acc(dx, layer.w_o, dconcat);
    matmul_at_acc(lt.attn_concat, dx, g.w_o);

    Tensor dq({T, d}), dk({T, d}), dv({T, d});
    std::vector<double> dscore(T);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const std::size_t off = h * dh;
      const Tensor& pr = lt.attn_probs[h];
      for (std::size_t i = 0; i < T; ++i) {
        const auto dzi = dconcat.row(i).subspan(off, dh);
        const auto pi = pr.row(i);
        double weighted = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          axpy(pi[j], dzi, dv.row(j).subspan(off, dh));
          dscore[j] = dot(dzi, lt.v.row(j).subspan(off, dh));
          weighted += pi[j] * dscore[j];
        }
        auto dqi = dq.row(i).subspan(off, dh);
        const auto qi = lt.q.row(i).subspan(off, dh);
        for (std::size_t j = 0; j <= i; ++j) {
          const double ds = pi[j] * (dscore[j] - weighted) * scale;
          if (ds == 0.0) continue;
          axpy(ds, lt.k.row(j).subspan(off, dh), dqi);
          axpy(ds, qi, dk.row(j).subspan(off, dh));
        }
      }
    }
    matmul_at_acc(lt.attn_in, dq, g.w_q);
    matmul_at_acc(lt.attn_in, dk, g.w_k);
    matmul_at_acc(lt.attn_in, dv, g.w_v);
    Tensor dattn_in({T, d});
    matmul_bt_acc(dq, layer.w_q, dattn_in);
    matmul_bt_acc(dk, layer.w_k, dattn_in);
    matmul_bt_acc(dv, layer.w_v, dattn_in);
    layer_norm_backward(dattn_in, layer.ln1_gain, lt.ln1, g.ln1_gain, g.ln1_bias, dx);
  }

  for (std::size_t t = 0; t < T; ++t) {
    axpy(1.0, dx.row(t), grads.pos_embed.row(t));
    const std::size_t tok = prompt.token_ids[t];
    if (prompt.slots[t] != PromptSlot::kSoft && tok != kNoToken) {
      if (tok >= grads.token_embed.rows()) {
        throw StateError("scorer_backward: prompt token outside embedding table");
      }
      axpy(1.0, dx.row(t), grads.token_embed.row(tok));
    }
  }
  return dx;
}

ScorerGradients scorer_backward(const ScorerParams& params,
                                const PromptSequence& prompt,
                                const ScorerForward& forward,
                                std::size_t target) {
  ScorerGradients out{params, Tensor()};
  out.params.for_each([](std::string_view, Tensor& t) { t.set_zero(); });
  out.prompt = scorer_backward_acc(params, prompt, forward, target, out.params);
  return out;
}

}  // namespace duip
