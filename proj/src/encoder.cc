// Copyright 2026 The twinrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twinrank/encoder.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>

namespace twinrank {
namespace {

constexpr double kLayerNormEps = 1e-12;

template <typename S>
Mat<S> AddBias(Mat<S> m, const Mat<S>& bias) {
  m.rowwise() += bias.row(0);
  return m;
}

template <typename S>
Mat<S> LayerNorm(const Mat<S>& x, const Mat<S>& gain, const Mat<S>& bias,
                 LayerNormCache* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index h = x.cols();
  Mat<S> xhat(n, h);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const S mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).eval();
    const S var = centered.square().mean();
    const S is = S(1) / std::sqrt(var + S(kLayerNormEps));
    xhat.row(i) = centered * is;
    inv_std(i) = static_cast<double>(is);
  }
  if constexpr (std::is_same_v<S, double>) {
    if (cache != nullptr) {
      cache->normalized = xhat;
      cache->inv_std = inv_std;
    }
  }
  Mat<S> y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  return y;
}

MatD LayerNormBackward(const LayerNormCache& cache, const MatD& dy,
                       const MatD& gain, MatD& d_gain, MatD& d_bias) {
  const MatD& xhat = cache.normalized;
  d_gain.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  d_bias.row(0) += dy.colwise().sum();
  const MatD dxhat = dy.array().rowwise() * gain.row(0).array();
  MatD dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).mean();
    const double mean_dx = (dxhat.row(i).array() * xhat.row(i).array()).mean();
    dx.row(i) = cache.inv_std(i) * (dxhat.row(i).array() - mean_d -
                                    xhat.row(i).array() * mean_dx);
  }
  return dx;
}

template <typename S>
S Gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / std::sqrt(S(2))));
}

double GeluGrad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

template <typename S>
void CheckFinite(const Mat<S>& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("TransformerLayer: non-finite input");
  }
}

// Inverted dropout mask: entries are 0 or 1 / (1 - rate).
MatD DropoutMask(Eigen::Index rows, Eigen::Index cols, Dropout d) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatD m(rows, cols);
  const double keep = 1.0 / (1.0 - d.rate);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = u(*d.rng) < d.rate ? 0.0 : keep;
  }
  return m;
}

}  // namespace

template <typename S>
void LayerParams<S>::Collect(const std::string& prefix,
                             std::vector<TensorRef<S>>& out) {
  out.push_back({prefix + "attention.query.weight", &wq, true});
  out.push_back({prefix + "attention.query.bias", &bq, false});
  out.push_back({prefix + "attention.key.weight", &wk, true});
  out.push_back({prefix + "attention.key.bias", &bk, false});
  out.push_back({prefix + "attention.value.weight", &wv, true});
  out.push_back({prefix + "attention.value.bias", &bv, false});
  out.push_back({prefix + "attention.output.weight", &wo, true});
  out.push_back({prefix + "attention.output.bias", &bo, false});
  out.push_back({prefix + "attention.norm.gain", &ln1_gain, false});
  out.push_back({prefix + "attention.norm.bias", &ln1_bias, false});
  out.push_back({prefix + "ffn.inner.weight", &w1, true});
  out.push_back({prefix + "ffn.inner.bias", &b1, false});
  out.push_back({prefix + "ffn.output.weight", &w2, true});
  out.push_back({prefix + "ffn.output.bias", &b2, false});
  out.push_back({prefix + "ffn.norm.gain", &ln2_gain, false});
  out.push_back({prefix + "ffn.norm.bias", &ln2_bias, false});
}

template <typename S>
std::vector<TensorRef<S>> EncoderParams<S>::Tensors(const std::string& prefix) {
  std::vector<TensorRef<S>> out;
  out.push_back({prefix + "embedding.token", &token_embedding, true});
  out.push_back({prefix + "embedding.position", &position_embedding, true});
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].Collect(prefix + "layer" + std::to_string(l) + ".", out);
  }
  out.push_back({prefix + "pool.scorer", &pool_scorer, true});
  return out;
}

template <typename S>
template <typename T>
EncoderParams<T> EncoderParams<S>::Cast() const {
  EncoderParams<T> out;
  out.token_embedding = token_embedding.template cast<T>();
  out.position_embedding = position_embedding.template cast<T>();
  out.pool_scorer = pool_scorer.template cast<T>();
  for (const auto& l : layers) {
    LayerParams<T> c;
    c.wq = l.wq.template cast<T>();
    c.bq = l.bq.template cast<T>();
    c.wk = l.wk.template cast<T>();
    c.bk = l.bk.template cast<T>();
    c.wv = l.wv.template cast<T>();
    c.bv = l.bv.template cast<T>();
    c.wo = l.wo.template cast<T>();
    c.bo = l.bo.template cast<T>();
    c.ln1_gain = l.ln1_gain.template cast<T>();
    c.ln1_bias = l.ln1_bias.template cast<T>();
    c.w1 = l.w1.template cast<T>();
    c.b1 = l.b1.template cast<T>();
    c.w2 = l.w2.template cast<T>();
    c.b2 = l.b2.template cast<T>();
    c.ln2_gain = l.ln2_gain.template cast<T>();
    c.ln2_bias = l.ln2_bias.template cast<T>();
    out.layers.push_back(std::move(c));
  }
  return out;
}

EncoderParamsD InitEncoder(const ModelConfig& config, int64_t vocab_rows,
                           int max_positions, Rng& rng) {
  constexpr double kStd = 0.02;
  const int h = config.hidden;
  const int f = config.ffn;
  EncoderParamsD p;
  p.token_embedding = RandomMat(rng, static_cast<int>(vocab_rows), h, kStd);
  p.position_embedding = RandomMat(rng, max_positions, h, kStd);
  for (int l = 0; l < config.layers; ++l) {
    LayerParams<double> lp;
    lp.wq = RandomMat(rng, h, h, kStd);
    lp.bq = MatD::Zero(1, h);
    lp.wk = RandomMat(rng, h, h, kStd);
    lp.bk = MatD::Zero(1, h);
    lp.wv = RandomMat(rng, h, h, kStd);
    lp.bv = MatD::Zero(1, h);
    lp.wo = RandomMat(rng, h, h, kStd);
    lp.bo = MatD::Zero(1, h);
    lp.ln1_gain = MatD::Ones(1, h);
    lp.ln1_bias = MatD::Zero(1, h);
    lp.w1 = RandomMat(rng, h, f, kStd);
    lp.b1 = MatD::Zero(1, f);
    lp.w2 = RandomMat(rng, f, h, kStd);
    lp.b2 = MatD::Zero(1, h);
    lp.ln2_gain = MatD::Ones(1, h);
    lp.ln2_bias = MatD::Zero(1, h);
    p.layers.push_back(std::move(lp));
  }
  p.pool_scorer = MatD::Zero(1, h);
  return p;
}

EncoderParamsD ZerosLike(const EncoderParamsD& like) {
  EncoderParamsD z = like;
  for (auto& t : z.Tensors("")) t.tensor->setZero();
  return z;
}

namespace {

template <typename S>
Mat<S> EmbedRows(const TokenSequence& seq, const EncoderParams<S>& params,
                 int rows) {
  const int h = params.hidden();
  Mat<S> out(rows, h);
  for (int i = 0; i < rows; ++i) {
    const int pos = seq.positions.at(i);
    if (pos < 0 || pos >= params.max_positions()) {
      throw std::invalid_argument("EmbedInput: position " +
                                  std::to_string(pos) + " out of range");
    }
    out.row(i) = params.position_embedding.row(pos);
    for (int32_t b : seq.tokens[i]) {
      if (b < 0 || b >= params.token_embedding.rows()) {
        throw std::invalid_argument("EmbedInput: bucket out of range");
      }
      out.row(i) += params.token_embedding.row(b);
    }
  }
  return out;
}

}  // namespace

template <typename S>
Mat<S> EmbedInput(const TokenSequence& seq, const EncoderParams<S>& params) {
  return EmbedRows(seq, params, seq.max_len());
}

template <typename S>
Mat<S> TransformerLayer(const Mat<S>& hidden, const std::vector<bool>& mask,
                        const LayerParams<S>& p, int heads, LayerCache* cache,
                        Dropout dropout) {
  CheckFinite(hidden);
  const Eigen::Index n = hidden.rows();
  const Eigen::Index h = hidden.cols();
  if (static_cast<Eigen::Index>(mask.size()) != n) {
    throw std::invalid_argument("TransformerLayer: mask size mismatch");
  }
  bool any_key = false;
  for (bool m : mask) any_key = any_key || m;
  if (!any_key) throw std::invalid_argument("TransformerLayer: all masked");
  const Eigen::Index d = h / heads;
  const S scale = S(1) / std::sqrt(static_cast<S>(d));
  constexpr bool kCaching = std::is_same_v<S, double>;
  const bool caching = kCaching && cache != nullptr;
  const bool drop = kCaching && dropout.active();

  const Mat<S> q = AddBias<S>(hidden * p.wq, p.bq);
  const Mat<S> k = AddBias<S>(hidden * p.wk, p.bk);
  const Mat<S> v = AddBias<S>(hidden * p.wv, p.bv);
  Mat<S> context(n, h);
  if (caching) {
    if constexpr (kCaching) {
      cache->input = hidden;
      cache->q = q;
      cache->k = k;
      cache->v = v;
      cache->probs.assign(heads, MatD());
    }
  }
  for (int hd = 0; hd < heads; ++hd) {
    Mat<S> scores =
        (q.middleCols(hd * d, d) * k.middleCols(hd * d, d).transpose()) *
        scale;
    for (Eigen::Index i = 0; i < n; ++i) {
      S mx = -std::numeric_limits<S>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (mask[j]) mx = std::max(mx, scores(i, j));
      }
      S sum = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        scores(i, j) = mask[j] ? std::exp(scores(i, j) - mx) : S(0);
        sum += scores(i, j);
      }
      scores.row(i) /= sum;
    }
    context.middleCols(hd * d, d) = scores * v.middleCols(hd * d, d);
    if constexpr (kCaching) {
      if (caching) cache->probs[hd] = scores;
    }
  }
  Mat<S> attn = AddBias<S>(context * p.wo, p.bo);
  if constexpr (kCaching) {
    if (drop) {
      MatD m = DropoutMask(n, h, dropout);
      attn.array() *= m.array();
      if (caching) cache->attn_drop = std::move(m);
    }
    if (caching) cache->context = context;
  }
  const Mat<S> x1 = LayerNorm<S>(hidden + attn, p.ln1_gain, p.ln1_bias,
                                 caching ? &cache->ln1 : nullptr);
  const Mat<S> pre = AddBias<S>(x1 * p.w1, p.b1);
  const Mat<S> act = pre.unaryExpr([](S x) { return Gelu(x); });
  Mat<S> ffn = AddBias<S>(act * p.w2, p.b2);
  if constexpr (kCaching) {
    if (drop) {
      MatD m = DropoutMask(n, h, dropout);
      ffn.array() *= m.array();
      if (caching) cache->ffn_drop = std::move(m);
    }
    if (caching) {
      cache->x1 = x1;
      cache->pre_act = pre;
      cache->act = act;
    }
  }
  return LayerNorm<S>(x1 + ffn, p.ln2_gain, p.ln2_bias,
                      caching ? &cache->ln2 : nullptr);
}

MatD TransformerLayerBackward(const LayerCache& c, const MatD& d_out,
                              const LayerParams<double>& p,
                              LayerParams<double>& g, int heads) {
  const Eigen::Index h = c.input.cols();
  const Eigen::Index d = h / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  MatD d_x1 =
      LayerNormBackward(c.ln2, d_out, p.ln2_gain, g.ln2_gain, g.ln2_bias);
  MatD d_ffn = d_x1;
  if (c.ffn_drop.size() > 0) d_ffn.array() *= c.ffn_drop.array();
  g.b2.row(0) += d_ffn.colwise().sum();
  g.w2.noalias() += c.act.transpose() * d_ffn;
  MatD d_pre = d_ffn * p.w2.transpose();
  for (Eigen::Index i = 0; i < d_pre.size(); ++i) {
    d_pre.data()[i] *= GeluGrad(c.pre_act.data()[i]);
  }
  g.b1.row(0) += d_pre.colwise().sum();
  g.w1.noalias() += c.x1.transpose() * d_pre;
  d_x1.noalias() += d_pre * p.w1.transpose();

  MatD d_in =
      LayerNormBackward(c.ln1, d_x1, p.ln1_gain, g.ln1_gain, g.ln1_bias);
  MatD d_attn = d_in;
  if (c.attn_drop.size() > 0) d_attn.array() *= c.attn_drop.array();
  g.bo.row(0) += d_attn.colwise().sum();
  g.wo.noalias() += c.context.transpose() * d_attn;
  const MatD d_context = d_attn * p.wo.transpose();

  MatD d_q(c.q.rows(), h), d_k(c.k.rows(), h), d_v(c.v.rows(), h);
  for (int hd = 0; hd < heads; ++hd) {
    const MatD& probs = c.probs[hd];
    const auto dc = d_context.middleCols(hd * d, d);
    const MatD d_probs = dc * c.v.middleCols(hd * d, d).transpose();
    d_v.middleCols(hd * d, d) = probs.transpose() * dc;
    const Eigen::VectorXd row_dot =
        (d_probs.array() * probs.array()).rowwise().sum();
    MatD d_scores = probs.array() * (d_probs.colwise() - row_dot).array();
    d_scores *= scale;
    d_q.middleCols(hd * d, d) = d_scores * c.k.middleCols(hd * d, d);
    d_k.middleCols(hd * d, d) =
        d_scores.transpose() * c.q.middleCols(hd * d, d);
  }
  g.bq.row(0) += d_q.colwise().sum();
  g.bk.row(0) += d_k.colwise().sum();
  g.bv.row(0) += d_v.colwise().sum();
  g.wq.noalias() += c.input.transpose() * d_q;
  g.wk.noalias() += c.input.transpose() * d_k;
  g.wv.noalias() += c.input.transpose() * d_v;
  d_in.noalias() += d_q * p.wq.transpose();
  d_in.noalias() += d_k * p.wk.transpose();
  d_in.noalias() += d_v * p.wv.transpose();
  return d_in;
}

template <typename S>
Pooled<S> Pool(const Mat<S>& hidden, const std::vector<bool>& mask,
               Pooling mode, const Mat<S>& scorer) {
  const Eigen::Index n = hidden.rows();
  if (static_cast<Eigen::Index>(mask.size()) != n) {
    throw std::invalid_argument("Pool: mask size mismatch");
  }
  Pooled<S> out;
  out.weights = RowVec<S>::Zero(n);
  if (mode == Pooling::kClsToken) {
    if (n == 0 || !mask[0]) {
      throw std::invalid_argument("Pool: classification slot is masked");
    }
    out.weights(0) = S(1);
    out.embedding = hidden.row(0);
    return out;
  }
  S mx = -std::numeric_limits<S>::infinity();
  RowVec<S> scores = RowVec<S>::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    scores(i) = hidden.row(i).dot(scorer.row(0));
    mx = std::max(mx, scores(i));
  }
  if (!std::isfinite(mx)) throw std::invalid_argument("Pool: all masked");
  S sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    out.weights(i) = std::exp(scores(i) - mx);
    sum += out.weights(i);
  }
  out.weights /= sum;
  out.embedding = out.weights * hidden;
  return out;
}

template <typename S>
RowVec<S> Encode(const TokenSequence& seq, const EncoderParams<S>& params,
                 const ModelConfig& config, EncoderCache* cache,
                 Dropout dropout) {
  const int n = seq.num_real();
  if (n == 0) throw std::invalid_argument("Encode: empty sequence");
  for (int i = 0; i < n; ++i) {
    if (!seq.mask[i]) {
      throw std::invalid_argument("Encode: real tokens must form a prefix");
    }
  }
  constexpr bool kCaching = std::is_same_v<S, double>;
  Mat<S> hidden = EmbedRows(seq, params, n);
  const std::vector<bool> all_real(n, true);
  if constexpr (kCaching) {
    if (cache != nullptr) {
      cache->num_real = n;
      cache->embedded = hidden;
      cache->layers.assign(params.layers.size(), LayerCache());
    }
  }
  for (size_t l = 0; l < params.layers.size(); ++l) {
    LayerCache* lc = nullptr;
    if constexpr (kCaching) {
      if (cache != nullptr) lc = &cache->layers[l];
    }
    hidden = TransformerLayer<S>(hidden, all_real, params.layers[l],
                                 config.heads, lc, dropout);
  }
  Pooled<S> pooled =
      Pool<S>(hidden, all_real, config.pooling, params.pool_scorer);
  if constexpr (kCaching) {
    if (cache != nullptr) {
      cache->final_hidden = std::move(hidden);
      cache->pool_weights = pooled.weights;
    }
  }
  return pooled.embedding;
}

void EncodeBackward(const TokenSequence& seq, const EncoderCache& cache,
                    const VecD& d_embedding, const EncoderParamsD& params,
                    EncoderParamsD& grads, const ModelConfig& config) {
  const MatD& hid = cache.final_hidden;
  const Eigen::Index n = hid.rows();
  MatD d_hidden = MatD::Zero(n, hid.cols());
  if (config.pooling == Pooling::kClsToken) {
    d_hidden.row(0) = d_embedding;
  } else {
    const VecD& a = cache.pool_weights;
    d_hidden = a.transpose() * d_embedding;
    const Eigen::VectorXd da = hid * d_embedding.transpose();
    const double mean = a.dot(da.transpose());
    const Eigen::VectorXd ds =
        a.transpose().array() * (da.array() - mean);
    d_hidden.noalias() += ds * params.pool_scorer;
    grads.pool_scorer.noalias() += ds.transpose() * hid;
  }
  for (size_t l = params.layers.size(); l-- > 0;) {
    d_hidden = TransformerLayerBackward(cache.layers[l], d_hidden,
                                        params.layers[l], grads.layers[l],
                                        config.heads);
  }
  for (int i = 0; i < cache.num_real; ++i) {
    grads.position_embedding.row(seq.positions[i]) += d_hidden.row(i);
    for (int32_t b : seq.tokens[i]) {
      grads.token_embedding.row(b) += d_hidden.row(i);
    }
  }
}

template struct LayerParams<double>;
template struct LayerParams<float>;
template struct EncoderParams<double>;
template struct EncoderParams<float>;
template EncoderParams<float> EncoderParams<double>::Cast<float>() const;
template EncoderParams<double> EncoderParams<double>::Cast<double>() const;
template MatD EmbedInput(const TokenSequence&, const EncoderParams<double>&);
template Mat<float> EmbedInput(const TokenSequence&,
                               const EncoderParams<float>&);
template MatD TransformerLayer(const MatD&, const std::vector<bool>&,
                               const LayerParams<double>&, int, LayerCache*,
                               Dropout);
template Mat<float> TransformerLayer(const Mat<float>&,
                                     const std::vector<bool>&,
                                     const LayerParams<float>&, int,
                                     LayerCache*, Dropout);
template Pooled<double> Pool(const MatD&, const std::vector<bool>&, Pooling,
                             const MatD&);
template Pooled<float> Pool(const Mat<float>&, const std::vector<bool>&,
                            Pooling, const Mat<float>&);
template VecD Encode(const TokenSequence&, const EncoderParams<double>&,
                     const ModelConfig&, EncoderCache*, Dropout);
template RowVec<float> Encode(const TokenSequence&,
                              const EncoderParams<float>&, const ModelConfig&,
                              EncoderCache*, Dropout);

}  // namespace twinrank
