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

#include "twinrank/crossing.h"

#include <stdexcept>

namespace twinrank {
namespace {

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
void CheckSameLength(const RowVec<S>& q, const RowVec<S>& k) {
  if (q.size() != k.size()) {
    throw std::invalid_argument("crossing: embedding length mismatch");
  }
}

}  // namespace

template <typename S>
std::vector<TensorRef<S>> CosineHeadParams<S>::Tensors(
    const std::string& prefix) {
  return {{prefix + "cosine.scale", &scale, false},
          {prefix + "cosine.bias", &bias, false}};
}

template <typename S>
std::vector<TensorRef<S>> ResidualHeadParams<S>::Tensors(
    const std::string& prefix) {
  std::vector<TensorRef<S>> out;
  for (size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = prefix + "residual.block" + std::to_string(i) + ".";
    out.push_back({p + "hidden.weight", &blocks[i].w_hidden, true});
    out.push_back({p + "hidden.bias", &blocks[i].b_hidden, false});
    out.push_back({p + "output.weight", &blocks[i].w_out, true});
    out.push_back({p + "output.bias", &blocks[i].b_out, false});
  }
  out.push_back({prefix + "residual.logit.weight", &logit_weight, true});
  out.push_back({prefix + "residual.logit.bias", &logit_bias, false});
  return out;
}

CosineHeadParams<double> InitCosineHead() {
  CosineHeadParams<double> p;
  p.scale = MatD::Constant(1, 1, 1.0);
  p.bias = MatD::Zero(1, 1);
  return p;
}

ResidualHeadParams<double> InitResidualHead(int hidden, int blocks, Rng& rng) {
  ResidualHeadParams<double> p;
  for (int i = 0; i < blocks; ++i) {
    typename ResidualHeadParams<double>::Block b;
    b.w_hidden = RandomMat(rng, hidden, hidden, 0.02);
    b.b_hidden = MatD::Zero(1, hidden);
    b.w_out = MatD::Zero(hidden, hidden);
    b.b_out = MatD::Zero(1, hidden);
    p.blocks.push_back(std::move(b));
  }
  p.logit_weight = RandomMat(rng, 1, hidden, 0.02);
  p.logit_bias = MatD::Zero(1, 1);
  return p;
}

template <typename S>
CosineHeadParams<float> CastHead(const CosineHeadParams<S>& p) {
  return {p.scale.template cast<float>(), p.bias.template cast<float>()};
}

template <typename S>
ResidualHeadParams<float> CastHead(const ResidualHeadParams<S>& p) {
  ResidualHeadParams<float> out;
  for (const auto& b : p.blocks) {
    out.blocks.push_back(
        {b.w_hidden.template cast<float>(), b.b_hidden.template cast<float>(),
         b.w_out.template cast<float>(), b.b_out.template cast<float>()});
  }
  out.logit_weight = p.logit_weight.template cast<float>();
  out.logit_bias = p.logit_bias.template cast<float>();
  return out;
}

template <typename S>
double Cosine(const RowVec<S>& q, const RowVec<S>& k) {
  CheckSameLength(q, k);
  const double nq = q.norm();
  const double nk = k.norm();
  if (nq == 0.0 || nk == 0.0) {
    throw std::invalid_argument("Cosine: zero-norm vector");
  }
  return static_cast<double>(q.dot(k)) / (nq * nk);
}

template <typename S>
double CosineHead(const RowVec<S>& q, const RowVec<S>& k,
                  const CosineHeadParams<S>& params) {
  return Sigmoid(params.scale(0, 0) * Cosine(q, k) + params.bias(0, 0));
}

template <typename S>
RowVec<S> MaxCombine(const RowVec<S>& q, const RowVec<S>& k) {
  CheckSameLength(q, k);
  return q.cwiseMax(k);
}

template <typename S>
RowVec<S> ResidualTransform(const RowVec<S>& q, const RowVec<S>& k,
                            const ResidualHeadParams<S>& params) {
  RowVec<S> x = MaxCombine(q, k);
  for (const auto& b : params.blocks) {
    RowVec<S> a = x * b.w_hidden + b.b_hidden;
    a = a.unaryExpr([](S v) { return Gelu(v); });
    x += a * b.w_out + b.b_out;
  }
  return x;
}

template <typename S>
double ResidualHead(const RowVec<S>& q, const RowVec<S>& k,
                    const ResidualHeadParams<S>& params) {
  const RowVec<S> y = ResidualTransform(q, k, params);
  return Sigmoid(static_cast<double>(y.dot(params.logit_weight.row(0))) +
                 params.logit_bias(0, 0));
}

double SquaredDistanceUnit(std::span<const double> q,
                           std::span<const double> k) {
  if (q.size() != k.size()) {
    throw std::invalid_argument("SquaredDistanceUnit: length mismatch");
  }
  double nq = 0, nk = 0, d = 0;
  for (size_t i = 0; i < q.size(); ++i) {
    nq += q[i] * q[i];
    nk += k[i] * k[i];
    d += (q[i] - k[i]) * (q[i] - k[i]);
  }
  if (std::abs(std::sqrt(nq) - 1.0) > 1e-6 ||
      std::abs(std::sqrt(nk) - 1.0) > 1e-6) {
    throw std::invalid_argument("SquaredDistanceUnit: input is not unit norm");
  }
  return d;
}

double CosineHeadLogit(const VecD& q, const VecD& k,
                       const CosineHeadParams<double>& params) {
  return params.scale(0, 0) * Cosine(q, k) + params.bias(0, 0);
}

HeadGrad CosineHeadBackward(const VecD& q, const VecD& k,
                            const CosineHeadParams<double>& params,
                            double d_logit, CosineHeadParams<double>& grads) {
  const double nq = q.norm();
  const double nk = k.norm();
  const double c = Cosine(q, k);
  grads.scale(0, 0) += d_logit * c;
  grads.bias(0, 0) += d_logit;
  const double dc = d_logit * params.scale(0, 0);
  HeadGrad g;
  g.d_q = dc * (k / (nq * nk) - (c / (nq * nq)) * q);
  g.d_k = dc * (q / (nq * nk) - (c / (nk * nk)) * k);
  return g;
}

double ResidualHeadLogit(const VecD& q, const VecD& k,
                         const ResidualHeadParams<double>& params) {
  return ResidualTransform(q, k, params).dot(params.logit_weight.row(0)) +
         params.logit_bias(0, 0);
}

HeadGrad ResidualHeadBackward(const VecD& q, const VecD& k,
                              const ResidualHeadParams<double>& params,
                              double d_logit,
                              ResidualHeadParams<double>& grads) {
  const size_t nb = params.blocks.size();
  std::vector<VecD> inputs(nb), pre(nb), act(nb);
  VecD x = MaxCombine(q, k);
  for (size_t i = 0; i < nb; ++i) {
    const auto& b = params.blocks[i];
    inputs[i] = x;
    pre[i] = x * b.w_hidden + b.b_hidden;
    act[i] = pre[i].unaryExpr([](double v) { return Gelu(v); });
    x += act[i] * b.w_out + b.b_out;
  }
  grads.logit_weight.row(0) += d_logit * x;
  grads.logit_bias(0, 0) += d_logit;
  VecD dy = d_logit * params.logit_weight.row(0);
  for (size_t i = nb; i-- > 0;) {
    const auto& b = params.blocks[i];
    auto& gb = grads.blocks[i];
    gb.w_out.noalias() += act[i].transpose() * dy;
    gb.b_out.row(0) += dy;
    VecD da = dy * b.w_out.transpose();
    for (Eigen::Index j = 0; j < da.size(); ++j) da(j) *= GeluGrad(pre[i](j));
    gb.w_hidden.noalias() += inputs[i].transpose() * da;
    gb.b_hidden.row(0) += da;
    dy.noalias() += da * b.w_hidden.transpose();
  }
  HeadGrad g;
  g.d_q = VecD::Zero(q.size());
  g.d_k = VecD::Zero(k.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    if (q(j) >= k(j)) {
      g.d_q(j) = dy(j);
    } else {
      g.d_k(j) = dy(j);
    }
  }
  return g;
}

template struct CosineHeadParams<double>;
template struct CosineHeadParams<float>;
template struct ResidualHeadParams<double>;
template struct ResidualHeadParams<float>;
template CosineHeadParams<float> CastHead(const CosineHeadParams<double>&);
template ResidualHeadParams<float> CastHead(const ResidualHeadParams<double>&);
template double Cosine(const VecD&, const VecD&);
template double Cosine(const RowVec<float>&, const RowVec<float>&);
template double CosineHead(const VecD&, const VecD&,
                           const CosineHeadParams<double>&);
template double CosineHead(const RowVec<float>&, const RowVec<float>&,
                           const CosineHeadParams<float>&);
template VecD MaxCombine(const VecD&, const VecD&);
template RowVec<float> MaxCombine(const RowVec<float>&, const RowVec<float>&);
template VecD ResidualTransform(const VecD&, const VecD&,
                                const ResidualHeadParams<double>&);
template RowVec<float> ResidualTransform(const RowVec<float>&,
                                         const RowVec<float>&,
                                         const ResidualHeadParams<float>&);
template double ResidualHead(const VecD&, const VecD&,
                             const ResidualHeadParams<double>&);
template double ResidualHead(const RowVec<float>&, const RowVec<float>&,
                             const ResidualHeadParams<float>&);

}  // namespace twinrank
