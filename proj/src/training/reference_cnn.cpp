/* Copyright 2026 The Semod Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "semod/training/reference_cnn.hpp"

#include <algorithm>
#include <cmath>

#include "semod/error.hpp"
#include "semod/rng.hpp"

namespace semod::training {

namespace {

// "Same" 3x3 convolution over a zero-padded input of (h+2) x (w+2).
void conv3x3_forward(const double* in_pad, int cin, int h, int w, const double* weights,
                     const double* bias, int cout, double* out) {
  const int pw = w + 2;
  const std::size_t in_plane = static_cast<std::size_t>(h + 2) * pw;
  const std::size_t out_plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < cout; ++oc) {
    double* dst_plane = out + oc * out_plane;
    std::fill_n(dst_plane, out_plane, bias[oc]);
    for (int ic = 0; ic < cin; ++ic) {
      const double* src_plane = in_pad + ic * in_plane;
      const double* k = weights + (static_cast<std::size_t>(oc) * cin + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = k[ky * 3 + kx];
          for (int y = 0; y < h; ++y) {
            const double* src = src_plane + (y + ky) * pw + kx;
            double* dst = dst_plane + y * w;
            for (int x = 0; x < w; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and, when grad_in_pad is non-null, the
// gradient w.r.t. the padded input.
void conv3x3_backward(const double* in_pad, int cin, int h, int w, const double* weights,
                      int cout, const double* grad_out, double* grad_w, double* grad_b,
                      double* grad_in_pad) {
  const int pw = w + 2;
  const std::size_t in_plane = static_cast<std::size_t>(h + 2) * pw;
  const std::size_t out_plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < cout; ++oc) {
    const double* g_plane = grad_out + oc * out_plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) bsum += g_plane[i];
    grad_b[oc] += bsum;
    for (int ic = 0; ic < cin; ++ic) {
      const double* src_plane = in_pad + ic * in_plane;
      const std::size_t kbase = (static_cast<std::size_t>(oc) * cin + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double wv = weights[kbase + ky * 3 + kx];
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            const double* src = src_plane + (y + ky) * pw + kx;
            const double* g = g_plane + y * w;
            for (int x = 0; x < w; ++x) acc += g[x] * src[x];
            if (grad_in_pad != nullptr) {
              double* gi = grad_in_pad + ic * in_plane + (y + ky) * pw + kx;
              for (int x = 0; x < w; ++x) gi[x] += wv * g[x];
            }
          }
          grad_w[kbase + ky * 3 + kx] += acc;
        }
      }
    }
  }
}

}  // namespace

struct ReferenceCnn::Activations {
  std::vector<double> in_pad;     // 3 x (S+2)^2
  std::vector<double> h1;         // c1 x S^2, post-ReLU
  std::vector<double> pool_pad;   // c1 x (Q+2)^2
  std::vector<int> pool_arg;      // c1 x Q^2, index into h1
  std::vector<double> h2;         // c2 x Q^2, post-ReLU
  std::vector<double> features;   // [max ; mean], 2*c2
  std::vector<int> max_arg;       // c2
  std::array<double, 3> logits{};
};

ReferenceCnn::ReferenceCnn(const Config& config, std::uint64_t seed) : config_(config) {
  if (config.input_size < 4 || config.input_size % 2 != 0) {
    throw ParameterError("reference_cnn input_size must be even and >= 4");
  }
  if (config.conv1_channels < 1 || config.conv2_channels < 1) {
    throw ParameterError("reference_cnn channel counts must be >= 1");
  }
  const std::size_t c1 = config.conv1_channels;
  const std::size_t c2 = config.conv2_channels;
  layout_.conv1_w = 0;
  layout_.conv1_b = layout_.conv1_w + c1 * 3 * 9;
  layout_.conv2_w = layout_.conv1_b + c1;
  layout_.conv2_b = layout_.conv2_w + c2 * c1 * 9;
  layout_.fc_w = layout_.conv2_b + c2;
  layout_.fc_b = layout_.fc_w + 3 * 2 * c2;
  layout_.total = layout_.fc_b + 3;
  params_.assign(layout_.total, 0.0);

  Rng rng(seed);
  auto init = [&](std::size_t begin, std::size_t end, double stddev) {
    for (std::size_t i = begin; i < end; ++i) params_[i] = rng.normal() * stddev;
  };
  init(layout_.conv1_w, layout_.conv1_b, std::sqrt(2.0 / 27.0));
  init(layout_.conv2_w, layout_.conv2_b, std::sqrt(2.0 / (9.0 * c1)));
  init(layout_.fc_w, layout_.fc_b, std::sqrt(1.0 / (2.0 * c2)));
}

nlohmann::json ReferenceCnn::architecture() const {
  return {{"kind", kind()},
          {"input_size", config_.input_size},
          {"conv1_channels", config_.conv1_channels},
          {"conv2_channels", config_.conv2_channels}};
}

std::pair<std::size_t, std::size_t> ReferenceCnn::head_range() const {
  return {layout_.fc_w, layout_.total};
}

void ReferenceCnn::check_input(const InputTensor& x) const {
  if (x.channels != 3 || x.height != config_.input_size || x.width != config_.input_size ||
      x.values.size() != static_cast<std::size_t>(3 * x.height * x.width)) {
    throw InputError("input tensor does not match the backbone's 3x" +
                     std::to_string(config_.input_size) + "x" +
                     std::to_string(config_.input_size) + " shape");
  }
}

void ReferenceCnn::run_forward(const InputTensor& x, Activations& a) const {
  check_input(x);
  const int s = config_.input_size;
  const int q = s / 2;
  const int c1 = config_.conv1_channels;
  const int c2 = config_.conv2_channels;
  const int sp = s + 2;
  const int qp = q + 2;

  a.in_pad.assign(static_cast<std::size_t>(3) * sp * sp, 0.0);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < s; ++y) {
      std::copy_n(&x.values[(static_cast<std::size_t>(c) * s + y) * s], s,
                  &a.in_pad[(static_cast<std::size_t>(c) * sp + y + 1) * sp + 1]);
    }
  }

  a.h1.assign(static_cast<std::size_t>(c1) * s * s, 0.0);
  conv3x3_forward(a.in_pad.data(), 3, s, s, &params_[layout_.conv1_w], &params_[layout_.conv1_b],
                  c1, a.h1.data());
  for (double& v : a.h1) v = std::max(v, 0.0);

  a.pool_pad.assign(static_cast<std::size_t>(c1) * qp * qp, 0.0);
  a.pool_arg.assign(static_cast<std::size_t>(c1) * q * q, 0);
  for (int c = 0; c < c1; ++c) {
    for (int y = 0; y < q; ++y) {
      for (int x2 = 0; x2 < q; ++x2) {
        int best = (c * s + 2 * y) * s + 2 * x2;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int idx = (c * s + 2 * y + dy) * s + 2 * x2 + dx;
            if (a.h1[idx] > a.h1[best]) best = idx;
          }
        }
        a.pool_arg[(c * q + y) * q + x2] = best;
        a.pool_pad[(static_cast<std::size_t>(c) * qp + y + 1) * qp + x2 + 1] = a.h1[best];
      }
    }
  }

  a.h2.assign(static_cast<std::size_t>(c2) * q * q, 0.0);
  conv3x3_forward(a.pool_pad.data(), c1, q, q, &params_[layout_.conv2_w],
                  &params_[layout_.conv2_b], c2, a.h2.data());
  for (double& v : a.h2) v = std::max(v, 0.0);

  a.features.assign(static_cast<std::size_t>(2) * c2, 0.0);
  a.max_arg.assign(c2, 0);
  const int plane = q * q;
  for (int c = 0; c < c2; ++c) {
    const double* p = &a.h2[static_cast<std::size_t>(c) * plane];
    int best = 0;
    double sum = 0.0;
    for (int i = 0; i < plane; ++i) {
      if (p[i] > p[best]) best = i;
      sum += p[i];
    }
    a.max_arg[c] = best;
    a.features[c] = p[best];
    a.features[c2 + c] = sum / plane;
  }

  const int f = 2 * c2;
  for (int k = 0; k < 3; ++k) {
    double z = params_[layout_.fc_b + k];
    const double* w = &params_[layout_.fc_w + static_cast<std::size_t>(k) * f];
    for (int i = 0; i < f; ++i) z += w[i] * a.features[i];
    a.logits[k] = z;
  }
}

Logits3 ReferenceCnn::forward(const InputTensor& x) const {
  Activations a;
  run_forward(x, a);
  return Logits3(a.logits);
}

std::vector<double> ReferenceCnn::embed(const InputTensor& x) const {
  Activations a;
  run_forward(x, a);
  return a.features;
}

LossValue ReferenceCnn::accumulate_gradient(const InputTensor& x, FineLabel target, double alpha,
                                            std::span<double> grad) const {
  if (grad.size() != params_.size()) throw InputError("gradient buffer has the wrong size");
  Activations a;
  run_forward(x, a);
  const Logits3 logits(a.logits);
  const LossValue loss = hierarchical_ce_from_logits(logits, target, alpha);
  const Gradient3 dz = hierarchical_ce_grad(logits, target, alpha);

  const int s = config_.input_size;
  const int q = s / 2;
  const int c1 = config_.conv1_channels;
  const int c2 = config_.conv2_channels;
  const int qp = q + 2;
  const int f = 2 * c2;
  const int plane = q * q;

  std::vector<double> dfeat(f, 0.0);
  for (int k = 0; k < 3; ++k) {
    grad[layout_.fc_b + k] += dz[k];
    double* gw = &grad[layout_.fc_w + static_cast<std::size_t>(k) * f];
    const double* w = &params_[layout_.fc_w + static_cast<std::size_t>(k) * f];
    for (int i = 0; i < f; ++i) {
      gw[i] += dz[k] * a.features[i];
      dfeat[i] += dz[k] * w[i];
    }
  }

  std::vector<double> dh2(a.h2.size(), 0.0);
  for (int c = 0; c < c2; ++c) {
    double* d = &dh2[static_cast<std::size_t>(c) * plane];
    const double* h = &a.h2[static_cast<std::size_t>(c) * plane];
    const double avg_grad = dfeat[c2 + c] / plane;
    for (int i = 0; i < plane; ++i) d[i] = avg_grad;
    d[a.max_arg[c]] += dfeat[c];
    for (int i = 0; i < plane; ++i) {
      if (h[i] <= 0.0) d[i] = 0.0;
    }
  }

  std::vector<double> dpool_pad(a.pool_pad.size(), 0.0);
  conv3x3_backward(a.pool_pad.data(), c1, q, q, &params_[layout_.conv2_w], c2, dh2.data(),
                   &grad[layout_.conv2_w], &grad[layout_.conv2_b], dpool_pad.data());

  std::vector<double> dh1(a.h1.size(), 0.0);
  for (int c = 0; c < c1; ++c) {
    for (int y = 0; y < q; ++y) {
      for (int x2 = 0; x2 < q; ++x2) {
        const int src = a.pool_arg[(c * q + y) * q + x2];
        if (a.h1[src] > 0.0) {
          dh1[src] += dpool_pad[(static_cast<std::size_t>(c) * qp + y + 1) * qp + x2 + 1];
        }
      }
    }
  }

  conv3x3_backward(a.in_pad.data(), 3, s, s, &params_[layout_.conv1_w], c1, dh1.data(),
                   &grad[layout_.conv1_w], &grad[layout_.conv1_b], nullptr);
  return loss;
}

std::unique_ptr<Backbone> ReferenceCnn::clone() const {
  return std::make_unique<ReferenceCnn>(*this);
}

InputTensor to_input(const RgbImage& image, int width, int height) {
  const RgbImage sized = resize_bilinear(image, width, height);
  InputTensor t;
  t.channels = 3;
  t.height = height;
  t.width = width;
  t.values.resize(static_cast<std::size_t>(3) * width * height);
  const auto bytes = sized.bytes();
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < 3; ++c) t.values[c * plane + i] = bytes[i * 3 + c] / 255.0 - 0.5;
  }
  return t;
}

std::unique_ptr<Backbone> make_backbone(const nlohmann::json& architecture, std::uint64_t seed) {
  const std::string kind = architecture.value("kind", std::string("reference_cnn"));
  if (kind != "reference_cnn") throw ParameterError("unknown backbone kind '" + kind + "'");
  for (const auto& [key, value] : architecture.items()) {
    if (key != "kind" && key != "input_size" && key != "conv1_channels" &&
        key != "conv2_channels") {
      throw ParameterError("unknown model key '" + key + "'");
    }
  }
  ReferenceCnn::Config config;
  try {
    config.input_size = architecture.value("input_size", config.input_size);
    config.conv1_channels = architecture.value("conv1_channels", config.conv1_channels);
    config.conv2_channels = architecture.value("conv2_channels", config.conv2_channels);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("model: ") + e.what());
  }
  return std::make_unique<ReferenceCnn>(config, seed);
}

}  // namespace semod::training
