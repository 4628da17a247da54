#include "rankemb/net.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "rankemb/loss.hpp"
#include "rankemb/rng.hpp"

namespace rankemb {

NetMode net_mode_from_string(const std::string& s) {
  if (s == "embed") return NetMode::kEmbed;
  if (s == "tag") return NetMode::kTag;
  if (s == "linear") return NetMode::kLinear;
  throw ValidationError("unknown net mode: " + s);
}

std::string to_string(NetMode m) {
  switch (m) {
    case NetMode::kEmbed: return "embed";
    case NetMode::kTag: return "tag";
    case NetMode::kLinear: return "linear";
  }
  return "?";
}

TemporalPool temporal_pool_from_string(const std::string& s) {
  if (s == "max") return TemporalPool::kMax;
  if (s == "autopool") return TemporalPool::kAutopool;
  throw ValidationError("unknown temporal pooling: " + s);
}

std::string to_string(TemporalPool p) {
  return p == TemporalPool::kMax ? "max" : "autopool";
}

int ModelConfig::output_dim() const {
  return mode == NetMode::kTag ? n_tags : embedding_dim;
}

void ModelConfig::validate() const {
  if (input_freq_bins < 1 || input_frames < 1) {
    throw ValidationError("model input dimensions must be >= 1");
  }
  if (output_dim() < 1) throw ValidationError("model output dimension must be >= 1");
  int f = input_freq_bins, t = input_frames;
  for (std::size_t l = 0; l < conv_layers.size(); ++l) {
    const auto& spec = conv_layers[l];
    if (spec.channels < 1) throw ValidationError("conv channels must be >= 1");
    if (spec.kernel_h < 1 || spec.kernel_w < 1 || spec.kernel_h % 2 == 0 ||
        spec.kernel_w % 2 == 0) {
      throw ValidationError("conv kernels must be odd and >= 1");
    }
    if (spec.pool_h < 1 || spec.pool_w < 1) {
      throw ValidationError("pool sizes must be >= 1");
    }
    f /= spec.pool_h;
    t /= spec.pool_w;
    if (f < 1 || t < 1) {
      throw ValidationError("feature map vanishes after conv layer " +
                            std::to_string(l + 1));
    }
  }
}

ModelConfig default_model_config() {
  ModelConfig cfg;
  cfg.conv_layers = {{16, 3, 3, 2, 2}, {32, 3, 3, 2, 2}};
  return cfg;
}

double autopool(const std::vector<double>& x, double alpha) {
  if (x.empty()) throw ValidationError("autopool of empty sequence");
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("autopool input must be finite");
  }
  double peak = alpha * x[0];
  for (double v : x) peak = std::max(peak, alpha * v);
  double num = 0.0, den = 0.0;
  for (double v : x) {
    const double e = std::exp(alpha * v - peak);
    num += v * e;
    den += e;
  }
  return num / den;
}

namespace {

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_finite(const std::vector<double>& v, const char* where) {
  double sum = 0.0;
  for (double x : v) sum += x;
  if (!std::isfinite(sum)) {
    throw NumericError(std::string("non-finite activation in ") + where);
  }
}

// out[t] += w * in[t] over the valid 'same'-padding region for one kernel tap.
inline void conv_tap_accumulate(const double* in, double* out, double w, int F,
                                int T, int du, int dv) {
  const int f0 = std::max(0, -du), f1 = std::min(F, F - du);
  const int t0 = std::max(0, -dv), t1 = std::min(T, T - dv);
  for (int f = f0; f < f1; ++f) {
    const double* __restrict src = in + (f + du) * T + (t0 + dv);
    double* __restrict dst = out + f * T + t0;
    for (int t = 0; t < t1 - t0; ++t) dst[t] += w * src[t];
  }
}

// Accumulates sum over the valid region of dOut(f,t) * in(f+du, t+dv).
inline double conv_tap_dot(const double* in, const double* d_out, int F, int T,
                           int du, int dv) {
  const int f0 = std::max(0, -du), f1 = std::min(F, F - du);
  const int t0 = std::max(0, -dv), t1 = std::min(T, T - dv);
  const int n = t1 - t0;
  // Four fixed-order partial sums: lets the row dot vectorize without
  // giving up run-to-run determinism.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (int f = f0; f < f1; ++f) {
    const double* __restrict src = in + (f + du) * T + (t0 + dv);
    const double* __restrict d = d_out + f * T + t0;
    int t = 0;
    for (; t + 4 <= n; t += 4) {
      s0 += d[t] * src[t];
      s1 += d[t + 1] * src[t + 1];
      s2 += d[t + 2] * src[t + 2];
      s3 += d[t + 3] * src[t + 3];
    }
    for (; t < n; ++t) s0 += d[t] * src[t];
  }
  return ((s0 + s1) + (s2 + s3));
}

// in_grad(f+du, t+dv) += w * dOut(f,t): the scatter twin of conv_tap_dot.
inline void conv_tap_scatter(double* in_grad, const double* d_out, double w,
                             int F, int T, int du, int dv) {
  const int f0 = std::max(0, -du), f1 = std::min(F, F - du);
  const int t0 = std::max(0, -dv), t1 = std::min(T, T - dv);
  for (int f = f0; f < f1; ++f) {
    double* __restrict dst = in_grad + (f + du) * T + (t0 + dv);
    const double* __restrict d = d_out + f * T + t0;
    for (int t = 0; t < t1 - t0; ++t) dst[t] += w * d[t];
  }
}

}  // namespace

Net::Net(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  int in_c = 1, in_f = cfg_.input_freq_bins, in_t = cfg_.input_frames;
  std::size_t off = 0;
  for (const auto& spec : cfg_.conv_layers) {
    LayerShape shape;
    shape.channels = spec.channels;
    shape.freq = in_f;
    shape.frames = in_t;
    shape.pooled_freq = in_f / spec.pool_h;
    shape.pooled_frames = in_t / spec.pool_w;
    shapes_.push_back(shape);

    conv_w_off_.push_back(off);
    off += static_cast<std::size_t>(spec.channels) * in_c * spec.kernel_h * spec.kernel_w;
    conv_b_off_.push_back(off);
    off += spec.channels;

    in_c = spec.channels;
    in_f = shape.pooled_freq;
    in_t = shape.pooled_frames;
  }
  dense_in_ = in_c * in_f;  // time axis is collapsed by the temporal stage
  dense_w_off_ = off;
  off += static_cast<std::size_t>(cfg_.output_dim()) * dense_in_;
  dense_b_off_ = off;
  off += cfg_.output_dim();
  alpha_offset_ = off;
  if (cfg_.temporal_pool == TemporalPool::kAutopool) {
    n_alpha_ = cfg_.autopool_shared ? 1 : in_c;
    off += n_alpha_;
  }
  total_params_ = off;
}

std::vector<double> Net::init_params(std::uint64_t seed) const {
  std::vector<double> params(total_params_, 0.0);
  Rng rng(seed);
  int in_c = 1;
  for (std::size_t l = 0; l < cfg_.conv_layers.size(); ++l) {
    const auto& spec = cfg_.conv_layers[l];
    const std::size_t n_w =
        static_cast<std::size_t>(spec.channels) * in_c * spec.kernel_h * spec.kernel_w;
    const double std_dev =
        std::sqrt(2.0 / (static_cast<double>(in_c) * spec.kernel_h * spec.kernel_w));
    for (std::size_t k = 0; k < n_w; ++k) {
      params[conv_w_off_[l] + k] = std_dev * rng.normal();
    }
    in_c = spec.channels;
  }
  const double dense_std = std::sqrt(1.0 / dense_in_);
  const std::size_t n_dense = static_cast<std::size_t>(cfg_.output_dim()) * dense_in_;
  for (std::size_t k = 0; k < n_dense; ++k) {
    params[dense_w_off_ + k] = dense_std * rng.normal();
  }
  // Biases start at zero; autopool alphas start at zero (mean pooling).
  return params;
}

std::vector<double> Net::forward(const std::vector<double>& params,
                                 const PatchTensor& patch,
                                 ForwardCache* cache) const {
  if (params.size() != total_params_) {
    throw DimensionError("parameter vector has wrong size");
  }
  if (patch.freq_bins != cfg_.input_freq_bins || patch.frames != cfg_.input_frames) {
    throw DimensionError("patch is " + std::to_string(patch.freq_bins) + "x" +
                         std::to_string(patch.frames) + ", model expects " +
                         std::to_string(cfg_.input_freq_bins) + "x" +
                         std::to_string(cfg_.input_frames));
  }

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.valid = false;
  cc.input = patch.values;
  check_finite(cc.input, "input");

  const std::size_t n_layers = cfg_.conv_layers.size();
  cc.conv_act.resize(n_layers);
  cc.pooled.resize(n_layers);
  cc.pool_argmax.resize(n_layers);

  const std::vector<double>* in = &cc.input;
  int in_c = 1, in_f = cfg_.input_freq_bins, in_t = cfg_.input_frames;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& spec = cfg_.conv_layers[l];
    const LayerShape& shape = shapes_[l];
    const int F = shape.freq, T = shape.frames, C = shape.channels;
    const int ph = spec.kernel_h / 2, pw = spec.kernel_w / 2;

    auto& act = cc.conv_act[l];
    act.assign(static_cast<std::size_t>(C) * F * T, 0.0);
    const double* wbase = params.data() + conv_w_off_[l];
    for (int oc = 0; oc < C; ++oc) {
      double* plane = act.data() + static_cast<std::size_t>(oc) * F * T;
      const double bias = params[conv_b_off_[l] + oc];
      for (int k = 0; k < F * T; ++k) plane[k] = bias;
      for (int ic = 0; ic < in_c; ++ic) {
        const double* in_plane = in->data() + static_cast<std::size_t>(ic) * in_f * in_t;
        const double* w =
            wbase + (static_cast<std::size_t>(oc) * in_c + ic) * spec.kernel_h * spec.kernel_w;
        for (int u = 0; u < spec.kernel_h; ++u) {
          for (int v = 0; v < spec.kernel_w; ++v) {
            conv_tap_accumulate(in_plane, plane, w[u * spec.kernel_w + v], F, T,
                                u - ph, v - pw);
          }
        }
      }
    }
    for (double& v : act) v = v > 0.0 ? v : 0.0;  // ReLU
    check_finite(act, ("conv" + std::to_string(l + 1)).c_str());

    // Non-overlapping max pooling; trailing rows/cols beyond the last full
    // window are dropped.
    const int PF = shape.pooled_freq, PT = shape.pooled_frames;
    auto& pooled = cc.pooled[l];
    auto& argmax = cc.pool_argmax[l];
    pooled.resize(static_cast<std::size_t>(C) * PF * PT);
    argmax.resize(pooled.size());
    for (int c = 0; c < C; ++c) {
      const double* plane = act.data() + static_cast<std::size_t>(c) * F * T;
      for (int pf = 0; pf < PF; ++pf) {
        for (int pt = 0; pt < PT; ++pt) {
          int best = (pf * spec.pool_h) * T + pt * spec.pool_w;
          double best_v = plane[best];
          for (int df = 0; df < spec.pool_h; ++df) {
            for (int dt = 0; dt < spec.pool_w; ++dt) {
              const int idx = (pf * spec.pool_h + df) * T + (pt * spec.pool_w + dt);
              if (plane[idx] > best_v) {
                best_v = plane[idx];
                best = idx;
              }
            }
          }
          const std::size_t out_idx = (static_cast<std::size_t>(c) * PF + pf) * PT + pt;
          pooled[out_idx] = best_v;
          argmax[out_idx] = static_cast<int>(static_cast<std::size_t>(c) * F * T) + best;
        }
      }
    }

    in = &pooled;
    in_c = C;
    in_f = PF;
    in_t = PT;
  }

  // Temporal stage: collapse the frame axis per (channel, frequency) series.
  const int C = in_c, PF = in_f, PT = in_t;
  cc.tpool_out.resize(static_cast<std::size_t>(C) * PF);
  if (cfg_.temporal_pool == TemporalPool::kMax) {
    cc.tmax_argmax.resize(cc.tpool_out.size());
    for (int cf = 0; cf < C * PF; ++cf) {
      const double* series = in->data() + static_cast<std::size_t>(cf) * PT;
      int best = 0;
      for (int t = 1; t < PT; ++t) {
        if (series[t] > series[best]) best = t;
      }
      cc.tpool_out[cf] = series[best];
      cc.tmax_argmax[cf] = best;
    }
  } else {
    cc.apool_weights.resize(static_cast<std::size_t>(C) * PF * PT);
    for (int c = 0; c < C; ++c) {
      const double alpha = params[alpha_offset_ + (cfg_.autopool_shared ? 0 : c)];
      for (int pf = 0; pf < PF; ++pf) {
        const std::size_t cf = static_cast<std::size_t>(c) * PF + pf;
        const double* series = in->data() + cf * PT;
        double* w = cc.apool_weights.data() + cf * PT;
        double peak = alpha * series[0];
        for (int t = 1; t < PT; ++t) peak = std::max(peak, alpha * series[t]);
        double num = 0.0, den = 0.0;
        for (int t = 0; t < PT; ++t) {
          const double e = std::exp(alpha * series[t] - peak);
          w[t] = e;
          num += series[t] * e;
          den += e;
        }
        cc.tpool_out[cf] = num / den;
        for (int t = 0; t < PT; ++t) w[t] /= den;
      }
    }
  }

  // Dense head on the flattened (channel, frequency) features.
  const int out_dim = cfg_.output_dim();
  cc.dense_z.resize(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    const double* w = params.data() + dense_w_off_ + static_cast<std::size_t>(o) * dense_in_;
    double z = params[dense_b_off_ + o];
    for (int k = 0; k < dense_in_; ++k) z += w[k] * cc.tpool_out[k];
    cc.dense_z[o] = z;
  }
  check_finite(cc.dense_z, "dense");

  cc.output.resize(out_dim);
  cc.embed_norm = 0.0;
  switch (cfg_.mode) {
    case NetMode::kEmbed: {
      double norm_sq = 0.0;
      for (double z : cc.dense_z) norm_sq += z * z;
      const double norm = std::sqrt(norm_sq);
      cc.embed_norm = norm;
      if (norm == 0.0) {
        // Dead network: the convention keeps the operation total.
        std::cerr << "rankemb: warning: zero pre-normalization embedding, "
                     "returning first basis vector\n";
        std::fill(cc.output.begin(), cc.output.end(), 0.0);
        cc.output[0] = 1.0;
      } else {
        for (int o = 0; o < out_dim; ++o) cc.output[o] = cc.dense_z[o] / norm;
      }
      break;
    }
    case NetMode::kTag:
      for (int o = 0; o < out_dim; ++o) cc.output[o] = sigmoid(cc.dense_z[o]);
      break;
    case NetMode::kLinear:
      cc.output = cc.dense_z;
      break;
  }
  cc.valid = true;
  return cc.output;
}

void Net::backward(const std::vector<double>& params, const ForwardCache& cache,
                   const std::vector<double>& grad_output,
                   std::vector<double>* grad) const {
  if (!cache.valid) throw StateError("backward called without a cached forward pass");
  if (grad->size() != total_params_) {
    throw DimensionError("gradient vector has wrong size");
  }
  const int out_dim = cfg_.output_dim();
  if (static_cast<int>(grad_output.size()) != out_dim) {
    throw DimensionError("output gradient has wrong size");
  }

  // Head backward.
  std::vector<double> dz(out_dim, 0.0);
  switch (cfg_.mode) {
    case NetMode::kEmbed: {
      const double norm = cache.embed_norm;
      if (norm == 0.0) break;  // degenerate point: no defined direction
      double dot = 0.0;
      for (int o = 0; o < out_dim; ++o) dot += cache.output[o] * grad_output[o];
      for (int o = 0; o < out_dim; ++o) {
        dz[o] = (grad_output[o] - cache.output[o] * dot) / norm;
      }
      break;
    }
    case NetMode::kTag:
      for (int o = 0; o < out_dim; ++o) {
        dz[o] = grad_output[o] * cache.output[o] * (1.0 - cache.output[o]);
      }
      break;
    case NetMode::kLinear:
      dz = grad_output;
      break;
  }

  // Dense backward.
  std::vector<double> d_flat(dense_in_, 0.0);
  for (int o = 0; o < out_dim; ++o) {
    const double g = dz[o];
    (*grad)[dense_b_off_ + o] += g;
    double* gw = grad->data() + dense_w_off_ + static_cast<std::size_t>(o) * dense_in_;
    const double* w = params.data() + dense_w_off_ + static_cast<std::size_t>(o) * dense_in_;
    for (int k = 0; k < dense_in_; ++k) {
      gw[k] += g * cache.tpool_out[k];
      d_flat[k] += g * w[k];
    }
  }

  // Temporal stage backward.
  const std::size_t n_layers = cfg_.conv_layers.size();
  const LayerShape* last = n_layers ? &shapes_.back() : nullptr;
  const int C = last ? last->channels : 1;
  const int PF = last ? last->pooled_freq : cfg_.input_freq_bins;
  const int PT = last ? last->pooled_frames : cfg_.input_frames;
  const std::vector<double>& tpool_in = n_layers ? cache.pooled.back() : cache.input;

  std::vector<double> d_pooled(static_cast<std::size_t>(C) * PF * PT, 0.0);
  if (cfg_.temporal_pool == TemporalPool::kMax) {
    for (int cf = 0; cf < C * PF; ++cf) {
      d_pooled[static_cast<std::size_t>(cf) * PT + cache.tmax_argmax[cf]] += d_flat[cf];
    }
  } else {
    for (int c = 0; c < C; ++c) {
      const std::size_t a_idx = alpha_offset_ + (cfg_.autopool_shared ? 0 : c);
      const double alpha = params[a_idx];
      double d_alpha = 0.0;
      for (int pf = 0; pf < PF; ++pf) {
        const std::size_t cf = static_cast<std::size_t>(c) * PF + pf;
        const double dp = d_flat[cf];
        const double out = cache.tpool_out[cf];
        const double* x = tpool_in.data() + cf * PT;
        const double* w = cache.apool_weights.data() + cf * PT;
        double* dx = d_pooled.data() + cf * PT;
        for (int t = 0; t < PT; ++t) {
          dx[t] += dp * w[t] * (1.0 + alpha * (x[t] - out));
          d_alpha += dp * w[t] * x[t] * (x[t] - out);
        }
      }
      (*grad)[a_idx] += d_alpha;
    }
  }

  // Conv stack backward, last layer to first.
  std::vector<double> d_conv, d_in;
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& spec = cfg_.conv_layers[li];
    const LayerShape& shape = shapes_[li];
    const int F = shape.freq, T = shape.frames, OC = shape.channels;
    const int ph = spec.kernel_h / 2, pw = spec.kernel_w / 2;

    // Un-pool: gradients flow only to each window's argmax.
    d_conv.assign(static_cast<std::size_t>(OC) * F * T, 0.0);
    const auto& argmax = cache.pool_argmax[li];
    for (std::size_t k = 0; k < argmax.size(); ++k) {
      d_conv[argmax[k]] += d_pooled[k];
    }
    // ReLU: activations stored post-ReLU, so act > 0 marks the open gate.
    const auto& act = cache.conv_act[li];
    for (std::size_t k = 0; k < d_conv.size(); ++k) {
      if (act[k] <= 0.0) d_conv[k] = 0.0;
    }

    const bool first = li == 0;
    const std::vector<double>& in_act = first ? cache.input : cache.pooled[li - 1];
    const int IC = first ? 1 : shapes_[li - 1].channels;

    for (int oc = 0; oc < OC; ++oc) {
      const double* d_plane = d_conv.data() + static_cast<std::size_t>(oc) * F * T;
      double bias_sum = 0.0;
      for (int k = 0; k < F * T; ++k) bias_sum += d_plane[k];
      (*grad)[conv_b_off_[li] + oc] += bias_sum;
    }

    if (!first) d_in.assign(in_act.size(), 0.0);
    const double* wbase = params.data() + conv_w_off_[li];
    double* gwbase = grad->data() + conv_w_off_[li];
    for (int oc = 0; oc < OC; ++oc) {
      const double* d_plane = d_conv.data() + static_cast<std::size_t>(oc) * F * T;
      for (int ic = 0; ic < IC; ++ic) {
        const double* in_plane = in_act.data() + static_cast<std::size_t>(ic) * F * T;
        const std::size_t w_off =
            (static_cast<std::size_t>(oc) * IC + ic) * spec.kernel_h * spec.kernel_w;
        for (int u = 0; u < spec.kernel_h; ++u) {
          for (int v = 0; v < spec.kernel_w; ++v) {
            gwbase[w_off + u * spec.kernel_w + v] +=
                conv_tap_dot(in_plane, d_plane, F, T, u - ph, v - pw);
            if (!first) {
              conv_tap_scatter(d_in.data() + static_cast<std::size_t>(ic) * F * T,
                               d_plane, wbase[w_off + u * spec.kernel_w + v], F,
                               T, u - ph, v - pw);
            }
          }
        }
      }
    }
    if (!first) d_pooled.swap(d_in);
  }
}

std::vector<double> forward_embed(const Net& net, const std::vector<double>& params,
                                  const PatchTensor& patch, ForwardCache* cache) {
  if (net.config().mode != NetMode::kEmbed) {
    throw ValidationError("forward_embed requires an embedding-mode model");
  }
  return net.forward(params, patch, cache);
}

std::vector<double> forward_tags(const Net& net, const std::vector<double>& params,
                                 const PatchTensor& patch, ForwardCache* cache) {
  if (net.config().mode != NetMode::kTag) {
    throw ValidationError("forward_tags requires a tag-mode model");
  }
  return net.forward(params, patch, cache);
}

std::vector<double> mean_forward(const Net& net, const std::vector<double>& params,
                                 const std::vector<PatchTensor>& patches) {
  if (patches.empty()) throw ValidationError("mean_forward over zero patches");
  ForwardCache cache;
  std::vector<double> mean(net.config().output_dim(), 0.0);
  for (const auto& patch : patches) {
    const auto out = net.forward(params, patch, &cache);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += out[i];
  }
  for (double& v : mean) v /= static_cast<double>(patches.size());
  return mean;
}

std::vector<double> track_embedding(const Net& net, const std::vector<double>& params,
                                    const Track& track,
                                    const std::vector<PatchTensor>& prototypes,
                                    int n_patches, double noise_sigma,
                                    int shift_range, std::uint64_t seed) {
  if (net.config().mode != NetMode::kEmbed) {
    throw ValidationError("track_embedding requires an embedding-mode model");
  }
  if (n_patches < 1) throw ValidationError("n_patches must be >= 1");
  const auto patches =
      sample_patches(track, prototypes, n_patches, noise_sigma, shift_range, seed);
  return mean_forward(net, params, patches);
}

std::vector<double> track_tag_estimate(const Net& net, const std::vector<double>& params,
                                       const Track& track,
                                       const std::vector<PatchTensor>& prototypes,
                                       int n_patches, double noise_sigma,
                                       int shift_range, std::uint64_t seed) {
  if (net.config().mode != NetMode::kTag) {
    throw ValidationError("track_tag_estimate requires a tag-mode model");
  }
  if (n_patches < 1) throw ValidationError("n_patches must be >= 1");
  const auto patches =
      sample_patches(track, prototypes, n_patches, noise_sigma, shift_range, seed);
  return mean_forward(net, params, patches);
}

namespace {

PatchTensor random_patch(int F, int T, Rng& rng) {
  PatchTensor p;
  p.freq_bins = F;
  p.frames = T;
  p.values.resize(static_cast<std::size_t>(F) * T);
  for (double& v : p.values) v = rng.normal();
  return p;
}

}  // namespace

double gradient_check(const ModelConfig& cfg, std::uint64_t seed, double fd_step) {
  const Net net(cfg);
  Rng rng(seed_mix(seed, 0x67636865636bULL));

  std::vector<double> params = net.init_params(rng.next_u64());
  // Jitter everything (biases and alphas included) off the symmetric init.
  for (double& p : params) p += 0.1 * rng.normal();

  const int F = cfg.input_freq_bins, T = cfg.input_frames;
  std::vector<PatchTensor> inputs;
  std::vector<int> bce_target;
  std::vector<double> linear_probe;
  // Unit embeddings keep squared distances within [0, 4], so this margin
  // guarantees an active hinge and a live gradient path.
  const double margin = 5.0;
  switch (cfg.mode) {
    case NetMode::kEmbed:
      for (int i = 0; i < 3; ++i) inputs.push_back(random_patch(F, T, rng));
      break;
    case NetMode::kTag:
      inputs.push_back(random_patch(F, T, rng));
      for (int i = 0; i < cfg.output_dim(); ++i) {
        bce_target.push_back(rng.uniform() < 0.5 ? 0 : 1);
      }
      break;
    case NetMode::kLinear:
      inputs.push_back(random_patch(F, T, rng));
      for (int i = 0; i < cfg.output_dim(); ++i) linear_probe.push_back(rng.normal());
      break;
  }

  auto loss_at = [&](const std::vector<double>& p) -> double {
    switch (cfg.mode) {
      case NetMode::kEmbed: {
        const auto fa = net.forward(p, inputs[0], nullptr);
        const auto fp = net.forward(p, inputs[1], nullptr);
        const auto fn = net.forward(p, inputs[2], nullptr);
        return triplet_loss(fa, fp, fn, margin).loss;
      }
      case NetMode::kTag: {
        const auto out = net.forward(p, inputs[0], nullptr);
        return bce_loss(out, bce_target).loss;
      }
      case NetMode::kLinear: {
        const auto out = net.forward(p, inputs[0], nullptr);
        double l = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) l += linear_probe[i] * out[i];
        return l;
      }
    }
    return 0.0;
  };

  // Analytic gradient.
  std::vector<double> grad(net.param_count(), 0.0);
  switch (cfg.mode) {
    case NetMode::kEmbed: {
      ForwardCache ca, cp, cn;
      const auto fa = net.forward(params, inputs[0], &ca);
      const auto fp = net.forward(params, inputs[1], &cp);
      const auto fn = net.forward(params, inputs[2], &cn);
      const auto tl = triplet_loss(fa, fp, fn, margin);
      net.backward(params, ca, tl.grad_anchor, &grad);
      net.backward(params, cp, tl.grad_positive, &grad);
      net.backward(params, cn, tl.grad_negative, &grad);
      break;
    }
    case NetMode::kTag: {
      ForwardCache c;
      const auto out = net.forward(params, inputs[0], &c);
      const auto bl = bce_loss(out, bce_target);
      net.backward(params, c, bl.grad, &grad);
      break;
    }
    case NetMode::kLinear: {
      ForwardCache c;
      net.forward(params, inputs[0], &c);
      net.backward(params, c, linear_probe, &grad);
      break;
    }
  }

  double worst = 0.0;
  std::vector<double> probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    probe[k] = params[k] + fd_step;
    const double lp = loss_at(probe);
    probe[k] = params[k] - fd_step;
    const double lm = loss_at(probe);
    probe[k] = params[k];
    const double numeric = (lp - lm) / (2.0 * fd_step);
    const double err = std::abs(grad[k] - numeric) /
                       std::max({1.0, std::abs(grad[k]), std::abs(numeric)});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace rankemb
