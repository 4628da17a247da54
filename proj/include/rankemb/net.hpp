#ifndef RANKEMB_NET_HPP_
#define RANKEMB_NET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "rankemb/corpus.hpp"

namespace rankemb {

enum class NetMode { kEmbed, kTag, kLinear };
enum class TemporalPool { kMax, kAutopool };

NetMode net_mode_from_string(const std::string& s);
std::string to_string(NetMode m);
TemporalPool temporal_pool_from_string(const std::string& s);
std::string to_string(TemporalPool p);

struct ConvLayerSpec {
  int channels = 16;
  int kernel_h = 3, kernel_w = 3;  // odd; convolution is zero-padded 'same'
  int pool_h = 2, pool_w = 2;      // non-overlapping max pooling, floor division
};

struct ModelConfig {
  NetMode mode = NetMode::kEmbed;
  int input_freq_bins = 24;
  int input_frames = 64;
  std::vector<ConvLayerSpec> conv_layers;
  TemporalPool temporal_pool = TemporalPool::kMax;
  bool autopool_shared = false;  // one alpha for all channels instead of per-channel
  int embedding_dim = 32;        // embed mode output size
  int n_tags = 24;               // tag mode output size

  int output_dim() const;
  void validate() const;
};

ModelConfig default_model_config();

// Softmax-weighted average with sharpness alpha: alpha=0 is the arithmetic
// mean, alpha -> +inf the max, alpha -> -inf the min. Stable under large
// alpha via max subtraction.
double autopool(const std::vector<double>& x, double alpha);

// Shapes of the feature maps flowing through the stack.
struct LayerShape {
  int channels, freq, frames;          // conv output (same-padded)
  int pooled_freq, pooled_frames;      // after spatial max pooling
};

// Activations cached by forward() for the matching backward() call.
// Buffers are reused across calls on the same Cache object.
struct ForwardCache {
  std::vector<double> input;                  // patch values
  std::vector<std::vector<double>> conv_act;  // post-ReLU, per layer
  std::vector<std::vector<double>> pooled;    // post spatial pool, per layer
  std::vector<std::vector<int>> pool_argmax;  // per layer, index into conv_act plane
  std::vector<double> tpool_out;              // C*F' after temporal stage
  std::vector<int> tmax_argmax;               // temporal max indices
  std::vector<double> apool_weights;          // autopool softmax weights, C*F'*T'
  std::vector<double> dense_z;                // final pre-activation
  std::vector<double> output;
  double embed_norm = 0.0;
  bool valid = false;
};

// Configurable conv stack -> temporal pooling -> dense head, with hand-written
// backward. All parameters live in one flat vector whose layout is fixed by
// the config: conv weights+bias per layer, dense weights, dense bias, then
// the autopool alphas (absent in max mode).
class Net {
 public:
  explicit Net(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t param_count() const { return total_params_; }
  int n_alpha() const { return n_alpha_; }
  std::size_t alpha_offset() const { return alpha_offset_; }
  int dense_inputs() const { return dense_in_; }

  std::vector<double> init_params(std::uint64_t seed) const;

  // Output is the post-head vector: L2-normalized embedding (embed mode),
  // sigmoid likelihoods (tag mode) or the raw affine output (linear mode).
  std::vector<double> forward(const std::vector<double>& params,
                              const PatchTensor& patch,
                              ForwardCache* cache) const;

  // Accumulates d(loss)/d(params) into `grad` (+=), given d(loss)/d(output).
  void backward(const std::vector<double>& params, const ForwardCache& cache,
                const std::vector<double>& grad_output,
                std::vector<double>* grad) const;

 private:
  ModelConfig cfg_;
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> conv_w_off_, conv_b_off_;
  std::size_t dense_w_off_ = 0, dense_b_off_ = 0, alpha_offset_ = 0;
  std::size_t total_params_ = 0;
  int dense_in_ = 0;
  int n_alpha_ = 0;
};

std::vector<double> forward_embed(const Net& net, const std::vector<double>& params,
                                  const PatchTensor& patch,
                                  ForwardCache* cache = nullptr);
std::vector<double> forward_tags(const Net& net, const std::vector<double>& params,
                                 const PatchTensor& patch,
                                 ForwardCache* cache = nullptr);

// Plain arithmetic mean of per-patch outputs; not re-normalized in embed mode.
std::vector<double> mean_forward(const Net& net, const std::vector<double>& params,
                                 const std::vector<PatchTensor>& patches);

std::vector<double> track_embedding(const Net& net, const std::vector<double>& params,
                                    const Track& track,
                                    const std::vector<PatchTensor>& prototypes,
                                    int n_patches, double noise_sigma,
                                    int shift_range, std::uint64_t seed);
std::vector<double> track_tag_estimate(const Net& net, const std::vector<double>& params,
                                       const Track& track,
                                       const std::vector<PatchTensor>& prototypes,
                                       int n_patches, double noise_sigma,
                                       int shift_range, std::uint64_t seed);

// Central-difference check of backward() through the mode's natural loss
// (triplet for embed, summed BCE for tag, a fixed linear functional for
// linear mode). Returns the worst error max(|a-n|) / max(1, |a|, |n|).
double gradient_check(const ModelConfig& cfg, std::uint64_t seed,
                      double fd_step = 1e-5);

}  // namespace rankemb

#endif  // RANKEMB_NET_HPP_
