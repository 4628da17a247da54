#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rankemb/net.hpp"
#include "rankemb/rng.hpp"
#include "helpers.hpp"
#include "reference.hpp"

using namespace rankemb;

TEST_CASE("autopool at alpha 0 is exactly the arithmetic mean") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(1 + trial % 9);
    for (auto& v : x) v = rng.uniform(-5.0, 5.0);
    double sum = 0.0;
    for (double v : x) sum += v;
    CHECK(autopool(x, 0.0) == sum / static_cast<double>(x.size()));
  }
}

TEST_CASE("autopool approaches max and min at extreme alpha") {
  const std::vector<double> x = {0.1, 0.9, 0.35, 0.6, 0.75};
  CHECK(std::abs(autopool(x, 200.0) - 0.9) < 1e-6);
  CHECK(std::abs(autopool(x, -200.0) - 0.1) < 1e-6);
  // Far beyond double exp range: max subtraction keeps it stable.
  CHECK(autopool(x, 5000.0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(autopool(x, -5000.0) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("autopool is monotone in alpha") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-2.0, 2.0);
    double prev = -std::numeric_limits<double>::infinity();
    for (double alpha = -25.0; alpha <= 25.0; alpha += 0.5) {
      const double out = autopool(x, alpha);
      CHECK(out >= prev - 1e-12);
      prev = out;
    }
  }
}

TEST_CASE("autopool matches the definitional softmax average") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(5);
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    const double alpha = rng.uniform(-8.0, 8.0);
    CHECK(autopool(x, alpha) ==
          doctest::Approx(reference::autopool(x, alpha)).epsilon(1e-12));
  }
  // Frozen spot value: x={0, ln 2}, alpha=1 gives (2/3) ln 2.
  CHECK(autopool({0.0, std::log(2.0)}, 1.0) ==
        doctest::Approx(2.0 / 3.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("autopool rejects empty or non-finite input") {
  CHECK_THROWS_AS(autopool({}, 0.0), ValidationError);
  CHECK_THROWS_AS(autopool({1.0, std::nan("")}, 0.0), ValidationError);
}

TEST_CASE("model config validation") {
  ModelConfig cfg = testutil::tiny_model_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.conv_layers[0].kernel_h = 2;  // even kernels have no centre
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_model_config();
  cfg.conv_layers[0].pool_h = 7;  // 6 freq bins pool to nothing
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_model_config();
  cfg.embedding_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_model_config(NetMode::kTag);
  cfg.n_tags = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("parameter layout sizes") {
  // conv 4x1x3x3 + 4 bias = 40; pooled 3x6 planes leave 4*3 = 12 dense
  // inputs; embed head 5*12 + 5 = 65.
  Net net(testutil::tiny_model_config());
  CHECK(net.param_count() == 105);
  CHECK(net.dense_inputs() == 12);
  CHECK(net.n_alpha() == 0);

  Net apool(testutil::tiny_model_config(NetMode::kEmbed, TemporalPool::kAutopool));
  CHECK(apool.param_count() == 109);  // one alpha per channel
  CHECK(apool.n_alpha() == 4);

  ModelConfig shared = testutil::tiny_model_config(NetMode::kEmbed, TemporalPool::kAutopool);
  shared.autopool_shared = true;
  CHECK(Net(shared).param_count() == 106);

  Net tagger(testutil::tiny_model_config(NetMode::kTag));
  CHECK(tagger.param_count() == 40 + 6 * 12 + 6);

  const auto& shapes = net.shapes();
  REQUIRE(shapes.size() == 1);
  CHECK(shapes[0].freq == 6);
  CHECK(shapes[0].frames == 12);
  CHECK(shapes[0].pooled_freq == 3);
  CHECK(shapes[0].pooled_frames == 6);
}

TEST_CASE("init_params is seed-deterministic with zero biases and alphas") {
  Net net(testutil::tiny_model_config(NetMode::kEmbed, TemporalPool::kAutopool));
  const auto a = net.init_params(5);
  const auto b = net.init_params(5);
  CHECK(a == b);
  const auto c = net.init_params(6);
  CHECK(a != c);
  for (std::size_t i = net.alpha_offset(); i < a.size(); ++i) CHECK(a[i] == 0.0);
}

namespace {

PatchTensor make_patch(int F, int T, const std::vector<double>& values) {
  PatchTensor p;
  p.freq_bins = F;
  p.frames = T;
  p.values = values;
  return p;
}

// Identity stack: 1x1 conv with unit weight, no spatial pooling, linear head
// wired one-to-one, so the output is the temporal pool of the ReLU'd input.
ModelConfig passthrough_config(TemporalPool pool) {
  ModelConfig cfg;
  cfg.mode = NetMode::kLinear;
  cfg.input_freq_bins = 2;
  cfg.input_frames = 3;
  cfg.conv_layers = {{1, 1, 1, 1, 1}};
  cfg.temporal_pool = pool;
  cfg.embedding_dim = 2;
  cfg.n_tags = 2;
  return cfg;
}

std::vector<double> passthrough_params(const Net& net) {
  std::vector<double> params(net.param_count(), 0.0);
  params[0] = 1.0;                     // conv weight
  // dense: row o reads pooled feature o.
  const std::size_t dense = 2;         // conv w + b
  params[dense + 0 * 2 + 0] = 1.0;
  params[dense + 1 * 2 + 1] = 1.0;
  return params;
}

}  // namespace

TEST_CASE("forward wires conv, relu and the temporal stage as specified") {
  const PatchTensor patch = make_patch(2, 3, {1.0, -5.0, 2.0, 7.0, 0.0, -3.0});

  SUBCASE("temporal max picks the per-row peak after relu") {
    Net net(passthrough_config(TemporalPool::kMax));
    const auto out = net.forward(passthrough_params(net), patch, nullptr);
    CHECK(out == std::vector<double>{2.0, 7.0});
  }
  SUBCASE("autopool at zero alpha averages the relu'd rows") {
    Net net(passthrough_config(TemporalPool::kAutopool));
    const auto out = net.forward(passthrough_params(net), patch, nullptr);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(3.0 / 3.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
  }
}

TEST_CASE("embed outputs live on the unit sphere") {
  Net net(testutil::tiny_model_config());
  const auto params = net.init_params(11);
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    PatchTensor patch;
    patch.freq_bins = 6;
    patch.frames = 12;
    patch.values.resize(72);
    for (auto& v : patch.values) v = rng.normal();
    const auto out = forward_embed(net, params, patch);
    double norm = 0.0;
    for (double v : out) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tag outputs are likelihoods") {
  Net net(testutil::tiny_model_config(NetMode::kTag));
  const auto params = net.init_params(13);
  Rng rng(37);
  PatchTensor patch;
  patch.freq_bins = 6;
  patch.frames = 12;
  patch.values.resize(72);
  for (auto& v : patch.values) v = rng.normal();
  const auto out = forward_tags(net, params, patch);
  REQUIRE(out.size() == 6);
  for (double v : out) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  // Mode guards.
  Net embed(testutil::tiny_model_config());
  CHECK_THROWS_AS(forward_tags(embed, embed.init_params(1), patch), ValidationError);
  CHECK_THROWS_AS(forward_embed(net, params, patch), ValidationError);
}

TEST_CASE("a dead embedding falls back to the first basis vector") {
  Net net(testutil::tiny_model_config());
  const std::vector<double> zeros(net.param_count(), 0.0);
  PatchTensor patch = make_patch(6, 12, std::vector<double>(72, 0.5));
  ForwardCache cache;
  const auto out = net.forward(zeros, patch, &cache);
  std::vector<double> want(5, 0.0);
  want[0] = 1.0;
  CHECK(out == want);

  // The convention is flat: backward sends no gradient through it.
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(zeros, cache, {1.0, -1.0, 0.5, 0.0, 2.0}, &grad);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("forward validates patches and parameters") {
  Net net(testutil::tiny_model_config());
  const auto params = net.init_params(1);
  CHECK_THROWS_AS(net.forward(params, make_patch(5, 12, std::vector<double>(60, 0.0)),
                              nullptr),
                  DimensionError);
  CHECK_THROWS_AS(net.forward(std::vector<double>(3, 0.0),
                              make_patch(6, 12, std::vector<double>(72, 0.0)), nullptr),
                  DimensionError);
  std::vector<double> bad(72, 0.0);
  bad[40] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(net.forward(params, make_patch(6, 12, bad), nullptr), NumericError);
}

TEST_CASE("backward needs a valid cache and matching shapes") {
  Net net(testutil::tiny_model_config());
  const auto params = net.init_params(2);
  ForwardCache cache;
  std::vector<double> grad(net.param_count(), 0.0);
  CHECK_THROWS_AS(net.backward(params, cache, std::vector<double>(5, 0.0), &grad),
                  StateError);
  net.forward(params, make_patch(6, 12, std::vector<double>(72, 0.1)), &cache);
  CHECK_THROWS_AS(net.backward(params, cache, std::vector<double>(4, 0.0), &grad),
                  DimensionError);
  std::vector<double> small(3, 0.0);
  CHECK_THROWS_AS(net.backward(params, cache, std::vector<double>(5, 0.0), &small),
                  DimensionError);
}

TEST_CASE("mean_forward averages per-patch outputs") {
  Net net(testutil::tiny_model_config());
  const auto params = net.init_params(21);
  Rng rng(55);
  std::vector<PatchTensor> patches(3);
  for (auto& p : patches) {
    p.freq_bins = 6;
    p.frames = 12;
    p.values.resize(72);
    for (auto& v : p.values) v = rng.normal();
  }
  const auto mean = mean_forward(net, params, patches);
  std::vector<double> want(5, 0.0);
  for (const auto& p : patches) {
    const auto out = forward_embed(net, params, p);
    for (int i = 0; i < 5; ++i) want[i] += out[i] / 3.0;
  }
  REQUIRE(mean.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(mean[i] == doctest::Approx(want[i]).epsilon(1e-12));
  CHECK_THROWS_AS(mean_forward(net, params, {}), ValidationError);
}

TEST_CASE("gradient check passes for every stack and loss pairing") {
  // Full seed sweeps live in the acceptance suite; two seeds per pairing here.
  for (auto pool : {TemporalPool::kMax, TemporalPool::kAutopool}) {
    for (auto mode : {NetMode::kEmbed, NetMode::kTag}) {
      for (std::uint64_t seed : {1ULL, 2ULL}) {
        const double err = gradient_check(testutil::tiny_model_config(mode, pool), seed);
        INFO("mode ", static_cast<int>(mode), " pool ", static_cast<int>(pool),
             " seed ", seed);
        CHECK(err < 1e-4);
      }
    }
  }
}

TEST_CASE("gradient check covers the linear head and shared alpha too") {
  ModelConfig cfg = testutil::tiny_model_config(NetMode::kLinear, TemporalPool::kAutopool);
  cfg.autopool_shared = true;
  CHECK(gradient_check(cfg, 9) < 1e-4);
}

TEST_CASE("mode and pool names round trip") {
  CHECK(net_mode_from_string("embed") == NetMode::kEmbed);
  CHECK(net_mode_from_string("tag") == NetMode::kTag);
  CHECK(net_mode_from_string("linear") == NetMode::kLinear);
  CHECK(to_string(NetMode::kTag) == "tag");
  CHECK_THROWS_AS(net_mode_from_string("softmax"), ValidationError);
  CHECK(temporal_pool_from_string("max") == TemporalPool::kMax);
  CHECK(temporal_pool_from_string("autopool") == TemporalPool::kAutopool);
  CHECK_THROWS_AS(temporal_pool_from_string("avg"), ValidationError);
}
