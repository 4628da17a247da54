#ifndef RANKEMB_TESTS_HELPERS_HPP_
#define RANKEMB_TESTS_HELPERS_HPP_

#include <filesystem>
#include <random>
#include <string>

#include "rankemb/corpus.hpp"
#include "rankemb/net.hpp"

namespace testutil {

// Unique scratch directory, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rankemb-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline rankemb::CorpusConfig tiny_corpus_config(std::uint64_t seed = 7) {
  rankemb::CorpusConfig cfg;
  cfg.n_tracks = 20;
  cfg.n_tags = 6;
  cfg.patch_freq_bins = 6;
  cfg.patch_frames = 12;
  cfg.tags_per_track_lo = 2;
  cfg.tags_per_track_hi = 4;
  cfg.noise_sigma = 0.05;
  cfg.n_eval_patches = 2;
  cfg.seed = seed;
  return cfg;
}

// One conv layer, small planes: big enough to exercise every stage, small
// enough that a forward pass costs microseconds.
inline rankemb::ModelConfig tiny_model_config(
    rankemb::NetMode mode = rankemb::NetMode::kEmbed,
    rankemb::TemporalPool pool = rankemb::TemporalPool::kMax) {
  rankemb::ModelConfig cfg;
  cfg.mode = mode;
  cfg.input_freq_bins = 6;
  cfg.input_frames = 12;
  cfg.conv_layers = {{4, 3, 3, 2, 2}};
  cfg.temporal_pool = pool;
  cfg.embedding_dim = 5;
  cfg.n_tags = 6;
  return cfg;
}

}  // namespace testutil

#endif  // RANKEMB_TESTS_HELPERS_HPP_
