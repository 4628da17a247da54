#ifndef RANKEMB_CORPUS_HPP_
#define RANKEMB_CORPUS_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "rankemb/types.hpp"

namespace rankemb {

// F x T feature patch, row-major over [freq][frame].
struct PatchTensor {
  int freq_bins = 0;
  int frames = 0;
  std::vector<double> values;

  double& at(int f, int t) { return values[static_cast<std::size_t>(f) * frames + t]; }
  double at(int f, int t) const { return values[static_cast<std::size_t>(f) * frames + t]; }
};

struct CorpusConfig {
  int n_tracks = 600;
  int n_tags = 24;
  int patch_freq_bins = 24;
  int patch_frames = 64;
  int tags_per_track_lo = 3;
  int tags_per_track_hi = 9;
  double noise_sigma = 0.05;
  int n_eval_patches = 8;  // fixed patches persisted per track for test time
  std::uint64_t seed = 1;

  void validate() const;
};

struct Track {
  TrackId id = -1;
  TagVector tags;
};

// Tracks plus the per-tag prototype patterns their patches are mixed from.
// A patch is the tag-weighted prototype sum, circularly shifted in time as a
// whole, plus iid Gaussian noise; identical tag vectors therefore yield
// identical patches up to the shared shift.
struct Corpus {
  CorpusConfig config;
  std::vector<Track> tracks;                // ascending id, ids are 0..N-1
  std::vector<PatchTensor> prototypes;      // one per tag

  const Track& track(TrackId id) const;
  std::map<TrackId, TagVector> tag_map() const;
  std::map<TrackId, TagVector> tag_map(const std::set<TrackId>& subset) const;
};

struct Split {
  std::set<TrackId> train, validation, test;
};

Corpus generate_corpus(const CorpusConfig& cfg);

// The noiseless, unshifted patch: sum_i tags[i] * prototype[i].
PatchTensor base_patch(const Track& track, const std::vector<PatchTensor>& prototypes);

// Draws `count` patches. Each draw picks one circular time shift in
// [0, shift_range) applied to the whole mix, then adds N(0, noise_sigma)
// noise. shift_range = 0 or 1 disables shifting.
std::vector<PatchTensor> sample_patches(const Track& track,
                                        const std::vector<PatchTensor>& prototypes,
                                        int count, double noise_sigma,
                                        int shift_range, std::uint64_t seed);

// 60/20/20 random partition; sizes are the largest-remainder rounding of the
// ratios, deterministic given seed.
Split split_corpus(const Corpus& corpus, double train_ratio, double val_ratio,
                   double test_ratio, std::uint64_t seed);

std::vector<int> binarize_tags(const TagVector& tags, double threshold);

// Stream seed for a track's patch draws, decoupled per (purpose, track).
std::uint64_t track_patch_seed(std::uint64_t corpus_seed, TrackId id,
                               std::uint64_t purpose);

}  // namespace rankemb

#endif  // RANKEMB_CORPUS_HPP_
