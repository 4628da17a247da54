#include "rankemb/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "rankemb/rng.hpp"

namespace rankemb {

void CorpusConfig::validate() const {
  if (n_tracks < 3) throw ValidationError("n_tracks must be >= 3");
  if (n_tags < 1) throw ValidationError("n_tags must be >= 1");
  if (patch_freq_bins < 1 || patch_frames < 1) {
    throw ValidationError("patch dimensions must be >= 1");
  }
  if (tags_per_track_lo < 1 || tags_per_track_lo > tags_per_track_hi ||
      tags_per_track_hi > n_tags) {
    throw ValidationError("tags_per_track range must satisfy 1 <= lo <= hi <= n_tags");
  }
  if (noise_sigma < 0.0 || !std::isfinite(noise_sigma)) {
    throw ValidationError("noise_sigma must be non-negative");
  }
  if (n_eval_patches < 1) throw ValidationError("n_eval_patches must be >= 1");
}

const Track& Corpus::track(TrackId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tracks.size() ||
      tracks[id].id != id) {
    throw LookupError("unknown track id " + std::to_string(id));
  }
  return tracks[id];
}

std::map<TrackId, TagVector> Corpus::tag_map() const {
  std::map<TrackId, TagVector> out;
  for (const auto& t : tracks) out[t.id] = t.tags;
  return out;
}

std::map<TrackId, TagVector> Corpus::tag_map(const std::set<TrackId>& subset) const {
  std::map<TrackId, TagVector> out;
  for (TrackId id : subset) out[id] = track(id).tags;
  return out;
}

Corpus generate_corpus(const CorpusConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.config = cfg;

  // One seeded stream for the whole corpus; prototypes first, then tracks in
  // id order, so every value has a fixed position in the stream.
  Rng rng(seed_mix(cfg.seed, 0x70726f746fULL));

  corpus.prototypes.resize(cfg.n_tags);
  for (auto& proto : corpus.prototypes) {
    proto.freq_bins = cfg.patch_freq_bins;
    proto.frames = cfg.patch_frames;
    proto.values.resize(static_cast<std::size_t>(cfg.patch_freq_bins) * cfg.patch_frames);
    for (double& v : proto.values) v = rng.normal();
  }

  corpus.tracks.resize(cfg.n_tracks);
  std::vector<int> tag_indices(cfg.n_tags);
  for (int i = 0; i < cfg.n_tags; ++i) tag_indices[i] = i;
  for (int id = 0; id < cfg.n_tracks; ++id) {
    Track& track = corpus.tracks[id];
    track.id = id;
    track.tags.assign(cfg.n_tags, 0.0);
    const int n_active = static_cast<int>(
        rng.uniform_int(cfg.tags_per_track_lo, cfg.tags_per_track_hi));
    // Partial Fisher-Yates picks the active tags without replacement.
    for (int i = 0; i < n_active; ++i) {
      const int j = static_cast<int>(rng.uniform_int(i, cfg.n_tags - 1));
      std::swap(tag_indices[i], tag_indices[j]);
      // Active likelihoods in (0.2, 1.0], separated from the inactive zeros.
      track.tags[tag_indices[i]] = 1.0 - 0.8 * rng.uniform();
    }
  }
  return corpus;
}

PatchTensor base_patch(const Track& track, const std::vector<PatchTensor>& prototypes) {
  if (prototypes.empty()) throw ValidationError("no prototypes");
  if (track.tags.size() != prototypes.size()) {
    throw DimensionError("track has " + std::to_string(track.tags.size()) +
                         " tags but there are " +
                         std::to_string(prototypes.size()) + " prototypes");
  }
  PatchTensor base;
  base.freq_bins = prototypes[0].freq_bins;
  base.frames = prototypes[0].frames;
  base.values.assign(prototypes[0].values.size(), 0.0);
  for (std::size_t i = 0; i < prototypes.size(); ++i) {
    const double w = track.tags[i];
    if (w == 0.0) continue;
    const auto& pv = prototypes[i].values;
    for (std::size_t k = 0; k < pv.size(); ++k) base.values[k] += w * pv[k];
  }
  return base;
}

std::vector<PatchTensor> sample_patches(const Track& track,
                                        const std::vector<PatchTensor>& prototypes,
                                        int count, double noise_sigma,
                                        int shift_range, std::uint64_t seed) {
  if (count < 1) throw ValidationError("patch count must be >= 1");
  const PatchTensor base = base_patch(track, prototypes);
  const int F = base.freq_bins, T = base.frames;

  Rng rng(seed);
  std::vector<PatchTensor> patches(count);
  for (auto& patch : patches) {
    patch.freq_bins = F;
    patch.frames = T;
    patch.values.resize(base.values.size());
    const int shift =
        shift_range > 1 ? static_cast<int>(rng.uniform_int(0, shift_range - 1)) : 0;
    for (int f = 0; f < F; ++f) {
      for (int t = 0; t < T; ++t) {
        double v = base.at(f, (t + shift) % T);
        if (noise_sigma > 0.0) v += rng.normal(0.0, noise_sigma);
        patch.at(f, t) = v;
      }
    }
  }
  return patches;
}

Split split_corpus(const Corpus& corpus, double train_ratio, double val_ratio,
                   double test_ratio, std::uint64_t seed) {
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  const int n = static_cast<int>(corpus.tracks.size());
  if (n < 3) throw ValidationError("corpus too small to split");

  // Largest-remainder rounding keeps each part within 1 of its exact share.
  const double exact[3] = {train_ratio * n, val_ratio * n, test_ratio * n};
  int sizes[3];
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    sizes[i] = static_cast<int>(std::floor(exact[i]));
    assigned += sizes[i];
  }
  int order[3] = {0, 1, 2};
  std::sort(order, order + 3, [&](int a, int b) {
    const double fa = exact[a] - std::floor(exact[a]);
    const double fb = exact[b] - std::floor(exact[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  for (int i = 0; assigned < n; ++i, ++assigned) sizes[order[i % 3]] += 1;

  std::vector<TrackId> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = corpus.tracks[i].id;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(0, i));
    std::swap(ids[i], ids[j]);
  }

  Split split;
  int pos = 0;
  for (int i = 0; i < sizes[0]; ++i) split.train.insert(ids[pos++]);
  for (int i = 0; i < sizes[1]; ++i) split.validation.insert(ids[pos++]);
  for (int i = 0; i < sizes[2]; ++i) split.test.insert(ids[pos++]);
  return split;
}

std::vector<int> binarize_tags(const TagVector& tags, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0) {
    throw ValidationError("binarization threshold must lie in (0,1)");
  }
  std::vector<int> out(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i) out[i] = tags[i] >= threshold ? 1 : 0;
  return out;
}

std::uint64_t track_patch_seed(std::uint64_t corpus_seed, TrackId id,
                               std::uint64_t purpose) {
  return seed_mix(corpus_seed, purpose, static_cast<std::uint64_t>(id));
}

}  // namespace rankemb
