#include <doctest.h>

#include <cmath>
#include <set>

#include "rankemb/corpus.hpp"
#include "helpers.hpp"

using namespace rankemb;

TEST_CASE("corpus generation is deterministic in the seed") {
  const CorpusConfig cfg = testutil::tiny_corpus_config(42);
  const Corpus a = generate_corpus(cfg);
  const Corpus b = generate_corpus(cfg);
  REQUIRE(a.tracks.size() == b.tracks.size());
  for (std::size_t i = 0; i < a.tracks.size(); ++i) {
    CHECK(a.tracks[i].tags == b.tracks[i].tags);
  }
  for (std::size_t i = 0; i < a.prototypes.size(); ++i) {
    CHECK(a.prototypes[i].values == b.prototypes[i].values);
  }

  CorpusConfig other = cfg;
  other.seed = 43;
  const Corpus c = generate_corpus(other);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.tracks.size() && !any_diff; ++i) {
    any_diff = a.tracks[i].tags != c.tracks[i].tags;
  }
  CHECK(any_diff);
}

TEST_CASE("tracks have ids 0..N-1 and bounded tag activity") {
  const CorpusConfig cfg = testutil::tiny_corpus_config();
  const Corpus corpus = generate_corpus(cfg);
  REQUIRE(static_cast<int>(corpus.tracks.size()) == cfg.n_tracks);
  REQUIRE(static_cast<int>(corpus.prototypes.size()) == cfg.n_tags);
  for (int id = 0; id < cfg.n_tracks; ++id) {
    const Track& t = corpus.tracks[id];
    CHECK(t.id == id);
    REQUIRE(static_cast<int>(t.tags.size()) == cfg.n_tags);
    int active = 0;
    for (double v : t.tags) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      if (v > 0.0) {
        ++active;
        // Active likelihoods stay clear of the inactive zeros.
        CHECK(v > 0.2);
      }
    }
    CHECK(active >= cfg.tags_per_track_lo);
    CHECK(active <= cfg.tags_per_track_hi);
  }
  CHECK(corpus.track(3).id == 3);
  CHECK_THROWS_AS(corpus.track(-1), LookupError);
  CHECK_THROWS_AS(corpus.track(cfg.n_tracks), LookupError);
}

TEST_CASE("corpus config validation") {
  CorpusConfig cfg = testutil::tiny_corpus_config();
  cfg.n_tracks = 2;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_corpus_config();
  cfg.tags_per_track_hi = cfg.n_tags + 1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_corpus_config();
  cfg.tags_per_track_lo = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg = testutil::tiny_corpus_config();
  cfg.noise_sigma = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("base patch is the tag-weighted prototype mix") {
  const Corpus corpus = generate_corpus(testutil::tiny_corpus_config());
  const Track& t = corpus.tracks[4];
  const PatchTensor base = base_patch(t, corpus.prototypes);
  const int F = base.freq_bins, T = base.frames;
  for (int f = 0; f < F; f += 2) {
    for (int tt = 0; tt < T; tt += 3) {
      double want = 0.0;
      for (std::size_t i = 0; i < t.tags.size(); ++i) {
        want += t.tags[i] * corpus.prototypes[i].at(f, tt);
      }
      CHECK(base.at(f, tt) == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("identical tag vectors give identical base patches") {
  const Corpus corpus = generate_corpus(testutil::tiny_corpus_config());
  Track clone = corpus.tracks[2];
  clone.id = 99;
  const PatchTensor a = base_patch(corpus.tracks[2], corpus.prototypes);
  const PatchTensor b = base_patch(clone, corpus.prototypes);
  CHECK(a.values == b.values);
}

TEST_CASE("sampled patches are deterministic and shift whole frames") {
  const Corpus corpus = generate_corpus(testutil::tiny_corpus_config());
  const Track& t = corpus.tracks[0];

  const auto a = sample_patches(t, corpus.prototypes, 3, 0.05, 8, 123);
  const auto b = sample_patches(t, corpus.prototypes, 3, 0.05, 8, 123);
  REQUIRE(a.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(a[i].values == b[i].values);

  // Noiseless, shift-free draws reproduce the base patch exactly.
  const auto clean = sample_patches(t, corpus.prototypes, 2, 0.0, 0, 5);
  const PatchTensor base = base_patch(t, corpus.prototypes);
  CHECK(clean[0].values == base.values);
  CHECK(clean[1].values == base.values);

  // A noiseless shifted draw is a circular rotation of the base columns.
  const auto shifted = sample_patches(t, corpus.prototypes, 6, 0.0, 4, 9);
  for (const auto& patch : shifted) {
    bool matched = false;
    for (int s = 0; s < 4 && !matched; ++s) {
      bool ok = true;
      for (int f = 0; f < base.freq_bins && ok; ++f) {
        for (int tt = 0; tt < base.frames && ok; ++tt) {
          ok = patch.at(f, tt) == base.at(f, (tt + s) % base.frames);
        }
      }
      matched = ok;
    }
    CHECK(matched);
  }
}

TEST_CASE("noise perturbs every draw independently") {
  const Corpus corpus = generate_corpus(testutil::tiny_corpus_config());
  const auto patches =
      sample_patches(corpus.tracks[1], corpus.prototypes, 2, 0.05, 0, 77);
  CHECK(patches[0].values != patches[1].values);
}

TEST_CASE("split sizes follow largest-remainder rounding") {
  const Corpus small = generate_corpus(testutil::tiny_corpus_config());
  SUBCASE("N=20 at 60/20/20") {
    const Split s = split_corpus(small, 0.6, 0.2, 0.2, 3);
    CHECK(s.train.size() == 12);
    CHECK(s.validation.size() == 4);
    CHECK(s.test.size() == 4);
  }
  SUBCASE("N=10 at 60/20/20") {
    CorpusConfig cfg = testutil::tiny_corpus_config();
    cfg.n_tracks = 10;
    const Split s = split_corpus(generate_corpus(cfg), 0.6, 0.2, 0.2, 3);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
  }
  SUBCASE("N=7 at 50/25/25 hands the spare to the largest remainder") {
    CorpusConfig cfg = testutil::tiny_corpus_config();
    cfg.n_tracks = 7;
    const Split s = split_corpus(generate_corpus(cfg), 0.5, 0.25, 0.25, 3);
    // Exact shares 3.5/1.75/1.75: floors 3/1/1, spares to .75, .75, .5.
    CHECK(s.train.size() == 3);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
  }
}

TEST_CASE("split parts partition the corpus and depend only on the seed") {
  const Corpus corpus = generate_corpus(testutil::tiny_corpus_config());
  const Split a = split_corpus(corpus, 0.6, 0.2, 0.2, 11);
  const Split b = split_corpus(corpus, 0.6, 0.2, 0.2, 11);
  CHECK(a.train == b.train);
  CHECK(a.validation == b.validation);
  CHECK(a.test == b.test);

  std::set<TrackId> all;
  all.insert(a.train.begin(), a.train.end());
  all.insert(a.validation.begin(), a.validation.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == corpus.tracks.size());

  const Split c = split_corpus(corpus, 0.6, 0.2, 0.2, 12);
  CHECK(a.train != c.train);

  CHECK_THROWS_AS(split_corpus(corpus, 0.5, 0.2, 0.2, 1), ValidationError);
}

TEST_CASE("binarize thresholds likelihoods") {
  CHECK(binarize_tags({0.0, 0.49, 0.5, 0.51, 1.0}, 0.5) ==
        std::vector<int>{0, 0, 1, 1, 1});
  CHECK_THROWS_AS(binarize_tags({0.5}, 0.0), ValidationError);
  CHECK_THROWS_AS(binarize_tags({0.5}, 1.0), ValidationError);
}

TEST_CASE("per-track patch seeds are decoupled") {
  const std::uint64_t a = track_patch_seed(1, 0, 100);
  CHECK(a == track_patch_seed(1, 0, 100));
  CHECK(a != track_patch_seed(1, 1, 100));
  CHECK(a != track_patch_seed(1, 0, 101));
  CHECK(a != track_patch_seed(2, 0, 100));
}
