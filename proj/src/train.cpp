#include "rankemb/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <unordered_map>

#include "rankemb/loss.hpp"
#include "rankemb/rng.hpp"

namespace rankemb {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974;     // "init"
constexpr std::uint64_t kEpochStream = 0x65706f6368;  // "epoch"
constexpr std::uint64_t kValPatch = 0x76616c;         // "val"

struct GroupBatch {
  PatchTensor anchor, positive;
  std::vector<PatchTensor> negatives;
};

PatchTensor draw_patch(const Corpus& corpus, TrackId id, Rng& rng) {
  return sample_patches(corpus.track(id), corpus.prototypes, 1,
                        corpus.config.noise_sigma, corpus.config.patch_frames,
                        rng.next_u64())[0];
}

PatchTensor canonical_patch(const Corpus& corpus, TrackId id) {
  return sample_patches(corpus.track(id), corpus.prototypes, 1,
                        corpus.config.noise_sigma, corpus.config.patch_frames,
                        track_patch_seed(corpus.config.seed, id, kValPatch))[0];
}

GroupBatch batch_from_group(const TripletGroup& group, const Corpus& corpus,
                            int batch_triplets, Rng& rng, bool warn) {
  const int avail = static_cast<int>(group.negatives.size());
  const int take = std::min(batch_triplets, avail);
  if (take < batch_triplets && warn) {
    std::cerr << "rankemb: warning: group (" << group.anchor << ", "
              << group.positive << ") has " << avail << " negatives, batch wants "
              << batch_triplets << "\n";
  }
  std::vector<int> idx(avail);
  for (int i = 0; i < avail; ++i) idx[i] = i;
  for (int i = 0; i < take; ++i) {
    std::swap(idx[i], idx[rng.uniform_int(i, avail - 1)]);
  }
  GroupBatch batch;
  batch.anchor = draw_patch(corpus, group.anchor, rng);
  batch.positive = draw_patch(corpus, group.positive, rng);
  batch.negatives.reserve(take);
  for (int i = 0; i < take; ++i) {
    batch.negatives.push_back(draw_patch(corpus, group.negatives[idx[i]], rng));
  }
  return batch;
}

struct EarlyStopper {
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int bad_epochs = 0;

  // Returns true when this epoch improved on the best validation loss.
  bool improved(int epoch, double val_loss) {
    if (val_loss < best_val) {
      best_val = val_loss;
      best_epoch = epoch;
      bad_epochs = 0;
      return true;
    }
    ++bad_epochs;
    return false;
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (!(margin > 0.0)) throw ValidationError("margin must be > 0");
  adam.validate();
  if (batch_triplets < 1) throw ValidationError("batch size must be >= 1");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
  if (steps_per_epoch < 0) throw ValidationError("steps_per_epoch must be >= 0");
}

std::vector<TripletGroup> group_triplets(const std::vector<Triplet>& pool) {
  std::vector<TripletGroup> groups;
  std::unordered_map<std::uint64_t, std::size_t> index;
  index.reserve(pool.size() / 8 + 1);
  for (const auto& t : pool) {
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t.anchor)) << 32) |
        static_cast<std::uint32_t>(t.positive);
    auto [it, fresh] = index.try_emplace(key, groups.size());
    if (fresh) groups.push_back({t.anchor, t.positive, {}});
    groups[it->second].negatives.push_back(t.negative);
  }
  return groups;
}

std::vector<PatchTriplet> build_minibatch(const std::vector<Triplet>& pool,
                                          const Corpus& corpus, int batch_triplets,
                                          std::uint64_t seed) {
  if (pool.empty()) throw ValidationError("empty triplet pool");
  if (batch_triplets < 1) throw ValidationError("batch size must be >= 1");
  const auto groups = group_triplets(pool);
  Rng rng(seed);
  const auto& group =
      groups[rng.uniform_int(0, static_cast<int>(groups.size()) - 1)];
  GroupBatch gb = batch_from_group(group, corpus, batch_triplets, rng, true);
  std::vector<PatchTriplet> out(gb.negatives.size());
  for (std::size_t i = 0; i < gb.negatives.size(); ++i) {
    out[i].anchor = gb.anchor;
    out[i].positive = gb.positive;
    out[i].negative = std::move(gb.negatives[i]);
  }
  return out;
}

double pool_triplet_loss(const Net& net, const std::vector<double>& params,
                         const Corpus& corpus, const std::vector<Triplet>& pool,
                         double margin) {
  if (pool.empty()) throw ValidationError("empty triplet pool");
  std::unordered_map<TrackId, std::vector<double>> emb;
  for (const auto& t : pool) {
    for (TrackId id : {t.anchor, t.positive, t.negative}) {
      if (emb.find(id) != emb.end()) continue;
      emb.emplace(id, net.forward(params, canonical_patch(corpus, id), nullptr));
    }
  }
  double sum = 0.0;
  for (const auto& t : pool) {
    sum += triplet_loss(emb.at(t.anchor), emb.at(t.positive), emb.at(t.negative),
                        margin)
               .loss;
  }
  return sum / static_cast<double>(pool.size());
}

TrainResult train_triplet(const Corpus& corpus,
                          const std::vector<Triplet>& train_triplets,
                          const std::vector<Triplet>& val_triplets,
                          const ModelConfig& model_cfg, const TrainConfig& cfg) {
  cfg.validate();
  if (model_cfg.mode != NetMode::kEmbed) {
    throw ValidationError("triplet training requires an embedding-mode model");
  }
  if (train_triplets.empty()) throw ValidationError("no training triplets");
  if (val_triplets.empty()) throw ValidationError("no validation triplets");

  const Net net(model_cfg);
  const auto groups = group_triplets(train_triplets);
  const int n_groups = static_cast<int>(groups.size());
  const int steps =
      cfg.steps_per_epoch > 0 ? std::min(cfg.steps_per_epoch, n_groups) : n_groups;
  const int d = model_cfg.output_dim();

  TrainResult result;
  result.params = net.init_params(seed_mix(cfg.seed, kInitStream));
  AdamState opt(net.param_count());
  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<double> best_params = result.params;
  EarlyStopper stopper;

  std::vector<int> order(n_groups);
  for (int i = 0; i < n_groups; ++i) order[i] = i;

  int last_epoch = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    last_epoch = epoch;
    Rng shuffle_rng(seed_mix(cfg.seed, kEpochStream, epoch));
    for (int i = n_groups - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    }

    double train_sum = 0.0;
    for (int s = 0; s < steps; ++s) {
      Rng brng(seed_mix(cfg.seed, static_cast<std::uint64_t>(epoch),
                        static_cast<std::uint64_t>(s)));
      GroupBatch batch = batch_from_group(groups[order[s]], corpus,
                                          cfg.batch_triplets, brng, epoch == 1);
      const int n_b = static_cast<int>(batch.negatives.size());

      ForwardCache ca, cp;
      const auto fa = net.forward(result.params, batch.anchor, &ca);
      const auto fp = net.forward(result.params, batch.positive, &cp);
      std::vector<ForwardCache> cn(n_b);
      std::vector<TripletLossResult> losses(n_b);
      double loss_sum = 0.0;
      for (int b = 0; b < n_b; ++b) {
        const auto fn = net.forward(result.params, batch.negatives[b], &cn[b]);
        losses[b] = triplet_loss(fa, fp, fn, cfg.margin);
        loss_sum += losses[b].loss;
      }
      const double batch_loss = loss_sum / n_b;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch));
      }

      const double inv = 1.0 / n_b;
      std::fill(grad.begin(), grad.end(), 0.0);
      std::vector<double> ga(d, 0.0), gp(d, 0.0), gn(d);
      for (int b = 0; b < n_b; ++b) {
        for (int j = 0; j < d; ++j) {
          ga[j] += inv * losses[b].grad_anchor[j];
          gp[j] += inv * losses[b].grad_positive[j];
        }
      }
      net.backward(result.params, ca, ga, &grad);
      net.backward(result.params, cp, gp, &grad);
      for (int b = 0; b < n_b; ++b) {
        for (int j = 0; j < d; ++j) gn[j] = inv * losses[b].grad_negative[j];
        net.backward(result.params, cn[b], gn, &grad);
      }
      adam_step(result.params, grad, opt, cfg.adam);
      train_sum += batch_loss;
    }

    const double train_loss = train_sum / steps;
    const double val_loss =
        pool_triplet_loss(net, result.params, corpus, val_triplets, cfg.margin);
    if (!std::isfinite(val_loss)) {
      throw NumericError("non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    result.report.history.push_back({epoch, train_loss, val_loss});
    if (stopper.improved(epoch, val_loss)) {
      best_params = result.params;
    } else if (stopper.bad_epochs >= cfg.patience) {
      break;
    }
  }

  result.params = std::move(best_params);
  result.report.best_epoch = stopper.best_epoch;
  result.report.stopped_epoch = last_epoch;
  result.report.best_val_loss = stopper.best_val;
  return result;
}

TrainResult train_tagger(const Corpus& corpus, const Split& split,
                         double binarize_threshold, const ModelConfig& model_cfg,
                         const TrainConfig& cfg) {
  cfg.validate();
  if (model_cfg.mode != NetMode::kTag) {
    throw ValidationError("tagger training requires a tag-mode model");
  }
  if (model_cfg.n_tags != corpus.config.n_tags) {
    throw DimensionError("model tag count differs from corpus tag count");
  }
  if (split.train.empty()) throw ValidationError("empty training split");
  if (split.validation.empty()) throw ValidationError("empty validation split");

  const Net net(model_cfg);
  std::vector<TrackId> train_ids(split.train.begin(), split.train.end());
  const std::vector<TrackId> val_ids(split.validation.begin(),
                                     split.validation.end());
  std::unordered_map<TrackId, std::vector<int>> targets;
  for (const auto& ids : {train_ids, val_ids}) {
    for (TrackId id : ids) {
      targets.emplace(id, binarize_tags(corpus.track(id).tags, binarize_threshold));
    }
  }

  const int n_train = static_cast<int>(train_ids.size());
  TrainResult result;
  result.params = net.init_params(seed_mix(cfg.seed, kInitStream));
  AdamState opt(net.param_count());
  std::vector<double> grad(net.param_count(), 0.0);
  std::vector<double> best_params = result.params;
  EarlyStopper stopper;

  std::vector<int> order(n_train);
  for (int i = 0; i < n_train; ++i) order[i] = i;

  int last_epoch = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    last_epoch = epoch;
    Rng shuffle_rng(seed_mix(cfg.seed, kEpochStream, epoch));
    for (int i = n_train - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);
    }

    double train_sum = 0.0;
    int n_batches = 0;
    for (int start = 0; start < n_train; start += cfg.batch_triplets) {
      Rng brng(seed_mix(cfg.seed, static_cast<std::uint64_t>(epoch),
                        static_cast<std::uint64_t>(n_batches)));
      const int n_b = std::min(cfg.batch_triplets, n_train - start);
      const double inv = 1.0 / n_b;
      std::fill(grad.begin(), grad.end(), 0.0);
      double loss_sum = 0.0;
      std::vector<double> g;
      for (int b = 0; b < n_b; ++b) {
        const TrackId id = train_ids[order[start + b]];
        const PatchTensor patch = draw_patch(corpus, id, brng);
        ForwardCache cache;
        const auto out = net.forward(result.params, patch, &cache);
        auto bl = bce_loss(out, targets.at(id));
        loss_sum += bl.loss;
        g = std::move(bl.grad);
        for (double& v : g) v *= inv;
        net.backward(result.params, cache, g, &grad);
      }
      const double batch_loss = loss_sum * inv;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch));
      }
      adam_step(result.params, grad, opt, cfg.adam);
      train_sum += batch_loss;
      ++n_batches;
    }

    const double train_loss = train_sum / n_batches;
    double val_sum = 0.0;
    for (TrackId id : val_ids) {
      const auto out =
          net.forward(result.params, canonical_patch(corpus, id), nullptr);
      val_sum += bce_loss(out, targets.at(id)).loss;
    }
    const double val_loss = val_sum / static_cast<double>(val_ids.size());
    if (!std::isfinite(val_loss)) {
      throw NumericError("non-finite validation loss at epoch " +
                         std::to_string(epoch));
    }
    result.report.history.push_back({epoch, train_loss, val_loss});
    if (stopper.improved(epoch, val_loss)) {
      best_params = result.params;
    } else if (stopper.bad_epochs >= cfg.patience) {
      break;
    }
  }

  result.params = std::move(best_params);
  result.report.best_epoch = stopper.best_epoch;
  result.report.stopped_epoch = last_epoch;
  result.report.best_val_loss = stopper.best_val;
  return result;
}

}  // namespace rankemb
