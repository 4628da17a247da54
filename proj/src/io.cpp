#include "rankemb/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rankemb {

static_assert(std::endian::native == std::endian::little,
              "float32 blobs are written in host order and assume little endian");

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

void write_raw(const fs::path& path, const std::string& content, bool binary) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_raw(const fs::path& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

[[noreturn]] void bad_file(const fs::path& path, const std::string& what) {
  throw IoError(path.string() + ": " + what);
}

// Splits header text into per-line token streams, checking the magic line.
class Lines {
 public:
  Lines(const fs::path& path, const std::string& text, const std::string& kind)
      : path_(path), in_(text) {
    std::string magic, k, version;
    next() >> magic >> k >> version;
    if (magic != "rankemb" || k != kind || version != "1") {
      bad_file(path_, "expected a 'rankemb " + kind + " 1' file");
    }
  }

  std::istringstream& next() {
    std::string line;
    if (!std::getline(in_, line)) bad_file(path_, "unexpected end of file");
    cur_ = std::istringstream(line);
    return cur_;
  }

  bool next_optional() {
    std::string line;
    if (!std::getline(in_, line)) return false;
    cur_ = std::istringstream(line);
    return true;
  }

  std::istringstream& cur() { return cur_; }

  // Reads the line's leading keyword and validates it.
  std::istringstream& expect(const std::string& key) {
    auto& s = next();
    std::string k;
    s >> k;
    if (k != key) bad_file(path_, "expected '" + key + "' line, got '" + k + "'");
    return s;
  }

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::istringstream in_;
  std::istringstream cur_;
};

double parse_double(Lines& lines, std::istringstream& s) {
  std::string tok;
  if (!(s >> tok)) bad_file(lines.path(), "missing number");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    bad_file(lines.path(), "bad number '" + tok + "'");
  }
  return v;
}

void append_f32(std::string& out, double v) {
  const float f = static_cast<float>(v);
  char b[4];
  std::memcpy(b, &f, 4);
  out.append(b, 4);
}

std::vector<double> parse_f32_blob(const fs::path& path, const char* data,
                                   std::size_t bytes, std::size_t count) {
  if (bytes != count * 4) {
    bad_file(path, "float32 payload has " + std::to_string(bytes) +
                       " bytes, expected " + std::to_string(count * 4));
  }
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, data + i * 4, 4);
    out[i] = static_cast<double>(f);
  }
  return out;
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& content) {
  write_raw(path, content, false);
}

std::string read_text_file(const fs::path& path) { return read_raw(path, false); }

void write_corpus_manifest(const fs::path& path, const Corpus& corpus) {
  const CorpusConfig& c = corpus.config;
  std::ostringstream out;
  out << "rankemb corpus 1\n";
  out << "n_tracks " << c.n_tracks << "\n";
  out << "n_tags " << c.n_tags << "\n";
  out << "patch_freq_bins " << c.patch_freq_bins << "\n";
  out << "patch_frames " << c.patch_frames << "\n";
  out << "tags_per_track " << c.tags_per_track_lo << " " << c.tags_per_track_hi << "\n";
  out << "noise_sigma " << format_full(c.noise_sigma) << "\n";
  out << "n_eval_patches " << c.n_eval_patches << "\n";
  out << "seed " << c.seed << "\n";
  for (const Track& t : corpus.tracks) {
    out << "track " << t.id;
    for (double v : t.tags) out << " " << format_full(v);
    out << "\n";
  }
  write_text_file(path, out.str());
}

Corpus read_corpus_manifest(const fs::path& path) {
  Lines lines(path, read_text_file(path), "corpus");
  CorpusConfig cfg;
  lines.expect("n_tracks") >> cfg.n_tracks;
  lines.expect("n_tags") >> cfg.n_tags;
  lines.expect("patch_freq_bins") >> cfg.patch_freq_bins;
  lines.expect("patch_frames") >> cfg.patch_frames;
  lines.expect("tags_per_track") >> cfg.tags_per_track_lo >> cfg.tags_per_track_hi;
  cfg.noise_sigma = parse_double(lines, lines.expect("noise_sigma"));
  lines.expect("n_eval_patches") >> cfg.n_eval_patches;
  lines.expect("seed") >> cfg.seed;

  Corpus corpus = generate_corpus(cfg);
  for (const Track& t : corpus.tracks) {
    auto& s = lines.expect("track");
    TrackId id;
    s >> id;
    if (id != t.id) bad_file(path, "track ids out of order");
    for (double expected : t.tags) {
      if (parse_double(lines, s) != expected) {
        bad_file(path, "tag vectors do not match the recorded seed");
      }
    }
  }
  return corpus;
}

void write_patches(const fs::path& data_path, const fs::path& sidecar_path,
                   const std::vector<TrackId>& ids,
                   const std::vector<std::vector<PatchTensor>>& patches) {
  if (ids.size() != patches.size()) {
    throw DimensionError("patch id and record counts differ");
  }
  if (ids.empty()) throw ValidationError("no patches to write");
  const int F = patches[0][0].freq_bins, T = patches[0][0].frames;
  std::size_t total = 0;
  for (const auto& group : patches) total += group.size();

  std::ostringstream side;
  side << "rankemb patches 1\n";
  side << "freq_bins " << F << "\n";
  side << "frames " << T << "\n";
  side << "count " << total << "\n";
  std::string blob;
  blob.reserve(total * static_cast<std::size_t>(F) * T * 4);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t p = 0; p < patches[i].size(); ++p) {
      const PatchTensor& patch = patches[i][p];
      if (patch.freq_bins != F || patch.frames != T) {
        throw DimensionError("inconsistent patch dimensions");
      }
      side << "patch " << ids[i] << " " << p << "\n";
      for (double v : patch.values) append_f32(blob, v);
    }
  }
  write_raw(data_path, blob, true);
  write_text_file(sidecar_path, side.str());
}

std::map<TrackId, std::vector<PatchTensor>> read_patches(const fs::path& data_path,
                                                         const fs::path& sidecar_path) {
  Lines lines(sidecar_path, read_text_file(sidecar_path), "patches");
  int F, T;
  std::size_t count;
  lines.expect("freq_bins") >> F;
  lines.expect("frames") >> T;
  lines.expect("count") >> count;

  const std::string blob = read_raw(data_path, true);
  const std::size_t patch_vals = static_cast<std::size_t>(F) * T;
  const auto values =
      parse_f32_blob(data_path, blob.data(), blob.size(), count * patch_vals);

  std::map<TrackId, std::vector<PatchTensor>> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = lines.expect("patch");
    TrackId id;
    std::size_t index;
    s >> id >> index;
    auto& group = out[id];
    if (index != group.size()) bad_file(sidecar_path, "patch indices out of order");
    PatchTensor patch;
    patch.freq_bins = F;
    patch.frames = T;
    patch.values.assign(values.begin() + static_cast<std::ptrdiff_t>(i * patch_vals),
                        values.begin() + static_cast<std::ptrdiff_t>((i + 1) * patch_vals));
    group.push_back(std::move(patch));
  }
  return out;
}

void write_rankings(const fs::path& path, const std::vector<RankedList>& rankings) {
  std::ostringstream out;
  out << "rankemb rankings 1\n";
  out << "count " << rankings.size() << "\n";
  for (const RankedList& list : rankings) {
    out << "query " << list.query << " " << list.entries.size() << "\n";
    for (const RankedEntry& e : list.entries) {
      out << e.id << " " << format_fixed(e.score, 6) << "\n";
    }
  }
  write_text_file(path, out.str());
}

std::vector<RankedList> read_rankings(const fs::path& path) {
  Lines lines(path, read_text_file(path), "rankings");
  std::size_t count;
  lines.expect("count") >> count;
  std::vector<RankedList> out(count);
  for (auto& list : out) {
    std::size_t n;
    lines.expect("query") >> list.query >> n;
    list.entries.resize(n);
    for (auto& e : list.entries) {
      auto& s = lines.next();
      s >> e.id;
      e.score = parse_double(lines, s);
    }
  }
  return out;
}

void write_triplets(const fs::path& path, const std::vector<Triplet>& triplets,
                    MiningStrategy strategy, const MiningConfig& cfg) {
  const std::string name = to_string(strategy);
  std::ostringstream out;
  out << "rankemb triplets 1\n";
  out << "strategy " << name << "\n";
  out << "n_positives " << cfg.n_positives << "\n";
  out << "n_negatives " << cfg.n_negatives << "\n";
  out << "seed " << cfg.seed << "\n";
  out << "count " << triplets.size() << "\n";
  for (const Triplet& t : triplets) {
    out << "triplet " << t.anchor << " " << t.positive << " " << t.negative << " "
        << t.positive_rank << " " << t.negative_rank << " " << name << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<Triplet> read_triplets(const fs::path& path) {
  Lines lines(path, read_text_file(path), "triplets");
  std::string strategy;
  MiningConfig cfg;
  std::size_t count;
  lines.expect("strategy") >> strategy;
  lines.expect("n_positives") >> cfg.n_positives;
  lines.expect("n_negatives") >> cfg.n_negatives;
  lines.expect("seed") >> cfg.seed;
  lines.expect("count") >> count;
  std::vector<Triplet> out(count);
  for (auto& t : out) {
    std::string rec_strategy;
    lines.expect("triplet") >> t.anchor >> t.positive >> t.negative >>
        t.positive_rank >> t.negative_rank >> rec_strategy;
    if (rec_strategy != strategy) bad_file(path, "mixed strategies in one file");
  }
  return out;
}

void write_params(const fs::path& path, const ModelConfig& cfg,
                  const std::vector<double>& params) {
  const Net net(cfg);
  if (params.size() != net.param_count()) {
    throw DimensionError("parameter count does not match the model config");
  }
  std::ostringstream out;
  out << "rankemb params 1\n";
  out << "mode " << to_string(cfg.mode) << "\n";
  out << "temporal_pool " << to_string(cfg.temporal_pool) << "\n";
  out << "input " << cfg.input_freq_bins << " " << cfg.input_frames << "\n";
  for (const auto& layer : cfg.conv_layers) {
    out << "conv " << layer.channels << " " << layer.kernel_h << " " << layer.kernel_w
        << " " << layer.pool_h << " " << layer.pool_w << "\n";
  }
  out << "embedding_dim " << cfg.embedding_dim << "\n";
  out << "n_tags " << cfg.n_tags << "\n";
  out << "autopool_shared " << (cfg.autopool_shared ? 1 : 0) << "\n";
  if (cfg.temporal_pool == TemporalPool::kAutopool) {
    out << "alpha";
    for (int i = 0; i < net.n_alpha(); ++i) {
      out << " " << format_full(params[net.alpha_offset() + i]);
    }
    out << "\n";
  }
  out << "count " << params.size() << "\n";
  out << "data\n";
  std::string content = out.str();
  for (double v : params) append_f32(content, v);
  write_raw(path, content, true);
}

ParamsFile read_params(const fs::path& path) {
  const std::string raw = read_raw(path, true);
  const std::string marker = "\ndata\n";
  const std::size_t pos = raw.find(marker);
  if (pos == std::string::npos) bad_file(path, "missing data marker");
  Lines lines(path, raw.substr(0, pos + 1), "params");

  ParamsFile file;
  ModelConfig& cfg = file.config;
  cfg.conv_layers.clear();
  std::string mode, pool;
  lines.expect("mode") >> mode;
  cfg.mode = net_mode_from_string(mode);
  lines.expect("temporal_pool") >> pool;
  cfg.temporal_pool = temporal_pool_from_string(pool);
  lines.expect("input") >> cfg.input_freq_bins >> cfg.input_frames;
  std::size_t count = 0;
  while (true) {
    auto& s = lines.next();
    std::string key;
    s >> key;
    if (key == "conv") {
      ConvLayerSpec layer;
      s >> layer.channels >> layer.kernel_h >> layer.kernel_w >> layer.pool_h >>
          layer.pool_w;
      cfg.conv_layers.push_back(layer);
    } else if (key == "embedding_dim") {
      s >> cfg.embedding_dim;
    } else if (key == "n_tags") {
      s >> cfg.n_tags;
    } else if (key == "autopool_shared") {
      int v;
      s >> v;
      cfg.autopool_shared = v != 0;
    } else if (key == "alpha") {
      // Informational echo of the trained pooling exponents.
    } else if (key == "count") {
      s >> count;
      break;
    } else {
      bad_file(path, "unknown header line '" + key + "'");
    }
  }

  const Net net(cfg);
  if (count != net.param_count()) {
    bad_file(path, "header count disagrees with the model shape");
  }
  const char* blob = raw.data() + pos + marker.size();
  const std::size_t bytes = raw.size() - (pos + marker.size());
  file.params = parse_f32_blob(path, blob, bytes, count);
  return file;
}

void write_vectors(const fs::path& path, const std::string& kind,
                   const std::map<TrackId, std::vector<double>>& rows) {
  if (rows.empty()) throw ValidationError("no rows to write");
  const std::size_t dim = rows.begin()->second.size();
  std::ostringstream out;
  out << "rankemb " << kind << " 1\n";
  out << "dim " << dim << "\n";
  out << "count " << rows.size() << "\n";
  for (const auto& [id, values] : rows) {
    if (values.size() != dim) throw DimensionError("ragged rows in " + kind);
    out << "track " << id;
    for (double v : values) out << " " << format_full(v);
    out << "\n";
  }
  write_text_file(path, out.str());
}

std::map<TrackId, std::vector<double>> read_vectors(const fs::path& path,
                                                    const std::string& kind) {
  Lines lines(path, read_text_file(path), kind);
  std::size_t dim, count;
  lines.expect("dim") >> dim;
  lines.expect("count") >> count;
  std::map<TrackId, std::vector<double>> out;
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = lines.expect("track");
    TrackId id;
    s >> id;
    std::vector<double> values(dim);
    for (auto& v : values) v = parse_double(lines, s);
    if (!out.emplace(id, std::move(values)).second) {
      bad_file(path, "duplicate track id");
    }
  }
  return out;
}

void write_loss_curve(const fs::path& path, const TrainReport& report) {
  std::ostringstream out;
  out << "rankemb loss 1\n";
  out << "best_epoch " << report.best_epoch << "\n";
  out << "stopped_epoch " << report.stopped_epoch << "\n";
  out << "best_val_loss " << format_full(report.best_val_loss) << "\n";
  out << "count " << report.history.size() << "\n";
  for (const EpochStat& e : report.history) {
    out << "epoch " << e.epoch << " " << format_full(e.train_loss) << " "
        << format_full(e.val_loss) << "\n";
  }
  write_text_file(path, out.str());
}

TrainReport read_loss_curve(const fs::path& path) {
  Lines lines(path, read_text_file(path), "loss");
  TrainReport report;
  lines.expect("best_epoch") >> report.best_epoch;
  lines.expect("stopped_epoch") >> report.stopped_epoch;
  report.best_val_loss = parse_double(lines, lines.expect("best_val_loss"));
  std::size_t count;
  lines.expect("count") >> count;
  report.history.resize(count);
  for (auto& e : report.history) {
    auto& s = lines.expect("epoch");
    s >> e.epoch;
    e.train_loss = parse_double(lines, s);
    e.val_loss = parse_double(lines, s);
  }
  return report;
}

void write_metrics_text(const fs::path& path, const MetricsReport& report) {
  std::ostringstream out;
  out << "rankemb metrics 1\n";
  out << "queries " << report.n_queries << "\n";
  for (const auto& m : report.metrics) {
    out << "metric " << m.name << " " << format_fixed(m.stat.mean_x100, 2) << " "
        << format_fixed(m.stat.halfwidth_x100, 2) << "\n";
  }
  write_text_file(path, out.str());
}

void write_metrics_json(const fs::path& path, const MetricsReport& report) {
  json doc;
  doc["n_queries"] = report.n_queries;
  doc["metrics"] = json::array();
  for (const auto& m : report.metrics) {
    json entry;
    entry["name"] = m.name;
    entry["mean_x100"] = m.stat.mean_x100;
    entry["halfwidth_x100"] = m.stat.halfwidth_x100;
    entry["per_query"] = m.per_query;
    doc["metrics"].push_back(entry);
  }
  write_text_file(path, doc.dump(2) + "\n");
}

MetricsReport read_metrics_json(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    bad_file(path, e.what());
  }
  MetricsReport report;
  try {
    report.n_queries = doc.at("n_queries").get<int>();
    for (const auto& entry : doc.at("metrics")) {
      MetricSummary m;
      m.name = entry.at("name").get<std::string>();
      m.stat.mean_x100 = entry.at("mean_x100").get<double>();
      m.stat.halfwidth_x100 = entry.at("halfwidth_x100").get<double>();
      m.per_query = entry.at("per_query").get<std::vector<double>>();
      report.metrics.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    bad_file(path, e.what());
  }
  return report;
}

void write_profile(const fs::path& path,
                   const std::vector<double>& mean_similarity_by_rank) {
  std::ostringstream out;
  out << "rankemb profile 1\n";
  out << "count " << mean_similarity_by_rank.size() << "\n";
  for (std::size_t i = 0; i < mean_similarity_by_rank.size(); ++i) {
    out << "rank " << i + 1 << " " << format_fixed(mean_similarity_by_rank[i], 6)
        << "\n";
  }
  write_text_file(path, out.str());
}

std::vector<double> read_profile(const fs::path& path) {
  Lines lines(path, read_text_file(path), "profile");
  std::size_t count;
  lines.expect("count") >> count;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& s = lines.expect("rank");
    std::size_t rank;
    s >> rank;
    if (rank != i + 1) bad_file(path, "ranks out of order");
    out[i] = parse_double(lines, s);
  }
  return out;
}

}  // namespace rankemb
