#ifndef RANKEMB_IO_HPP_
#define RANKEMB_IO_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rankemb/corpus.hpp"
#include "rankemb/metrics.hpp"
#include "rankemb/mining.hpp"
#include "rankemb/net.hpp"
#include "rankemb/train.hpp"
#include "rankemb/types.hpp"

namespace rankemb {

// All writers are deterministic: fixed field order, fixed float formatting,
// no timestamps. Files are written to a temp name and renamed into place.

std::string format_fixed(double v, int decimals);
std::string format_full(double v);  // round-trip exact for doubles

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

void write_corpus_manifest(const std::filesystem::path& path, const Corpus& corpus);
// Parses the config, regenerates the corpus from its seed, and verifies the
// recorded tag vectors match; a mismatch raises IoError.
Corpus read_corpus_manifest(const std::filesystem::path& path);

// Fixed per-track evaluation patches: raw little-endian float32 values plus a
// text sidecar listing (track id, patch index) per record and the patch dims.
void write_patches(const std::filesystem::path& data_path,
                   const std::filesystem::path& sidecar_path,
                   const std::vector<TrackId>& ids,
                   const std::vector<std::vector<PatchTensor>>& patches);
std::map<TrackId, std::vector<PatchTensor>> read_patches(
    const std::filesystem::path& data_path,
    const std::filesystem::path& sidecar_path);

void write_rankings(const std::filesystem::path& path,
                    const std::vector<RankedList>& rankings);
std::vector<RankedList> read_rankings(const std::filesystem::path& path);

void write_triplets(const std::filesystem::path& path,
                    const std::vector<Triplet>& triplets, MiningStrategy strategy,
                    const MiningConfig& cfg);
std::vector<Triplet> read_triplets(const std::filesystem::path& path);

// Model parameters: text header (mode, layers, autopool alphas) followed by a
// "data" line and the flat little-endian float32 parameter array.
void write_params(const std::filesystem::path& path, const ModelConfig& cfg,
                  const std::vector<double>& params);
struct ParamsFile {
  ModelConfig config;
  std::vector<double> params;  // widened from the stored float32 values
};
ParamsFile read_params(const std::filesystem::path& path);

void write_vectors(const std::filesystem::path& path, const std::string& kind,
                   const std::map<TrackId, std::vector<double>>& rows);
std::map<TrackId, std::vector<double>> read_vectors(
    const std::filesystem::path& path, const std::string& kind);

void write_loss_curve(const std::filesystem::path& path, const TrainReport& report);
TrainReport read_loss_curve(const std::filesystem::path& path);

void write_metrics_text(const std::filesystem::path& path, const MetricsReport& report);
void write_metrics_json(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport read_metrics_json(const std::filesystem::path& path);

void write_profile(const std::filesystem::path& path,
                   const std::vector<double>& mean_similarity_by_rank);
std::vector<double> read_profile(const std::filesystem::path& path);

}  // namespace rankemb

#endif  // RANKEMB_IO_HPP_
