#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpmap/store.hpp"

namespace gpmap {

// ---------------------------------------------------------------------------
// Embedding export format
// ---------------------------------------------------------------------------
// UTF-8 JSONL. An optional first record {"t":"header","pooling":...,
// "model_tag":...} declares how the exporter pooled token states into a
// sentence embedding; data records carry (entity_id, kind, layer, vector,
// pair_id?, tissue_label?). All vectors within one layer must share a
// dimension.

struct EmbeddingRecord {
  std::string entity_id;
  EntityKind entity_kind = EntityKind::Gene;
  int layer = 0;
  std::vector<double> vector;
  std::optional<std::string> pair_id;
  std::optional<std::string> tissue_label;
};

struct EmbedReject {
  std::size_t row = 0;
  std::string reason;
};

struct EmbeddingFile {
  std::vector<EmbeddingRecord> records;
  std::vector<EmbedReject> rejects;
  std::string pooling;    // echoed from the header record
  std::string model_tag;
};

/// Loads an embedding export. Bad rows (malformed JSON, missing fields,
/// non-finite values) go to rejects; mixed dimensions within a layer are a
/// hard error naming the layer.
EmbeddingFile load_embeddings(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Projection and cluster statistics
// ---------------------------------------------------------------------------

struct PcaResult {
  std::vector<std::vector<double>> coordinates;   // n x out_dims
  std::vector<double> explained_variance_ratio;   // non-increasing, sums <= 1
  bool zero_variance = false;                     // warning: all-zero coordinates
};

/// Mean-centered projection onto the top principal axes. Axes follow a
/// deterministic sign convention: the largest-magnitude loading is
/// positive. Zero-variance data yields all-zero coordinates with the
/// warning flag set.
PcaResult pca_project(const std::vector<std::vector<double>>& vectors, int out_dims = 2);

/// Mean silhouette over labeled points (Euclidean distance). Points with
/// empty labels are excluded; singleton clusters contribute 0. Throws
/// DataError when fewer than two distinct labels remain.
double silhouette(const std::vector<std::vector<double>>& vectors,
                  const std::vector<std::string>& labels);

// ---------------------------------------------------------------------------
// Layer report
// ---------------------------------------------------------------------------

struct LayerPoint {
  std::string entity_id;
  EntityKind kind = EntityKind::Gene;
  double x = 0.0;
  double y = 0.0;
  std::string tissue_label;  // empty when unlabeled
  std::string pair_id;
};

struct LayerStats {
  std::optional<double> silhouette_by_tissue;  // absent with < 2 tissue labels
  std::optional<double> intra_pair_mean;       // mean distance within a pair_id
  std::optional<double> inter_pair_mean;       // mean distance across pair_ids
  std::vector<double> explained_variance_ratio;
  bool projection_degenerate = false;  // zero variance or too few points for 2D
  std::vector<LayerPoint> points;
};

struct LayerReport {
  std::string pooling;
  std::string model_tag;
  std::map<int, LayerStats> layers;
};

/// Per-layer silhouette by tissue label, intra- vs inter-pair mean
/// distances, and 2D coordinates. Statistics are computed in the original
/// embedding space; the projection only feeds the scatter plots. Missing
/// layers raise DataError listing the available ones.
LayerReport layer_report(const std::vector<EmbeddingRecord>& records, const std::vector<int>& layers);

nlohmann::json layer_report_to_json(const LayerReport& report);

// ---------------------------------------------------------------------------
// Scatter rendering
// ---------------------------------------------------------------------------

/// Standalone SVG 1.1 scatter: one marker per entity, one color per label,
/// legend included. Byte-deterministic for identical input.
void render_scatter_svg(const std::vector<std::array<double, 2>>& coordinates,
                        const std::vector<std::string>& labels,
                        const std::filesystem::path& out_path);

}  // namespace gpmap
