#include "gpmap/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/Dense>

#include "gpmap/util.hpp"

namespace gpmap {

using nlohmann::json;

EmbeddingFile load_embeddings(const std::filesystem::path& path) {
  EmbeddingFile file;
  std::map<int, std::size_t> layer_dims;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      file.rejects.push_back({line_no, std::string("malformed JSON: ") + e.what()});
      return;
    }
    if (j.contains("t") && j["t"] == "header") {
      if (j.contains("pooling")) file.pooling = j["pooling"].get<std::string>();
      if (j.contains("model_tag")) file.model_tag = j["model_tag"].get<std::string>();
      return;
    }
    EmbeddingRecord rec;
    try {
      rec.entity_id = j.at("entity_id").get<std::string>();
      std::string kind = j.at("kind").get<std::string>();
      if (kind == "gene") {
        rec.entity_kind = EntityKind::Gene;
      } else if (kind == "phenotype") {
        rec.entity_kind = EntityKind::Phenotype;
      } else {
        throw DataError("kind must be gene or phenotype, got \"" + kind + "\"");
      }
      rec.layer = j.at("layer").get<int>();
      if (rec.layer < 0) throw DataError("layer must be nonnegative");
      rec.vector = j.at("vector").get<std::vector<double>>();
      if (rec.vector.empty()) throw DataError("vector is empty");
      for (double v : rec.vector) {
        if (!std::isfinite(v)) throw DataError("vector holds a non-finite value");
      }
      if (j.contains("pair_id")) rec.pair_id = j["pair_id"].get<std::string>();
      if (j.contains("tissue_label")) rec.tissue_label = j["tissue_label"].get<std::string>();
    } catch (const json::exception& e) {
      file.rejects.push_back({line_no, e.what()});
      return;
    } catch (const DataError& e) {
      file.rejects.push_back({line_no, e.what()});
      return;
    }
    auto [it, inserted] = layer_dims.try_emplace(rec.layer, rec.vector.size());
    if (!inserted && it->second != rec.vector.size()) {
      throw DataError("layer " + std::to_string(rec.layer) + " mixes vector dimensions " +
                      std::to_string(it->second) + " and " + std::to_string(rec.vector.size()));
    }
    file.records.push_back(std::move(rec));
  });
  return file;
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

PcaResult pca_project(const std::vector<std::vector<double>>& vectors, int out_dims) {
  if (out_dims < 1) throw DataError("pca_project: out_dims must be >= 1");
  if (vectors.size() < static_cast<std::size_t>(out_dims) + 1) {
    throw DataError("pca_project: need at least " + std::to_string(out_dims + 1) + " vectors, got " +
                    std::to_string(vectors.size()));
  }
  const std::size_t n = vectors.size();
  const std::size_t d = vectors.front().size();
  if (static_cast<std::size_t>(out_dims) > d) {
    throw DataError("pca_project: out_dims exceeds the data dimension");
  }
  for (const auto& v : vectors) {
    if (v.size() != d) throw DataError("pca_project: inconsistent vector dimensions");
  }

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i][j];
  }
  Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;

  Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n - 1);
  double total_variance = cov.trace();

  PcaResult result;
  result.coordinates.assign(n, std::vector<double>(static_cast<std::size_t>(out_dims), 0.0));
  result.explained_variance_ratio.assign(static_cast<std::size_t>(out_dims), 0.0);
  if (total_variance <= 0.0) {
    result.zero_variance = true;
    return result;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DataError("pca_project: eigendecomposition failed");

  // eigenvalues come back ascending; walk the top out_dims from the back
  for (int k = 0; k < out_dims; ++k) {
    Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - k;
    Eigen::VectorXd axis = solver.eigenvectors().col(col);
    // sign convention: the largest-magnitude loading is positive
    Eigen::Index max_idx = 0;
    for (Eigen::Index i = 1; i < axis.size(); ++i) {
      if (std::abs(axis(i)) > std::abs(axis(max_idx))) max_idx = i;
    }
    if (axis(max_idx) < 0) axis = -axis;
    double eigenvalue = std::max(0.0, solver.eigenvalues()(col));
    result.explained_variance_ratio[static_cast<std::size_t>(k)] = eigenvalue / total_variance;
    Eigen::VectorXd projected = x * axis;
    for (std::size_t i = 0; i < n; ++i) {
      result.coordinates[i][static_cast<std::size_t>(k)] = projected(static_cast<Eigen::Index>(i));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Silhouette
// ---------------------------------------------------------------------------

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double diff = a[i] - b[i];
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

}  // namespace

double silhouette(const std::vector<std::vector<double>>& vectors,
                  const std::vector<std::string>& labels) {
  if (vectors.size() != labels.size()) {
    throw DataError("silhouette: vectors and labels differ in length");
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i].empty()) keep.push_back(i);
  }
  std::map<std::string, std::vector<std::size_t>> clusters;
  for (auto i : keep) clusters[labels[i]].push_back(i);
  if (clusters.size() < 2) {
    throw DataError("silhouette: need at least two distinct labels, got " +
                    std::to_string(clusters.size()));
  }

  double total = 0.0;
  for (auto i : keep) {
    const auto& own = clusters[labels[i]];
    double a = 0.0;
    if (own.size() > 1) {
      for (auto j : own) {
        if (j != i) a += euclidean(vectors[i], vectors[j]);
      }
      a /= static_cast<double>(own.size() - 1);
    } else {
      total += 0.0;  // singleton convention: s = 0
      continue;
    }
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[i]) continue;
      double mean = 0.0;
      for (auto j : members) mean += euclidean(vectors[i], vectors[j]);
      mean /= static_cast<double>(members.size());
      b = std::min(b, mean);
    }
    double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(keep.size());
}

// ---------------------------------------------------------------------------
// Layer report
// ---------------------------------------------------------------------------

LayerReport layer_report(const std::vector<EmbeddingRecord>& records, const std::vector<int>& layers) {
  std::map<int, std::vector<const EmbeddingRecord*>> by_layer;
  for (const auto& r : records) by_layer[r.layer].push_back(&r);
  // canonical entity order makes the report permutation-invariant
  for (auto& [layer, list] : by_layer) {
    std::sort(list.begin(), list.end(), [](const EmbeddingRecord* a, const EmbeddingRecord* b) {
      return std::tuple(a->entity_id, a->entity_kind) < std::tuple(b->entity_id, b->entity_kind);
    });
  }

  std::vector<int> missing;
  for (int layer : layers) {
    if (!by_layer.count(layer)) missing.push_back(layer);
  }
  if (!missing.empty()) {
    std::string available;
    for (const auto& [layer, list] : by_layer) {
      if (!available.empty()) available += ", ";
      available += std::to_string(layer);
    }
    std::string wanted;
    for (int m : missing) {
      if (!wanted.empty()) wanted += ", ";
      wanted += std::to_string(m);
    }
    throw DataError("layer_report: layers {" + wanted + "} not present; available layers: {" +
                    available + "}");
  }

  LayerReport report;
  for (int layer : layers) {
    const auto& list = by_layer[layer];
    LayerStats stats;

    std::vector<std::vector<double>> vectors;
    std::vector<std::string> tissues;
    vectors.reserve(list.size());
    for (const auto* r : list) {
      vectors.push_back(r->vector);
      tissues.push_back(r->tissue_label.value_or(""));
    }

    std::set<std::string> distinct;
    for (const auto& t : tissues) {
      if (!t.empty()) distinct.insert(t);
    }
    if (distinct.size() >= 2) stats.silhouette_by_tissue = silhouette(vectors, tissues);

    // pair proximity: mean distance within one pair_id vs across pair_ids
    std::map<std::string, std::vector<std::size_t>> pairs;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i]->pair_id) pairs[*list[i]->pair_id].push_back(i);
    }
    double intra_sum = 0.0, inter_sum = 0.0;
    std::size_t intra_n = 0, inter_n = 0;
    std::vector<std::pair<std::string, std::size_t>> paired;  // (pair_id, index)
    for (const auto& [pid, members] : pairs) {
      for (auto m : members) paired.emplace_back(pid, m);
    }
    for (std::size_t a = 0; a < paired.size(); ++a) {
      for (std::size_t b = a + 1; b < paired.size(); ++b) {
        double dist = euclidean(vectors[paired[a].second], vectors[paired[b].second]);
        if (paired[a].first == paired[b].first) {
          intra_sum += dist;
          ++intra_n;
        } else {
          inter_sum += dist;
          ++inter_n;
        }
      }
    }
    if (intra_n > 0) stats.intra_pair_mean = intra_sum / static_cast<double>(intra_n);
    if (inter_n > 0) stats.inter_pair_mean = inter_sum / static_cast<double>(inter_n);

    std::vector<std::vector<double>> coords(list.size(), std::vector<double>(2, 0.0));
    if (list.size() >= 3 && vectors.front().size() >= 2) {
      auto pca = pca_project(vectors, 2);
      coords = pca.coordinates;
      stats.explained_variance_ratio = pca.explained_variance_ratio;
      stats.projection_degenerate = pca.zero_variance;
    } else {
      stats.projection_degenerate = true;
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      stats.points.push_back({list[i]->entity_id, list[i]->entity_kind, coords[i][0], coords[i][1],
                              list[i]->tissue_label.value_or(""), list[i]->pair_id.value_or("")});
    }
    report.layers[layer] = std::move(stats);
  }
  return report;
}

json layer_report_to_json(const LayerReport& report) {
  json layers = json::object();
  for (const auto& [layer, stats] : report.layers) {
    json points = json::array();
    for (const auto& p : stats.points) {
      json jp{{"entity_id", p.entity_id},
              {"kind", entity_kind_name(p.kind)},
              {"x", p.x},
              {"y", p.y}};
      if (!p.tissue_label.empty()) jp["tissue_label"] = p.tissue_label;
      if (!p.pair_id.empty()) jp["pair_id"] = p.pair_id;
      points.push_back(jp);
    }
    json js{{"points", points},
            {"explained_variance_ratio", stats.explained_variance_ratio},
            {"projection_degenerate", stats.projection_degenerate}};
    if (stats.silhouette_by_tissue) js["silhouette_by_tissue"] = *stats.silhouette_by_tissue;
    if (stats.intra_pair_mean) js["intra_pair_mean"] = *stats.intra_pair_mean;
    if (stats.inter_pair_mean) js["inter_pair_mean"] = *stats.inter_pair_mean;
    layers[std::to_string(layer)] = js;
  }
  json j{{"layers", layers}, {"distance_space", "original"}};
  if (!report.pooling.empty()) j["pooling"] = report.pooling;
  if (!report.model_tag.empty()) j["model_tag"] = report.model_tag;
  return j;
}

// ---------------------------------------------------------------------------
// SVG scatter
// ---------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

void render_scatter_svg(const std::vector<std::array<double, 2>>& coordinates,
                        const std::vector<std::string>& labels,
                        const std::filesystem::path& out_path) {
  if (coordinates.size() != labels.size()) {
    throw DataError("render_scatter_svg: coordinates and labels differ in length");
  }
  for (const auto& c : coordinates) {
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) {
      throw DataError("render_scatter_svg: coordinates must be finite");
    }
  }

  const double width = 640, height = 480;
  const double left = 50, right = 460, top = 40, bottom = 440;

  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  if (!coordinates.empty()) {
    min_x = max_x = coordinates[0][0];
    min_y = max_y = coordinates[0][1];
    for (const auto& c : coordinates) {
      min_x = std::min(min_x, c[0]);
      max_x = std::max(max_x, c[0]);
      min_y = std::min(min_y, c[1]);
      max_y = std::max(max_y, c[1]);
    }
    if (max_x == min_x) max_x = min_x + 1;
    if (max_y == min_y) max_y = min_y + 1;
  }
  auto sx = [&](double v) { return left + (v - min_x) / (max_x - min_x) * (right - left); };
  auto sy = [&](double v) { return bottom - (v - min_y) / (max_y - min_y) * (bottom - top); };

  std::vector<std::string> legend;
  {
    std::set<std::string> distinct(labels.begin(), labels.end());
    legend.assign(distinct.begin(), distinct.end());
  }
  std::map<std::string, std::string> color;
  for (std::size_t i = 0; i < legend.size(); ++i) {
    color[legend[i]] = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
  }

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  svg << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  svg << "  <rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << right - left
      << "\" height=\"" << bottom - top << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    svg << "  <circle cx=\"" << fmt(sx(coordinates[i][0])) << "\" cy=\"" << fmt(sy(coordinates[i][1]))
        << "\" r=\"3\" fill=\"" << color[labels[i]] << "\" fill-opacity=\"0.8\"/>\n";
  }
  double ly = top + 10;
  for (const auto& label : legend) {
    svg << "  <rect x=\"" << right + 15 << "\" y=\"" << fmt(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
        << color[label] << "\"/>\n";
    svg << "  <text x=\"" << right + 30 << "\" y=\"" << fmt(ly + 1)
        << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape_xml(label.empty() ? "(unlabeled)" : label) << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";
  write_text_file(out_path, svg.str());
}

}  // namespace gpmap
