#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "gpmap/embed.hpp"
#include "gpmap/util.hpp"
#include "oracles.hpp"

using namespace gpmap;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  std::vector<std::vector<double>> m(n, std::vector<double>(d));
  for (auto& row : m) {
    for (auto& v : row) v = dist(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("load_embeddings parses records, header, rejects, and dimension errors") {
  fs::create_directories("embed_test");
  std::string lines =
      R"({"t":"header","pooling":"mean","model_tag":"toy"})" "\n"
      R"({"entity_id":"g1","kind":"gene","layer":10,"vector":[1,2,3],"pair_id":"p1","tissue_label":"brain"})" "\n"
      R"({"entity_id":"d1","kind":"phenotype","layer":10,"vector":[4,5,6],"pair_id":"p1"})" "\n"
      R"({"entity_id":"bad","kind":"gene","layer":10})" "\n"
      "garbage line\n";
  write_text_file("embed_test/a.jsonl", lines);
  auto file = load_embeddings("embed_test/a.jsonl");
  CHECK(file.pooling == "mean");
  CHECK(file.model_tag == "toy");
  CHECK(file.records.size() == 2);
  CHECK(file.rejects.size() == 2);
  CHECK(file.rejects[0].row == 4);
  CHECK(file.rejects[1].row == 5);

  // mixed dimensions inside one layer are a hard error naming the layer
  std::string mixed =
      R"({"entity_id":"a","kind":"gene","layer":3,"vector":[1,2]})" "\n"
      R"({"entity_id":"b","kind":"gene","layer":3,"vector":[1,2,3]})" "\n";
  write_text_file("embed_test/mixed.jsonl", mixed);
  try {
    load_embeddings("embed_test/mixed.jsonl");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
  }
}

TEST_CASE("pca_project matches the Jacobi eigendecomposition oracle") {
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 5; ++trial) {
    std::size_t n = 10 + rng() % 15;
    std::size_t d = 3 + rng() % 5;
    auto data = random_matrix(n, d, rng);
    auto result = pca_project(data, 2);

    // oracle: center, covariance, Jacobi eigenvectors, project
    std::vector<double> mean(d, 0.0);
    for (const auto& row : data) {
      for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
    }
    for (auto& v : mean) v /= double(n);
    std::vector<std::vector<double>> centered = data;
    for (auto& row : centered) {
      for (std::size_t k = 0; k < d; ++k) row[k] -= mean[k];
    }
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) sum += centered[i][a] * centered[i][b];
        cov[a][b] = sum / double(n - 1);
      }
    }
    auto eig = oracles::jacobi_eigen(cov);
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<double> axis(d);
      for (std::size_t r = 0; r < d; ++r) axis[r] = eig.eigenvectors[r][static_cast<std::size_t>(comp)];
      // same sign convention as the library
      std::size_t max_idx = 0;
      for (std::size_t r = 1; r < d; ++r) {
        if (std::abs(axis[r]) > std::abs(axis[max_idx])) max_idx = r;
      }
      if (axis[max_idx] < 0) {
        for (auto& v : axis) v = -v;
      }
      double total = 0;
      for (std::size_t r = 0; r < d; ++r) total += cov[r][r];
      CHECK(result.explained_variance_ratio[static_cast<std::size_t>(comp)] ==
            doctest::Approx(eig.eigenvalues[static_cast<std::size_t>(comp)] / total).epsilon(1e-8));
      for (std::size_t i = 0; i < n; ++i) {
        double projected = 0;
        for (std::size_t r = 0; r < d; ++r) projected += centered[i][r] * axis[r];
        CHECK(result.coordinates[i][static_cast<std::size_t>(comp)] ==
              doctest::Approx(projected).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("pca on collinear data puts zero variance on the second component") {
  std::vector<std::vector<double>> line;
  for (int i = 0; i < 8; ++i) {
    double t = i;
    line.push_back({t, 2 * t, -t});
  }
  auto result = pca_project(line, 2);
  CHECK(result.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.explained_variance_ratio[1] == doctest::Approx(0.0).epsilon(1e-12));
  for (const auto& row : result.coordinates) {
    CHECK(std::abs(row[1]) < 1e-9);
  }
}

TEST_CASE("pca on identical points warns and returns zeros") {
  std::vector<std::vector<double>> same(5, std::vector<double>{1.0, 2.0, 3.0});
  auto result = pca_project(same, 2);
  CHECK(result.zero_variance);
  for (const auto& row : result.coordinates) {
    CHECK(row[0] == 0.0);
    CHECK(row[1] == 0.0);
  }
}

TEST_CASE("pca explained variance ratios are non-increasing and sum at most one") {
  std::mt19937_64 rng(99);
  auto data = random_matrix(30, 6, rng);
  auto result = pca_project(data, 4);
  double sum = 0;
  for (std::size_t i = 0; i < result.explained_variance_ratio.size(); ++i) {
    if (i > 0) CHECK(result.explained_variance_ratio[i] <= result.explained_variance_ratio[i - 1] + 1e-12);
    sum += result.explained_variance_ratio[i];
  }
  CHECK(sum <= 1.0 + 1e-9);
}

TEST_CASE("pca projection is rigid when out_dims equals the data dimension") {
  std::mt19937_64 rng(17);
  auto data = random_matrix(12, 2, rng);
  auto result = pca_project(data, 2);
  for (std::size_t a = 0; a < data.size(); ++a) {
    for (std::size_t b = a + 1; b < data.size(); ++b) {
      double orig = std::hypot(data[a][0] - data[b][0], data[a][1] - data[b][1]);
      double proj = std::hypot(result.coordinates[a][0] - result.coordinates[b][0],
                               result.coordinates[a][1] - result.coordinates[b][1]);
      CHECK(proj == doctest::Approx(orig).epsilon(1e-9));
    }
  }
}

TEST_CASE("silhouette separates tight distant clusters and matches brute force") {
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> vectors;
  std::vector<std::string> labels;
  std::normal_distribution<double> noise(0.0, 0.05);
  for (int i = 0; i < 20; ++i) {
    vectors.push_back({noise(rng), noise(rng)});
    labels.push_back("a");
  }
  for (int i = 0; i < 20; ++i) {
    vectors.push_back({10 + noise(rng), 10 + noise(rng)});
    labels.push_back("b");
  }
  double s = silhouette(vectors, labels);
  CHECK(s > 0.9);
  CHECK(s == doctest::Approx(oracles::silhouette(vectors, labels)).epsilon(1e-12));
}

TEST_CASE("silhouette of random labels on one blob is near zero") {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> vectors;
    std::vector<std::string> labels;
    for (int i = 0; i < 60; ++i) {
      vectors.push_back({noise(rng), noise(rng), noise(rng)});
      labels.push_back(rng() % 2 == 0 ? "a" : "b");
    }
    double s = silhouette(vectors, labels);
    CAPTURE(seed);
    CHECK(std::abs(s) < 0.1);
    CHECK(s == doctest::Approx(oracles::silhouette(vectors, labels)).epsilon(1e-12));
  }
}

TEST_CASE("silhouette requires two labels and excludes unlabeled points") {
  std::vector<std::vector<double>> vectors{{0, 0}, {1, 1}, {2, 2}};
  CHECK_THROWS_AS(silhouette(vectors, {"a", "a", "a"}), DataError);
  CHECK_THROWS_AS(silhouette(vectors, {"a", "", ""}), DataError);
  CHECK_NOTHROW(silhouette(vectors, {"a", "b", ""}));
}

TEST_CASE("layer_report computes pair distances, tissue silhouette, and coordinates") {
  std::vector<EmbeddingRecord> records;
  auto add = [&](const std::string& id, EntityKind kind, int layer, std::vector<double> vec,
                 const std::string& pair, const std::string& tissue) {
    EmbeddingRecord r;
    r.entity_id = id;
    r.entity_kind = kind;
    r.layer = layer;
    r.vector = std::move(vec);
    if (!pair.empty()) r.pair_id = pair;
    if (!tissue.empty()) r.tissue_label = tissue;
    records.push_back(std::move(r));
  };
  // layer 1: pair members coincide -> intra-pair distance 0
  add("g1", EntityKind::Gene, 1, {0, 0, 0}, "p1", "brain");
  add("d1", EntityKind::Phenotype, 1, {0, 0, 0}, "p1", "brain");
  add("g2", EntityKind::Gene, 1, {5, 5, 5}, "p2", "heart");
  add("d2", EntityKind::Phenotype, 1, {5, 5, 5}, "p2", "heart");

  auto report = layer_report(records, {1});
  const auto& stats = report.layers.at(1);
  REQUIRE(stats.intra_pair_mean.has_value());
  CHECK(*stats.intra_pair_mean == doctest::Approx(0.0));
  REQUIRE(stats.inter_pair_mean.has_value());
  CHECK(*stats.inter_pair_mean == doctest::Approx(std::sqrt(75.0)));
  REQUIRE(stats.silhouette_by_tissue.has_value());
  CHECK(*stats.silhouette_by_tissue == doctest::Approx(1.0));
  CHECK(stats.points.size() == 4);

  // missing layer names the available ones
  try {
    layer_report(records, {1, 20});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    std::string msg = e.what();
    CHECK(msg.find("20") != std::string::npos);
    CHECK(msg.find("{1}") != std::string::npos);
  }
}

TEST_CASE("layer_report is permutation invariant") {
  std::mt19937_64 rng(12);
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 12; ++i) {
    EmbeddingRecord r;
    r.entity_id = "e" + std::to_string(i);
    r.entity_kind = i % 2 == 0 ? EntityKind::Gene : EntityKind::Phenotype;
    r.layer = 7;
    r.vector = {double(rng() % 100), double(rng() % 100), double(rng() % 100)};
    r.pair_id = "p" + std::to_string(i / 2);
    r.tissue_label = i % 3 == 0 ? "brain" : "liver";
    records.push_back(r);
  }
  auto a = layer_report_to_json(layer_report(records, {7})).dump();
  std::reverse(records.begin(), records.end());
  auto b = layer_report_to_json(layer_report(records, {7})).dump();
  CHECK(a == b);
}

TEST_CASE("scatter svg is deterministic and structured") {
  fs::create_directories("embed_test");
  std::vector<std::array<double, 2>> coords{{0.0, 0.0}, {1.0, 2.0}, {3.0, -1.0}};
  std::vector<std::string> labels{"brain", "heart", "brain"};
  render_scatter_svg(coords, labels, "embed_test/s1.svg");
  render_scatter_svg(coords, labels, "embed_test/s2.svg");
  std::string svg = read_text_file("embed_test/s1.svg");
  CHECK(svg == read_text_file("embed_test/s2.svg"));
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.rfind("</svg>") != std::string::npos);
  // 3 markers, 2 legend entries
  std::size_t circles = 0, legend_rects = 0, pos = 0;
  while ((pos = svg.find("<circle", pos)) != std::string::npos) {
    ++circles;
    pos += 7;
  }
  pos = 0;
  while ((pos = svg.find("width=\"10\" height=\"10\"", pos)) != std::string::npos) {
    ++legend_rects;
    pos += 10;
  }
  CHECK(circles == 3);
  CHECK(legend_rects == 2);

  // empty input still yields a valid document
  render_scatter_svg({}, {}, "embed_test/empty.svg");
  std::string empty = read_text_file("embed_test/empty.svg");
  CHECK(empty.find("<svg") != std::string::npos);
  CHECK(empty.find("<circle") == std::string::npos);
}
