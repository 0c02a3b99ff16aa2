#pragma once

#include <filesystem>
#include <string>

#include "sagif/encoding.hpp"
#include "sagif/evaluation.hpp"
#include "sagif/graph.hpp"
#include "sagif/model.hpp"
#include "sagif/training.hpp"

namespace sagif {

/// Graph bundle directory layout: manifest.json, edges.tsv (one undirected
/// edge per line), features.csv, labels.txt, splits.json.
GraphBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const std::filesystem::path& dir, const GraphBundle& g);

// Binary formats, little-endian. Magic "ORCS" / "SENC" / "SGIF".
void save_oracle(const std::filesystem::path& path, const OracleSimilarity& sim);
OracleSimilarity load_oracle(const std::filesystem::path& path);

void save_encoding(const std::filesystem::path& path, const SimilarityEncoding& enc);
SimilarityEncoding load_encoding(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Writes to a temp file in the same directory, then renames.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

std::string metrics_report_to_json(const MetricsReport& report);
std::string groups_to_csv(const MetricsReport& report);

/// Shortest round-trippable decimal representation.
std::string format_double(double v);

}  // namespace sagif
