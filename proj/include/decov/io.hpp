#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "decov/causal.hpp"
#include "decov/de.hpp"
#include "decov/design.hpp"
#include "decov/factorgraph.hpp"
#include "decov/model.hpp"
#include "decov/sampler.hpp"

namespace decov::io {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path);
void write_text(const fs::path& path, const std::string& text);
json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);

// {p, edges: [[i, j, w]...], noise_var}
json to_json(const Gbn& g);
Gbn gbn_from_json(const json& j);

// {max_degree, weights: [...]} with weights[k - 1] = P(k)
json to_json(const DegreeDistribution& d);
DegreeDistribution degree_from_json(const json& j);

// {edges: [[parent, child, weight]...], order: [...]}
json to_json(const GraphEstimate& g);
GraphEstimate graph_from_json(const json& j);

json to_json(const RegularDesign& r);
json to_json(const PreferentialDesign& r);

/// Binary: 8-byte magic, uint32 rows, uint32 cols, then column-major float64.
/// Text: one sample per line, comma separated.
void write_samples(const fs::path& path, const SampleSet& xs, bool text);
/// Detects the binary magic, otherwise parses CSV (one sample per line).
SampleSet read_samples(const fs::path& path);

/// Header "d p nnz norm_const", then "row col value" per nonzero; exact round trip.
void write_matrix(std::ostream& os, const SensingMatrix& a);
void write_matrix(const fs::path& path, const SensingMatrix& a);
SensingMatrix read_matrix(std::istream& is);
SensingMatrix read_matrix(const fs::path& path);

/// Dense matrix as CSV rows, shortest round-trip formatting.
void write_dense_csv(const fs::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_dense_csv(const fs::path& path);

void write_trajectory_csv(const fs::path& path, const std::vector<DeState>& states);
void write_trajectory_csv(const fs::path& path, const std::vector<PrefDeState>& states);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace decov::io
