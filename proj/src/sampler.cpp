#include "decov/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "decov/common.hpp"

namespace decov {

namespace {

constexpr int kRepairRounds = 100;
constexpr int kRestarts = 20;

std::vector<int> draw_degrees(const DegreeDistribution& law, Eigen::Index count, int cap, Rng& rng) {
  const Eigen::VectorXd& w = law.weights();
  std::discrete_distribution<int> pick(w.data(), w.data() + w.size());
  std::vector<int> deg(count);
  for (auto& k : deg) k = std::min(pick(rng) + 1, cap);
  return deg;
}

// Shifts `excess` stubs out of (positive) or into (negative) the sequence, walking
// from the back and keeping each entry within [lo, hi]. Returns the unplaced remainder.
long shift_degrees(std::vector<int>& deg, long excess, int lo, int hi) {
  for (auto it = deg.rbegin(); it != deg.rend() && excess != 0; ++it) {
    const long target = std::clamp<long>(*it - excess, lo, hi);
    excess -= *it - target;
    *it = static_cast<int>(target);
  }
  return excess;
}

void repair(std::vector<int>& cols, std::vector<int>& rows, const DegreeDistribution& lambda,
            const DegreeDistribution& rho, int col_cap, int row_cap) {
  const long c = std::accumulate(cols.begin(), cols.end(), 0L);
  const long r = std::accumulate(rows.begin(), rows.end(), 0L);
  const auto lsup = lambda.support();
  const auto rsup = rho.support();
  // Columns absorb the mismatch first, within the law's support range.
  long excess = shift_degrees(cols, c - r, lsup.front(), std::min(lsup.back(), col_cap));
  excess = -shift_degrees(rows, -excess, rsup.front(), std::min(rsup.back(), row_cap));
  if (excess != 0) excess = shift_degrees(cols, excess, 1, col_cap);
  if (excess != 0) excess = -shift_degrees(rows, -excess, 1, row_cap);
  if (excess != 0)
    throw SamplingError("degree sequences cannot be balanced; try larger dimensions");
}

struct Edge {
  int row, col;
};

// Configuration-model pairing; duplicates are removed by double-edge swaps.
std::vector<Edge> pair_stubs(const std::vector<int>& cols, const std::vector<int>& rows, Rng& rng) {
  std::vector<int> col_stubs, row_stubs;
  for (int j = 0; j < static_cast<int>(cols.size()); ++j) col_stubs.insert(col_stubs.end(), cols[j], j);
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) row_stubs.insert(row_stubs.end(), rows[i], i);
  const std::size_t m = col_stubs.size();

  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    std::shuffle(row_stubs.begin(), row_stubs.end(), rng);
    std::vector<Edge> edges(m);
    for (std::size_t t = 0; t < m; ++t) edges[t] = {row_stubs[t], col_stubs[t]};

    std::multiset<std::pair<int, int>> present;
    for (const Edge& e : edges) present.emplace(e.row, e.col);
    auto count = [&](int r, int c) { return present.count({r, c}); };
    std::uniform_int_distribution<std::size_t> any(0, m - 1);

    for (int round = 0; round < kRepairRounds; ++round) {
      bool clean = true;
      for (std::size_t t = 0; t < m; ++t) {
        Edge& e = edges[t];
        if (count(e.row, e.col) < 2) continue;
        clean = false;
        // Try swapping rows with a random partner edge.
        for (int tries = 0; tries < 64; ++tries) {
          Edge& f = edges[any(rng)];
          if (f.row == e.row || f.col == e.col) continue;
          if (count(f.row, e.col) > 0 || count(e.row, f.col) > 0) continue;
          present.erase(present.find({e.row, e.col}));
          present.erase(present.find({f.row, f.col}));
          std::swap(e.row, f.row);
          present.emplace(e.row, e.col);
          present.emplace(f.row, f.col);
          break;
        }
      }
      if (clean) return edges;
    }
    bool clean = true;
    for (const Edge& e : edges) clean = clean && count(e.row, e.col) < 2;
    if (clean) return edges;
  }
  throw SamplingError("could not place edges without duplicates after " +
                      std::to_string(kRestarts) + " restarts; try larger dimensions");
}

void check_consistency(const DegreeDistribution& lambda, const DegreeDistribution& rho,
                       Eigen::Index d, Eigen::Index p, const char* what) {
  const double col_edges = p * lambda.mean();
  const double row_edges = d * rho.mean();
  if (std::abs(col_edges - row_edges) > 0.05 * std::max(col_edges, row_edges))
    throw ParameterError(std::string(what) + ": edge counts disagree (columns " +
                         std::to_string(col_edges) + ", rows " + std::to_string(row_edges) +
                         "); need d * mean(rho) ~ p * mean(lambda)");
}

// Draws the block as (row, col) edge list with signs.
std::vector<Eigen::Triplet<double>> signed_block(const DegreeDistribution& lambda,
                                                 const DegreeDistribution& rho, Eigen::Index d,
                                                 Eigen::Index p, double magnitude, Eigen::Index col0,
                                                 std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<int> cols = draw_degrees(lambda, p, static_cast<int>(d), rng);
  std::vector<int> rows = draw_degrees(rho, d, static_cast<int>(p), rng);
  repair(cols, rows, lambda, rho, static_cast<int>(d), static_cast<int>(p));
  const std::vector<Edge> edges = pair_stubs(cols, rows, rng);
  std::bernoulli_distribution coin(0.5);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(edges.size());
  for (const Edge& e : edges) trips.emplace_back(e.row, col0 + e.col, coin(rng) ? magnitude : -magnitude);
  return trips;
}

void check_dims(Eigen::Index d, Eigen::Index p) {
  if (d < 1 || p < 1) throw ParameterError("sensing matrix dimensions must be positive");
}

}  // namespace

SensingMatrix sample_sensing_matrix(const DegreeDistribution& lambda, const DegreeDistribution& rho,
                                    Eigen::Index d, Eigen::Index p,
                                    std::optional<double> norm_const, std::uint64_t seed) {
  check_dims(d, p);
  check_consistency(lambda, rho, d, p, "sample_sensing_matrix");
  const double a = norm_const.value_or(lambda.mean());
  if (!(a > 0.0)) throw ParameterError("normalization constant must be positive");
  const auto trips = signed_block(lambda, rho, d, p, 1.0 / std::sqrt(a), 0, seed);
  SensingMatrix out{Eigen::SparseMatrix<double>(d, p), a};
  out.entries.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SensingMatrix sample_preferential_matrix(const DegreeDistribution& lambda_h,
                                         const DegreeDistribution& lambda_l,
                                         const DegreeDistribution& rho_h,
                                         const DegreeDistribution& rho_l, Eigen::Index d,
                                         Eigen::Index n_h, Eigen::Index n_l,
                                         std::optional<double> norm_const, std::uint64_t seed) {
  check_dims(d, n_h);
  check_dims(d, n_l);
  check_consistency(lambda_h, rho_h, d, n_h, "sample_preferential_matrix (high block)");
  check_consistency(lambda_l, rho_l, d, n_l, "sample_preferential_matrix (low block)");
  const double a = norm_const.value_or((n_h * lambda_h.mean() + n_l * lambda_l.mean()) /
                                       static_cast<double>(n_h + n_l));
  if (!(a > 0.0)) throw ParameterError("normalization constant must be positive");
  const double mag = 1.0 / std::sqrt(a);
  auto trips = signed_block(lambda_h, rho_h, d, n_h, mag, 0, seed);
  const auto low = signed_block(lambda_l, rho_l, d, n_l, mag, n_h, mix_seed(seed, 1));
  trips.insert(trips.end(), low.begin(), low.end());
  SensingMatrix out{Eigen::SparseMatrix<double>(d, n_h + n_l), a};
  out.entries.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SensingMatrix baseline_left_regular(int delta, Eigen::Index d, Eigen::Index p, std::uint64_t seed) {
  check_dims(d, p);
  if (delta < 1 || delta > d) throw ParameterError("baseline delta must satisfy 1 <= delta <= d");
  Rng rng = make_rng(seed);
  std::vector<int> all(d);
  std::iota(all.begin(), all.end(), 0);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(delta) * p);
  for (Eigen::Index j = 0; j < p; ++j) {
    // Partial Fisher-Yates: the first delta slots become a uniform subset.
    for (int t = 0; t < delta; ++t) {
      std::uniform_int_distribution<int> pick(t, static_cast<int>(d) - 1);
      std::swap(all[t], all[pick(rng)]);
      trips.emplace_back(all[t], j, 1.0);
    }
  }
  SensingMatrix out{Eigen::SparseMatrix<double>(d, p), 1.0};
  out.entries.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Eigen::VectorXi row_degrees(const SensingMatrix& a) {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(a.rows());
  for (Eigen::Index j = 0; j < a.entries.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a.entries, j); it; ++it) ++deg[it.row()];
  return deg;
}

Eigen::VectorXi col_degrees(const SensingMatrix& a) {
  Eigen::VectorXi deg = Eigen::VectorXi::Zero(a.cols());
  for (Eigen::Index j = 0; j < a.entries.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a.entries, j); it; ++it) ++deg[it.col()];
  return deg;
}

}  // namespace decov
