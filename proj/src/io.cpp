#include "decov/io.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "decov/common.hpp"

namespace decov::io {

namespace {

constexpr std::array<char, 8> kSampleMagic = {'D', 'E', 'C', 'O', 'V', 'S', 'S', '1'};

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw ParameterError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  return out;
}

double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParameterError("cannot parse number '" + std::string(s) + "'");
  return v;
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParameterError("ragged CSV: expected " + std::to_string(rows.front().size()) +
                           " fields, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf.data(), ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParameterError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json to_json(const Gbn& g) {
  json edges = json::array();
  for (Eigen::Index i = 0; i < g.size(); ++i)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      if (g.weights(i, j) != 0.0) edges.push_back({i, j, g.weights(i, j)});
  return {{"p", g.size()}, {"edges", edges}, {"noise_var", g.noise_var}};
}

Gbn gbn_from_json(const json& j) {
  try {
    const Eigen::Index p = j.at("p").get<Eigen::Index>();
    if (p < 1) throw ParameterError("GBN JSON: p must be >= 1");
    Gbn g{Eigen::MatrixXd::Zero(p, p), j.value("noise_var", 1.0)};
    for (const auto& e : j.at("edges")) {
      const auto a = e.at(0).get<Eigen::Index>(), b = e.at(1).get<Eigen::Index>();
      if (a < 0 || b < 0 || a >= p || b >= p || a == b)
        throw ParameterError("GBN JSON: invalid edge endpoint");
      g.weights(a, b) = e.at(2).get<double>();
    }
    if (!topological_order(g.weights)) throw StructuralError("GBN JSON: graph has a cycle");
    return g;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("GBN JSON: ") + e.what());
  }
}

json to_json(const DegreeDistribution& d) {
  return {{"max_degree", d.max_degree()},
          {"weights", std::vector<double>(d.weights().data(), d.weights().data() + d.max_degree())}};
}

DegreeDistribution degree_from_json(const json& j) {
  try {
    const auto w = j.at("weights").get<std::vector<double>>();
    if (j.contains("max_degree") && j.at("max_degree").get<std::size_t>() != w.size())
      throw ParameterError("degree distribution JSON: max_degree does not match weights");
    return DegreeDistribution(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())));
  } catch (const json::exception& e) {
    throw ParameterError(std::string("degree distribution JSON: ") + e.what());
  }
}

json to_json(const GraphEstimate& g) {
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({e.parent, e.child, e.weight});
  return {{"edges", edges}, {"order", g.order}};
}

GraphEstimate graph_from_json(const json& j) {
  try {
    GraphEstimate g;
    for (const auto& e : j.at("edges"))
      g.edges.push_back({e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>(), e.at(2).get<double>()});
    g.order = j.at("order").get<std::vector<Eigen::Index>>();
    return g;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("graph JSON: ") + e.what());
  }
}

json to_json(const RegularDesign& r) {
  return {{"lambda", to_json(r.lambda)},
          {"rho", to_json(r.rho)},
          {"objective", r.objective},
          {"feasibility_report", r.slacks}};
}

json to_json(const PreferentialDesign& r) {
  return {{"lambda_h", to_json(r.lambda_h)}, {"lambda_l", to_json(r.lambda_l)},
          {"rho_h", to_json(r.rho_h)},       {"rho_l", to_json(r.rho_l)},
          {"d", r.d},                        {"objective", r.objective},
          {"consistency_ratio", r.consistency_ratio},
          {"feasibility_report", r.slacks}};
}

void write_samples(const fs::path& path, const SampleSet& xs, bool text) {
  if (!xs.allFinite()) throw NumericError("write_samples: non-finite sample");
  if (text) {
    std::ofstream out = open_out(path);
    for (Eigen::Index k = 0; k < xs.cols(); ++k) {
      for (Eigen::Index r = 0; r < xs.rows(); ++r) out << (r ? "," : "") << format_double(xs(r, k));
      out << '\n';
    }
    return;
  }
  std::ofstream out = open_out(path, std::ios::binary);
  const auto rows = static_cast<std::uint32_t>(xs.rows());
  const auto cols = static_cast<std::uint32_t>(xs.cols());
  out.write(kSampleMagic.data(), kSampleMagic.size());
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(xs.data()),
            static_cast<std::streamsize>(sizeof(double) * xs.size()));
}

SampleSet read_samples(const fs::path& path) {
  const std::string bytes = read_text(path);
  if (bytes.size() >= 16 && std::memcmp(bytes.data(), kSampleMagic.data(), 8) == 0) {
    std::uint32_t rows = 0, cols = 0;
    std::memcpy(&rows, bytes.data() + 8, 4);
    std::memcpy(&cols, bytes.data() + 12, 4);
    const std::size_t need = 16 + sizeof(double) * std::size_t(rows) * cols;
    if (bytes.size() != need) throw ParameterError("sample file " + path.string() + " is truncated");
    SampleSet xs(rows, cols);
    std::memcpy(xs.data(), bytes.data() + 16, need - 16);
    return xs;
  }
  const auto rows = parse_csv(bytes);
  if (rows.empty()) throw ParameterError("sample file " + path.string() + " is empty");
  SampleSet xs(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t r = 0; r < rows[k].size(); ++r) xs(r, k) = rows[k][r];
  return xs;
}

void write_matrix(std::ostream& os, const SensingMatrix& a) {
  os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << ' ' << format_double(a.norm_const) << '\n';
  for (Eigen::Index j = 0; j < a.entries.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(a.entries, j); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
}

void write_matrix(const fs::path& path, const SensingMatrix& a) {
  std::ofstream out = open_out(path);
  write_matrix(out, a);
}

SensingMatrix read_matrix(std::istream& is) {
  Eigen::Index d = 0, p = 0, nnz = 0;
  std::string norm;
  if (!(is >> d >> p >> nnz >> norm) || d < 1 || p < 1 || nnz < 0)
    throw ParameterError("matrix file: bad header (expected 'd p nnz norm_const')");
  SensingMatrix a{Eigen::SparseMatrix<double>(d, p), parse_double(norm)};
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(nnz);
  for (Eigen::Index t = 0; t < nnz; ++t) {
    Eigen::Index r = 0, c = 0;
    std::string v;
    if (!(is >> r >> c >> v)) throw ParameterError("matrix file: truncated triplet list");
    if (r < 0 || r >= d || c < 0 || c >= p) throw ParameterError("matrix file: index out of range");
    trips.emplace_back(r, c, parse_double(v));
  }
  a.entries.setFromTriplets(trips.begin(), trips.end(), [](double, double) -> double {
    throw ParameterError("matrix file: duplicate (row, col) entry");
  });
  return a;
}

SensingMatrix read_matrix(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_matrix(in);
}

void write_dense_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

Eigen::MatrixXd read_dense_csv(const fs::path& path) {
  const auto rows = parse_csv(read_text(path));
  if (rows.empty()) throw ParameterError("matrix CSV " + path.string() + " is empty");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

void write_trajectory_csv(const fs::path& path, const std::vector<DeState>& states) {
  std::ofstream out = open_out(path);
  out << "iter,E,V\n";
  for (std::size_t t = 0; t < states.size(); ++t)
    out << t << ',' << format_double(states[t].e) << ',' << format_double(states[t].v) << '\n';
}

void write_trajectory_csv(const fs::path& path, const std::vector<PrefDeState>& states) {
  std::ofstream out = open_out(path);
  out << "iter,E_HH,E_HL,E_LL,V_HH,V_HL,V_LL\n";
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto& s = states[t];
    out << t;
    for (const double v : {s.e_hh, s.e_hl, s.e_ll, s.v_hh, s.v_hl, s.v_ll}) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace decov::io
