#pragma once

// File formats: Matrix Market adjacency/Laplacian matrices, JSON manifests and
// results, CSV tables.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "commonvar/error.hpp"
#include "commonvar/graph.hpp"
#include "commonvar/laplacian.hpp"
#include "commonvar/linalg.hpp"
#include "commonvar/minimax.hpp"

namespace commonvar::io {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

inline std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  return out;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Matrix Market

/// Coordinate, real, symmetric: lower triangle, 1-based, exact zeros omitted.
inline void write_matrix_market(std::ostream& out, const SymMatrix& m) {
  const Index n = m.n();
  Index nnz = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) nnz += m(i, j) != 0.0;
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << n << ' ' << n << ' ' << nnz << '\n';
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) {
      if (m(i, j) != 0.0) out << (i + 1) << ' ' << (j + 1) << ' ' << format_double(m(i, j)) << '\n';
    }
  }
}

inline void write_matrix_market(const fs::path& path, const SymMatrix& m) {
  auto out = open_out(path);
  write_matrix_market(out, m);
}

/// Reads coordinate matrices (real/integer/pattern, symmetric/general).
/// General matrices must already be symmetric.
inline SymMatrix read_matrix_market(std::istream& in, const std::string& origin = "<stream>") {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Io, origin + ": empty file");
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  auto lower = [](std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  require(tag == "%%MatrixMarket" && lower(object) == "matrix" && lower(format) == "coordinate",
          ErrorKind::Io, origin + ": expected a coordinate Matrix Market header");
  field = lower(field);
  symmetry = lower(symmetry);
  require(field == "real" || field == "integer" || field == "pattern", ErrorKind::Io,
          origin + ": unsupported field '" + field + "'");
  require(symmetry == "symmetric" || symmetry == "general", ErrorKind::Io,
          origin + ": unsupported symmetry '" + symmetry + "'");

  while (std::getline(in, line) && (line.empty() || line[0] == '%')) {
  }
  std::istringstream size_line(line);
  long long rows = 0, cols = 0, nnz = 0;
  require(static_cast<bool>(size_line >> rows >> cols >> nnz) && rows == cols && rows > 0 &&
              nnz >= 0,
          ErrorKind::Io, origin + ": malformed size line");

  Matrix a = Matrix::Zero(rows, cols);
  for (long long e = 0; e < nnz; ++e) {
    long long i = 0, j = 0;
    double v = 1.0;
    require(static_cast<bool>(in >> i >> j), ErrorKind::Io, origin + ": truncated entry list");
    if (field != "pattern") {
      require(static_cast<bool>(in >> v), ErrorKind::Io, origin + ": missing value");
    }
    require(i >= 1 && i <= rows && j >= 1 && j <= cols, ErrorKind::Io,
            origin + ": entry index out of range");
    a(i - 1, j - 1) = v;
    if (symmetry == "symmetric") a(j - 1, i - 1) = v;
  }
  require(a == a.transpose(), ErrorKind::InvalidInput,
          origin + ": matrix is not symmetric");
  return SymMatrix(std::move(a));
}

inline SymMatrix read_matrix_market(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
  return read_matrix_market(in, path.string());
}

// ---------------------------------------------------------------------------
// CSV

inline void write_csv(const fs::path& path, const std::vector<std::string>& header,
                      const Matrix& rows) {
  auto out = open_out(path);
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index r = 0; r < rows.rows(); ++r) {
    for (Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_double(rows(r, c));
    out << '\n';
  }
}

/// Every number in a comma/whitespace separated file, header lines skipped.
inline std::vector<double> read_numbers(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& c : line)
      if (c == ',' || c == ';' || c == '\t') c = ' ';
    std::istringstream ls(line);
    std::string token;
    while (ls >> token) {
      std::size_t used = 0;
      try {
        const double v = std::stod(token, &used);
        if (used == token.size()) values.push_back(v);
      } catch (const std::exception&) {
      }
    }
  }
  return values;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

inline void require_schema(const json& j, const std::string& what) {
  const int version = j.value("schema_version", kSchemaVersion);
  require(version == kSchemaVersion, ErrorKind::InvalidInput,
          what + " has schema version " + std::to_string(version) + ", expected " +
              std::to_string(kSchemaVersion));
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Norm kinds

inline json norm_to_json(const NormKind& norm) {
  json j;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NormKind::FirstEigenvalue>) {
          j["kind"] = "first";
        } else if constexpr (std::is_same_v<T, NormKind::AverageEigenvalue>) {
          j["kind"] = "average";
        } else if constexpr (std::is_same_v<T, NormKind::Weighted>) {
          j["kind"] = "weighted";
          j["weights"] = k.weights;
        } else {
          j["kind"] = "power";
          j["alpha"] = k.alpha;
        }
      },
      norm.kind());
  return j;
}

inline NormKind norm_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "first") return NormKind::first();
    if (kind == "average") return NormKind::average();
    if (kind == "weighted") return NormKind::weighted(j.at("weights").get<std::vector<double>>());
    if (kind == "power") return NormKind::power(j.at("alpha").get<double>());
    throw Error(ErrorKind::InvalidInput, "unknown norm kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed norm kind: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Laplacians

/// Writes <stem>.json ({norm_kind, norm_constant, eigenvalues}) and
/// <stem>.mtx (the matrix).
inline void write_laplacian(const fs::path& stem, const Laplacian& l) {
  fs::path mtx = stem;
  mtx += ".mtx";
  fs::path meta = stem;
  meta += ".json";
  write_matrix_market(mtx, l.matrix());
  json j;
  j["schema_version"] = kSchemaVersion;
  j["norm_kind"] = norm_to_json(l.norm_kind());
  j["norm_constant"] = l.norm_constant();
  j["eigenvalues"] = to_std(l.spectrum().eigenvalues);
  j["matrix"] = mtx.filename().string();
  write_json(meta, j);
}

/// Rebuilds the Laplacian from the stored matrix, re-validating every
/// invariant, and checks the stored constant and spectrum against it.
inline Laplacian read_laplacian(const fs::path& stem, double tol = 1e-8) {
  fs::path meta = stem;
  meta += ".json";
  const json j = read_json(meta);
  require_schema(j, "Laplacian metadata");
  Laplacian l = Laplacian::from_matrix(
      read_matrix_market(meta.parent_path() / j.at("matrix").get<std::string>()),
      norm_from_json(j.at("norm_kind")));
  const double stored = j.at("norm_constant").get<double>();
  require(std::abs(stored - l.norm_constant()) <= tol * std::max(1.0, std::abs(stored)),
          ErrorKind::InvalidInput, "stored normalisation constant does not match the matrix");
  const auto eigs = j.at("eigenvalues").get<std::vector<double>>();
  require(static_cast<Index>(eigs.size()) == l.n(), ErrorKind::InvalidInput,
          "stored spectrum has the wrong length");
  for (Index i = 0; i < l.n(); ++i) {
    require(std::abs(eigs[static_cast<std::size_t>(i)] - l.spectrum().value(i)) <=
                tol * std::max(1.0, std::abs(eigs[static_cast<std::size_t>(i)])),
            ErrorKind::InvalidInput, "stored spectrum does not match the matrix");
  }
  return l;
}

// ---------------------------------------------------------------------------
// Results

inline json result_to_json(const MinimaxResult& r) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["t_star"] = to_std(r.t_star.values());
  j["lambda1"] = r.lambda1;
  j["lower"] = r.lambda1;
  j["upper"] = r.upper;
  j["gap"] = r.gap;
  j["spectral_gap"] = r.spectral_gap;
  j["scores"] = to_std(r.scores);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["degenerate_events"] = r.degenerate_events;
  if (r.last_degenerate_t) {
    j["last_degenerate_t"] = to_std(r.last_degenerate_t->values());
    j["last_degenerate_gap"] = r.last_degenerate_gap;
  }
  j["psi1"] = to_std(r.psi1);
  return j;
}

inline MinimaxResult result_from_json(const json& j) {
  require_schema(j, "result");
  try {
    MinimaxResult r;
    r.t_star = SimplexWeights(to_vector(j.at("t_star").get<std::vector<double>>()));
    r.lambda1 = j.at("lambda1").get<double>();
    r.upper = j.at("upper").get<double>();
    r.gap = j.at("gap").get<double>();
    r.spectral_gap = j.at("spectral_gap").get<double>();
    r.scores = to_vector(j.at("scores").get<std::vector<double>>());
    r.iterations = j.at("iterations").get<int>();
    r.converged = j.at("converged").get<bool>();
    r.degenerate_events = j.value("degenerate_events", 0);
    if (j.contains("last_degenerate_t")) {
      r.last_degenerate_t =
          SimplexWeights(to_vector(j.at("last_degenerate_t").get<std::vector<double>>()));
      r.last_degenerate_gap = j.at("last_degenerate_gap").get<double>();
    }
    r.psi1 = to_vector(j.at("psi1").get<std::vector<double>>());
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, std::string("malformed result: ") + e.what());
  }
}

/// One row per iterate: t_1..t_m, lambda1, gap.
inline void write_trajectory(const fs::path& path, const std::vector<TrajectoryPoint>& trajectory,
                             Index m) {
  std::vector<std::string> header;
  for (Index k = 0; k < m; ++k) header.push_back("t" + std::to_string(k + 1));
  header.push_back("lambda1");
  header.push_back("gap");
  Matrix rows(static_cast<Index>(trajectory.size()), m + 2);
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto r = static_cast<Index>(i);
    rows.row(r).head(m) = trajectory[i].t.transpose();
    rows(r, m) = trajectory[i].lambda1;
    rows(r, m + 1) = trajectory[i].gap;
  }
  write_csv(path, header, rows);
}

// ---------------------------------------------------------------------------
// Datasets

struct DatasetFiles {
  json manifest;
  std::vector<SymMatrix> adjacencies;
  std::vector<double> labels;
};

/// manifest.json, graph_<k>.mtx for every view, labels.csv.
inline void write_dataset(const fs::path& dir, const Dataset& ds) {
  fs::create_directories(dir);
  json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["generator"] = ds.generator;
  manifest["n"] = ds.n;
  manifest["k"] = ds.k;
  manifest["seed"] = ds.seed;
  manifest["m"] = ds.m();
  std::vector<std::string> files;
  for (Index g = 0; g < ds.m(); ++g) {
    const std::string name = "graph_" + std::to_string(g + 1) + ".mtx";
    write_matrix_market(dir / name, ds.graphs[static_cast<std::size_t>(g)].adjacency());
    files.push_back(name);
  }
  manifest["graphs"] = files;
  manifest["label_name"] = ds.label_name;
  manifest["labels"] = ds.labels;
  manifest["labels_csv"] = "labels.csv";
  write_json(dir / "manifest.json", manifest);

  Matrix labels(ds.n, 2);
  for (Index i = 0; i < ds.n; ++i) {
    labels(i, 0) = static_cast<double>(i);
    labels(i, 1) = ds.labels[static_cast<std::size_t>(i)];
  }
  write_csv(dir / "labels.csv", {"vertex", ds.label_name}, labels);
}

inline DatasetFiles read_dataset(const fs::path& dir) {
  DatasetFiles files;
  files.manifest = read_json(dir / "manifest.json");
  require_schema(files.manifest, "dataset manifest");
  try {
    for (const auto& name : files.manifest.at("graphs")) {
      files.adjacencies.push_back(read_matrix_market(dir / name.get<std::string>()));
    }
    files.labels = files.manifest.value("labels", std::vector<double>{});
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, "malformed manifest: " + std::string(e.what()));
  }
  require(!files.adjacencies.empty(), ErrorKind::Io, "manifest lists no graphs");
  return files;
}

}  // namespace commonvar::io
