// commonvar: generate multi-view graph datasets, find the common variable of a
// collection of graphs, certify it, and export diffusion coordinates.
//
// Exit codes: 0 success (certified), 2 optimiser did not certify the gap,
// 3 certified but lambda_1 was degenerate at some iterate, 4 error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commonvar/commonvar.hpp"
#include "commonvar/io.hpp"

namespace fs = std::filesystem;
using commonvar::Error;
using commonvar::ErrorKind;
using commonvar::Index;
using commonvar::Laplacian;
using commonvar::Matrix;
using commonvar::NormKind;
using commonvar::SimplexWeights;
using commonvar::SymMatrix;
using commonvar::Vector;
using nlohmann::json;

namespace {

constexpr int kExitCertified = 0;
constexpr int kExitUncertified = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitError = 4;

struct Settings {
  std::string experiment = "rotations2d";
  Index n = 0;  // 0 picks the experiment's usual size
  Index k = 6;
  std::uint64_t seed = 1;
  std::string data_dir;
  std::vector<std::string> graphs;
  std::string labels_file;
  std::string laplacian = "bistochastic";
  std::string norm = "first";
  std::optional<NormKind> norm_object;  // set by a config file
  std::string weights_file;
  std::vector<std::string> graph_norms;  // "<index>=<norm>", 1-based
  double gap_target = 1e-6;
  int max_iter = 5000;
  double tau = 1.0;
  std::vector<double> taus{1.0, 2.0, 5.0, 10.0};
  Index dim = 2;
  std::string t = "optimal";
  bool distances = false;
  Index count = 3;
  int grid = 20;
  std::string result_file;
  std::string out = "commonvar_out";
};

Index default_size(const std::string& experiment) {
  return experiment == "rotations3d" || experiment == "spiral_torus" ? 500 : 250;
}

// ---------------------------------------------------------------------------
// Configuration

void apply_config(Settings& s, const fs::path& path) {
  const json j = commonvar::io::read_json(path);
  commonvar::io::require_schema(j, "config");
  try {
    s.experiment = j.value("experiment", s.experiment);
    s.n = j.value("n", s.n);
    s.k = j.value("k", s.k);
    s.seed = j.value("seed", s.seed);
    s.data_dir = j.value("data", s.data_dir);
    s.graphs = j.value("graphs", s.graphs);
    s.labels_file = j.value("labels", s.labels_file);
    s.laplacian = j.value("laplacian", s.laplacian);
    if (j.contains("norm_kind")) {
      const auto& nk = j.at("norm_kind");
      if (nk.is_string()) {
        s.norm = nk.get<std::string>();
      } else {
        s.norm_object = commonvar::io::norm_from_json(nk);
      }
    }
    s.weights_file = j.value("weights", s.weights_file);
    if (j.contains("graph_norms")) {
      for (const auto& [key, value] : j.at("graph_norms").items()) {
        s.graph_norms.push_back(key + "=" + value.get<std::string>());
      }
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      s.gap_target = o.value("gap_target", s.gap_target);
      s.max_iter = o.value("max_iter", s.max_iter);
    }
    s.tau = j.value("tau", s.tau);
    s.taus = j.value("taus", s.taus);
    s.dim = j.value("dim", s.dim);
    s.t = j.value("t", s.t);
    s.count = j.value("count", s.count);
    s.grid = j.value("grid", s.grid);
    s.out = j.value("output", s.out);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidInput, path.string() + ": " + e.what());
  }
}

// Config values are applied before flag parsing so that flags win.
std::optional<std::string> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Inputs

struct Inputs {
  std::vector<SymMatrix> adjacency;
  std::vector<double> labels;
  std::string label_name = "label";
};

commonvar::Dataset generate(const Settings& s) {
  const Index n = s.n > 0 ? s.n : default_size(s.experiment);
  if (s.experiment == "rotations2d") return commonvar::gen_rotations_2d(n, s.k, s.seed);
  if (s.experiment == "rotations3d") return commonvar::gen_rotations_3d(n, s.k, s.seed);
  if (s.experiment == "barbell") return commonvar::gen_barbell(n, s.k, s.seed);
  if (s.experiment == "spiral_torus") return commonvar::gen_spiral_torus(n, s.k, s.seed);
  throw Error(ErrorKind::InvalidInput, "unknown experiment '" + s.experiment + "'");
}

Inputs load_inputs(const Settings& s) {
  Inputs in;
  if (!s.graphs.empty()) {
    for (const auto& path : s.graphs) in.adjacency.push_back(commonvar::io::read_matrix_market(fs::path(path)));
    if (!s.labels_file.empty()) {
      const auto values = commonvar::io::read_numbers(s.labels_file);
      // Either one label per line or (vertex, label) pairs.
      const auto n = static_cast<std::size_t>(in.adjacency.front().n());
      if (values.size() == n) {
        in.labels = values;
      } else if (values.size() == 2 * n) {
        for (std::size_t i = 0; i < n; ++i) in.labels.push_back(values[2 * i + 1]);
      } else {
        throw Error(ErrorKind::DimensionMismatch, "labels file does not match the vertex count");
      }
    }
  } else if (!s.data_dir.empty()) {
    auto files = commonvar::io::read_dataset(s.data_dir);
    in.adjacency = std::move(files.adjacencies);
    in.labels = std::move(files.labels);
    in.label_name = files.manifest.value("label_name", in.label_name);
  } else {
    const auto ds = generate(s);
    for (const auto& g : ds.graphs) in.adjacency.push_back(g.adjacency());
    in.labels = ds.labels;
    in.label_name = ds.label_name;
  }
  return in;
}

NormKind parse_norm(const std::string& text, const std::string& weights_file) {
  if (text == "weighted") {
    if (weights_file.empty()) {
      throw Error(ErrorKind::InvalidInput, "--norm weighted needs --weights <file>");
    }
    return NormKind::weighted(commonvar::io::read_numbers(weights_file));
  }
  return NormKind::parse(text);
}

std::vector<NormKind> graph_norms(const Settings& s, Index m) {
  const NormKind base = s.norm_object ? *s.norm_object : parse_norm(s.norm, s.weights_file);
  std::vector<NormKind> norms(static_cast<std::size_t>(m), base);
  for (const auto& spec : s.graph_norms) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidInput, "--graph-norm expects <index>=<norm>, got '" + spec + "'");
    }
    int index = 0;
    try {
      index = std::stoi(spec.substr(0, eq));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "bad graph index in '" + spec + "'");
    }
    if (index < 1 || index > m) {
      throw Error(ErrorKind::IndexOutOfRange, "graph index " + std::to_string(index) + " out of range");
    }
    norms[static_cast<std::size_t>(index - 1)] = parse_norm(spec.substr(eq + 1), s.weights_file);
  }
  return norms;
}

Laplacian build_laplacian(const SymMatrix& a, const std::string& kind, const NormKind& norm) {
  const commonvar::Graph g(a);
  if (kind == "bistochastic") return commonvar::bistochastic_laplacian(g, norm);
  const auto classic = commonvar::classic_laplacians(g);
  if (kind == "standard") return Laplacian::from_matrix(classic.standard, norm);
  if (kind == "normalized") return Laplacian::from_matrix(classic.normalized, norm);
  throw Error(ErrorKind::InvalidInput, "unknown Laplacian '" + kind + "'");
}

std::vector<Laplacian> build_laplacians(const Settings& s, const Inputs& in) {
  const auto norms = graph_norms(s, static_cast<Index>(in.adjacency.size()));
  std::vector<Laplacian> out;
  for (std::size_t k = 0; k < in.adjacency.size(); ++k) {
    try {
      out.push_back(build_laplacian(in.adjacency[k], s.laplacian, norms[k]));
    } catch (const Error& e) {
      throw Error(e.kind(), "graph " + std::to_string(k + 1) + ": " + e.what());
    }
  }
  return out;
}

commonvar::MaximizeOptions optimizer_options(const Settings& s) {
  commonvar::MaximizeOptions opts;
  opts.gap_target = s.gap_target;
  opts.max_iter = s.max_iter;
  return opts;
}

int exit_code(bool certified, int degenerate_events) {
  if (!certified) return kExitUncertified;
  return degenerate_events > 0 ? kExitDegenerate : kExitCertified;
}

void print_certificate(double lower, double upper, double gap, double target) {
  std::cout << "lower " << commonvar::io::format_double(lower) << "\n"
            << "upper " << commonvar::io::format_double(upper) << "\n"
            << "gap " << commonvar::io::format_double(gap) << " (target "
            << commonvar::io::format_double(target) << ")\n";
}

// λ₁ over a line (m = 2) or triangular grid (m = 3) on the simplex.
void write_grid(const fs::path& path, const commonvar::CommonProblem& problem, int resolution) {
  const Index m = problem.m();
  std::vector<std::string> header;
  for (Index k = 0; k < m; ++k) header.push_back("t" + std::to_string(k + 1));
  header.push_back("lambda1");
  std::vector<Vector> points;
  const double step = 1.0 / resolution;
  if (m == 2) {
    for (int i = 0; i <= resolution; ++i) {
      Vector t(2);
      t << i * step, 1.0 - i * step;
      points.push_back(t);
    }
  } else {
    for (int i = 0; i <= resolution; ++i) {
      for (int j = 0; i + j <= resolution; ++j) {
        Vector t(3);
        t << i * step, j * step, static_cast<double>(resolution - i - j) * step;
        points.push_back(t);
      }
    }
  }
  Matrix rows(static_cast<Index>(points.size()), m + 1);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto r = static_cast<Index>(p);
    // Clamp round-off so the point passes simplex validation.
    Vector t = points[p].cwiseMax(0.0);
    t /= t.sum();
    rows.row(r).head(m) = t.transpose();
    rows(r, m) = commonvar::evaluate(problem, SimplexWeights(t)).lambda1;
  }
  commonvar::io::write_csv(path, header, rows);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_generate(const Settings& s) {
  const auto ds = generate(s);
  commonvar::io::write_dataset(s.out, ds);
  std::cout << "wrote " << ds.m() << " graphs on " << ds.n << " vertices to " << s.out << "\n";
  return kExitCertified;
}

int cmd_solve(const Settings& s) {
  const Inputs in = load_inputs(s);
  const auto ls = build_laplacians(s, in);
  const commonvar::CommonProblem problem(ls);
  const auto r = commonvar::maximize_lambda1(problem, optimizer_options(s));
  const fs::path out(s.out);
  commonvar::io::write_json(out / "result.json", commonvar::io::result_to_json(r));
  commonvar::io::write_trajectory(out / "trajectory.csv", r.trajectory, problem.m());

  Matrix psi(problem.n(), in.labels.empty() ? 2 : 3);
  for (Index i = 0; i < problem.n(); ++i) {
    psi(i, 0) = static_cast<double>(i);
    if (!in.labels.empty()) psi(i, 1) = in.labels[static_cast<std::size_t>(i)];
    psi(i, psi.cols() - 1) = r.psi1(i);
  }
  std::vector<std::string> header{"vertex"};
  if (!in.labels.empty()) header.push_back(in.label_name);
  header.push_back("psi1");
  commonvar::io::write_csv(out / "psi1_vs_label.csv", header, psi);

  if (s.grid > 0 && (problem.m() == 2 || problem.m() == 3)) {
    write_grid(out / "lambda1_grid.csv", problem, s.grid);
  }

  std::cout << "t* " << r.t_star.values().transpose() << "\n";
  print_certificate(r.lambda1, r.upper, r.gap, s.gap_target);
  std::cout << "iterations " << r.iterations << (r.converged ? ", certified" : ", not certified")
            << "\n";
  if (r.degenerate_events > 0) {
    std::cerr << "warning: lambda_1 was degenerate at " << r.degenerate_events
              << " iterate(s); last spectral gap " << r.last_degenerate_gap << "\n";
  }
  return exit_code(r.converged, r.degenerate_events);
}

int cmd_basis(const Settings& s) {
  const Inputs in = load_inputs(s);
  const auto ls = build_laplacians(s, in);
  const auto basis = commonvar::common_basis(ls, s.count, optimizer_options(s));
  const fs::path out(s.out);

  json j;
  j["schema_version"] = commonvar::io::kSchemaVersion;
  j["count"] = basis.size();
  bool certified = true;
  int degenerate = 0;
  for (std::size_t level = 0; level < basis.levels.size(); ++level) {
    const auto& r = basis.levels[level];
    json entry = commonvar::io::result_to_json(r);
    entry["level"] = level + 1;
    j["levels"].push_back(entry);
    certified = certified && r.converged;
    degenerate += r.degenerate_events;
    std::cout << "level " << level + 1 << " lambda1 " << commonvar::io::format_double(r.lambda1)
              << " gap " << commonvar::io::format_double(r.gap) << "\n";
  }
  commonvar::io::write_json(out / "basis.json", j);

  std::vector<std::string> header{"vertex"};
  for (Index c = 0; c < basis.size(); ++c) header.push_back("psi" + std::to_string(c + 1));
  Matrix rows(basis.vectors.rows(), basis.size() + 1);
  rows.col(0) = Vector::LinSpaced(rows.rows(), 0.0, static_cast<double>(rows.rows() - 1));
  rows.rightCols(basis.size()) = basis.vectors;
  commonvar::io::write_csv(out / "embedding.csv", header, rows);
  return exit_code(certified, degenerate);
}

SimplexWeights parse_weights(const std::string& text, Index m) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidInput, "bad weight '" + item + "'");
    }
  }
  if (static_cast<Index>(values.size()) != m) {
    throw Error(ErrorKind::DimensionMismatch, "expected " + std::to_string(m) + " weights");
  }
  return SimplexWeights(commonvar::io::to_vector(values));
}

int cmd_diffuse(const Settings& s) {
  const Inputs in = load_inputs(s);
  const auto ls = build_laplacians(s, in);
  const commonvar::CommonProblem problem(ls);
  int code = kExitCertified;
  SimplexWeights t;
  if (s.t == "optimal") {
    const auto r = commonvar::maximize_lambda1(problem, optimizer_options(s));
    t = r.t_star;
    code = exit_code(r.converged, r.degenerate_events);
  } else {
    t = parse_weights(s.t, problem.m());
  }
  const auto h = commonvar::diffusion_operator(problem, t, s.tau);
  const Matrix map = commonvar::diffusion_map(h, s.dim);
  const fs::path out(s.out);

  std::vector<std::string> header;
  for (Index c = 0; c < s.dim; ++c) header.push_back("x" + std::to_string(c + 1));
  commonvar::io::write_csv(out / "diffusion_map.csv", header, map);
  json meta;
  meta["schema_version"] = commonvar::io::kSchemaVersion;
  meta["tau"] = s.tau;
  meta["t"] = commonvar::io::to_std(t.values());
  meta["mu"] = commonvar::io::to_std(h.mu.head(s.dim + 1));
  commonvar::io::write_json(out / "diffusion_map.json", meta);
  if (s.distances) {
    std::vector<std::string> cols;
    for (Index i = 0; i < h.n(); ++i) cols.push_back("v" + std::to_string(i));
    commonvar::io::write_csv(out / "distances.csv", cols, commonvar::diffusion_distances(h));
  }
  std::cout << "t " << t.values().transpose() << "\nmu1 " << commonvar::io::format_double(h.mu(1))
            << "\n";
  return code;
}

int cmd_score(const Settings& s) {
  const Inputs in = load_inputs(s);
  const auto ls = build_laplacians(s, in);
  Matrix rows(static_cast<Index>(s.taus.size()), 2);
  for (std::size_t i = 0; i < s.taus.size(); ++i) {
    const auto r = static_cast<Index>(i);
    rows(r, 0) = s.taus[i];
    rows(r, 1) = commonvar::sum_of_diffusions_score(ls, s.taus[i]);
    std::cout << "tau " << s.taus[i] << " score " << commonvar::io::format_double(rows(r, 1)) << "\n";
  }
  commonvar::io::write_csv(fs::path(s.out) / "scores.csv", {"tau", "score"}, rows);
  return kExitCertified;
}

int cmd_certify(const Settings& s) {
  if (s.result_file.empty()) throw Error(ErrorKind::InvalidInput, "certify needs --result <file>");
  const auto stored = commonvar::io::result_from_json(commonvar::io::read_json(s.result_file));
  const Inputs in = load_inputs(s);
  const auto ls = build_laplacians(s, in);
  const auto c = commonvar::duality_gap(ls, stored.t_star, stored.psi1);
  const bool certified = c.gap <= s.gap_target;
  json j;
  j["schema_version"] = commonvar::io::kSchemaVersion;
  j["lower"] = c.lower;
  j["upper"] = c.upper;
  j["gap"] = c.gap;
  j["stored_gap"] = stored.gap;
  j["gap_target"] = s.gap_target;
  j["certified"] = certified;
  commonvar::io::write_json(fs::path(s.out) / "certificate.json", j);
  print_certificate(c.lower, c.upper, c.gap, s.gap_target);
  return certified ? kExitCertified : kExitUncertified;
}

// ---------------------------------------------------------------------------

void add_input_options(CLI::App* cmd, Settings& s) {
  cmd->add_option("--experiment", s.experiment, "rotations2d|rotations3d|barbell|spiral_torus")
      ->check(CLI::IsMember({"rotations2d", "rotations3d", "barbell", "spiral_torus"}));
  cmd->add_option("--n", s.n, "number of points (default 250, or 500 for 3D and spiral)");
  cmd->add_option("--k", s.k, "neighbours per vertex");
  cmd->add_option("--seed", s.seed, "random seed");
  cmd->add_option("--data", s.data_dir, "dataset directory written by 'generate'");
  cmd->add_option("--graphs", s.graphs, "Matrix Market adjacency files (custom input)");
  cmd->add_option("--labels", s.labels_file, "vertex labels for custom input");
  cmd->add_option("--laplacian", s.laplacian, "bistochastic|standard|normalized")
      ->check(CLI::IsMember({"bistochastic", "standard", "normalized"}));
  cmd->add_option("--norm", s.norm, "first|average|weighted|power:<alpha>");
  cmd->add_option("--weights", s.weights_file, "eigenvalue weights for --norm weighted");
  cmd->add_option("--graph-norm", s.graph_norms, "per-graph override <index>=<norm>, 1-based");
}

void add_optimizer_options(CLI::App* cmd, Settings& s) {
  cmd->add_option("--gap-target", s.gap_target, "certified duality gap to reach");
  cmd->add_option("--max-iter", s.max_iter, "iteration cap");
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  if (const char* env = std::getenv("COMMONVAR_OUT"); env && *env) s.out = env;

  CLI::App app{"Common variables of multiple graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config;
  app.add_option("--config", config, "JSON config; flags override its values");
  app.add_option("--out", s.out, "output directory (default $COMMONVAR_OUT or ./commonvar_out)");

  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset");
  add_input_options(generate_cmd, s);

  auto* solve_cmd = app.add_subcommand("solve", "maximise lambda_1 over the simplex");
  add_input_options(solve_cmd, s);
  add_optimizer_options(solve_cmd, s);
  solve_cmd->add_option("--grid", s.grid, "lambda_1 grid resolution for m = 2 or 3 (0 disables)");

  auto* basis_cmd = app.add_subcommand("basis", "common basis by deflation");
  add_input_options(basis_cmd, s);
  add_optimizer_options(basis_cmd, s);
  basis_cmd->add_option("--count", s.count, "number of basis vectors");

  auto* diffuse_cmd = app.add_subcommand("diffuse", "diffusion map of the combined operator");
  add_input_options(diffuse_cmd, s);
  add_optimizer_options(diffuse_cmd, s);
  diffuse_cmd->add_option("--t", s.t, "'optimal' or comma separated weights");
  diffuse_cmd->add_option("--tau", s.tau, "diffusion time");
  diffuse_cmd->add_option("--dim", s.dim, "embedding dimension");
  diffuse_cmd->add_flag("--distances", s.distances, "also write the full distance matrix");

  auto* score_cmd = app.add_subcommand("score", "sum-of-diffusions score over tau values");
  add_input_options(score_cmd, s);
  score_cmd->add_option("--tau", s.taus, "diffusion times");

  auto* certify_cmd = app.add_subcommand("certify", "recheck a stored result");
  add_input_options(certify_cmd, s);
  certify_cmd->add_option("--result", s.result_file, "result.json to check");
  certify_cmd->add_option("--gap-target", s.gap_target, "gap accepted as certified");

  try {
    if (const auto path = find_config(argc, argv)) apply_config(s, *path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (generate_cmd->parsed()) return cmd_generate(s);
    if (solve_cmd->parsed()) return cmd_solve(s);
    if (basis_cmd->parsed()) return cmd_basis(s);
    if (diffuse_cmd->parsed()) return cmd_diffuse(s);
    if (score_cmd->parsed()) return cmd_score(s);
    if (certify_cmd->parsed()) return cmd_certify(s);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
