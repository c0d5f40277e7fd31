#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/minmax.hpp"
#include "plcrit/reports.hpp"
#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"

// Command-line front end. Every command resolves its configuration (flat
// key=value config file merged with flags, flags winning), runs, and writes
// its outputs plus a RunManifest into a fresh run directory. Exit codes:
// 0 success, 1 usage/configuration error, 2 solver failure.

namespace {

using namespace plcrit;
namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void save_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << content;
}

std::string file_checksum(const fs::path& path) { return to_hex(fnv1a(read_file(path))); }

SimplicialMesh load_mesh(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open mesh file: " + path.string());
  return read_mesh(in);
}

std::string timestamp_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
  return buf;
}

void put(RunManifest& manifest, const std::string& key, const std::string& value) {
  manifest.config.emplace_back(key, value);
}
void put(RunManifest& manifest, const std::string& key, double value) {
  manifest.config.emplace_back(key, format17(value));
}
void put(RunManifest& manifest, const std::string& key, int value) {
  manifest.config.emplace_back(key, std::to_string(value));
}
template <typename T>
void put(RunManifest& manifest, const std::string& key, const std::vector<T>& values) {
  std::string joined;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) joined += ",";
    if constexpr (std::is_same_v<T, double>)
      joined += format17(values[i]);
    else
      joined += std::to_string(values[i]);
  }
  manifest.config.emplace_back(key, joined);
}

/// One directory per run under the output root, named by UTC timestamp plus
/// a short checksum of the resolved configuration.
fs::path make_run_dir(const std::string& out_root, RunManifest& manifest) {
  std::sort(manifest.config.begin(), manifest.config.end());
  std::string key = manifest.command;
  for (const auto& [k, v] : manifest.config) key += "\n" + k + "=" + v;
  const std::string shortsum = to_hex(fnv1a(key)).substr(0, 8);
  const std::string base = manifest.command + "-" + timestamp_utc() + "-" + shortsum;
  fs::path dir = fs::path(out_root) / base;
  for (int k = 2; fs::exists(dir); ++k) dir = fs::path(out_root) / (base + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

void finish_run(const fs::path& dir, RunManifest& manifest,
                std::chrono::steady_clock::time_point started) {
  manifest.duration_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest.outputs.push_back("manifest.json");
  std::ostringstream out;
  write_manifest(manifest, out);
  save_file(dir / "manifest.json", out.str());
  std::printf("run directory: %s\n", dir.string().c_str());
}

struct ModelArgs {
  std::string mesh_file;
  double p = 2.0;
  double r = 0.0;
  double q = 0.0;  // 0 means the single-exponent model
};

void add_model_options(CLI::App* cmd, ModelArgs& args) {
  cmd->add_option("--mesh", args.mesh_file, "mesh file (text format)")->required();
  cmd->add_option("--p", args.p, "primary exponent, 1 < p < N")->capture_default_str();
  cmd->add_option("--r", args.r, "subcritical exponent, p <= r < p*")->required();
  cmd->add_option("--q", args.q, "secondary exponent for the two-power model (omit for none)");
}

ProblemParams make_params(const ModelArgs& args, const SimplicialMesh& mesh) {
  ProblemParams params;
  params.dimension = mesh.dimension;
  params.p = args.p;
  params.r = args.r;
  if (args.q > 0.0) params.q = args.q;
  params.volume = volume(mesh);
  return params;
}

void put_model(RunManifest& manifest, const ModelArgs& args) {
  put(manifest, "mesh", args.mesh_file);
  put(manifest, "p", args.p);
  put(manifest, "r", args.r);
  if (args.q > 0.0) put(manifest, "q", args.q);
}

struct SolverArgs {
  int path_nodes = 64;
  int max_iterations = 2000;
  double grad_tol = 1e-8;
  double deflation_delta = 1e-3;
  std::uint32_t seed = 20240101u;
};

void add_solver_options(CLI::App* cmd, SolverArgs& args) {
  cmd->add_option("--path-nodes", args.path_nodes, "nodes on the discretized path")
      ->capture_default_str();
  cmd->add_option("--max-iterations", args.max_iterations, "iteration budget per pass")
      ->capture_default_str();
  cmd->add_option("--grad-tol", args.grad_tol, "dual-norm tolerance on the gradient")
      ->capture_default_str();
  cmd->add_option("--deflation-delta", args.deflation_delta,
                  "relative distinctness radius between sign orbits")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "random seed")->capture_default_str();
}

SolverConfig make_config(const SolverArgs& args, int threads) {
  SolverConfig config;
  config.path_nodes = args.path_nodes;
  config.max_iterations = args.max_iterations;
  config.grad_tol = args.grad_tol;
  config.deflation_delta = args.deflation_delta;
  config.seed = args.seed;
  config.seed_parallelism = threads;
  return config;
}

void put_solver(RunManifest& manifest, const SolverArgs& args) {
  put(manifest, "path_nodes", args.path_nodes);
  put(manifest, "max_iterations", args.max_iterations);
  put(manifest, "grad_tol", args.grad_tol);
  put(manifest, "deflation_delta", args.deflation_delta);
  put(manifest, "seed", static_cast<int>(args.seed));
}

EigenSequence compute_eigs(const SimplicialMesh& mesh, double p, int m,
                           const std::string& method, double tol, std::uint32_t seed) {
  const std::string chosen =
      method == "auto" ? (p == 2.0 ? std::string("linear") : std::string("continuation"))
                       : method;
  if (chosen == "linear") {
    if (p != 2.0)
      throw std::invalid_argument("method linear requires p = 2; use continuation");
    return eigs_linear_p2(mesh, m, tol, seed);
  }
  if (chosen == "continuation") return eigs_continuation(mesh, p, m, seed);
  throw std::invalid_argument("unknown eigen method: " + chosen);
}

void print_eigs(const EigenSequence& seq) {
  std::vector<double> values;
  for (const auto& pair : seq.pairs) values.push_back(pair.value);
  const EigenGapReport gaps = eigen_gap_report(values);
  std::vector<int> cluster_size(gaps.cluster_count, 0);
  for (int c : gaps.cluster_of) ++cluster_size[c];
  for (std::size_t i = 0; i < seq.pairs.size(); ++i) {
    const int cluster = gaps.cluster_of[i];
    std::printf("m=%zu value=%s residual=%s%s\n", i + 1, format17(seq.pairs[i].value).c_str(),
                format17(seq.pairs[i].residual).c_str(),
                cluster_size[cluster] > 1 ? (" cluster=" + std::to_string(cluster + 1)).c_str()
                                          : "");
  }
}

// ---- commands ----

struct MeshCmd {
  std::vector<int> divisions;
  std::vector<double> lengths;
  std::string output = "mesh.txt";
};

int run_mesh(const MeshCmd& args, const std::string& out_root) {
  const auto started = std::chrono::steady_clock::now();
  std::vector<double> lengths = args.lengths;
  if (lengths.empty()) lengths.assign(args.divisions.size(), 1.0);
  if (lengths.size() != args.divisions.size())
    throw std::invalid_argument("lengths and divisions must have the same dimension");
  const int dim = static_cast<int>(args.divisions.size());

  RunManifest manifest;
  manifest.command = "mesh";
  put(manifest, "divisions", args.divisions);
  put(manifest, "lengths", lengths);
  put(manifest, "output", args.output);
  const fs::path dir = make_run_dir(out_root, manifest);

  const SimplicialMesh mesh = build_box_mesh(dim, args.divisions, lengths);
  save_file(dir / args.output, mesh_to_string(mesh));
  manifest.outputs.push_back(args.output);
  std::printf("vertices=%d cells=%d volume=%s checksum=%s\n", mesh.vertex_count(),
              mesh.cell_count(), format17(volume(mesh)).c_str(),
              to_hex(mesh_checksum(mesh)).c_str());
  finish_run(dir, manifest, started);
  return 0;
}

struct EigsCmd {
  std::string mesh_file;
  double p = 2.0;
  int m = 1;
  std::string method = "auto";
  double tol = 1e-10;
  std::uint32_t seed = 20240101u;
};

int run_eigs(const EigsCmd& args, const std::string& out_root) {
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.command = "eigs";
  put(manifest, "mesh", args.mesh_file);
  put(manifest, "p", args.p);
  put(manifest, "m", args.m);
  put(manifest, "method", args.method);
  put(manifest, "tol", args.tol);
  put(manifest, "seed", static_cast<int>(args.seed));
  manifest.seed = args.seed;
  manifest.inputs.emplace_back(args.mesh_file, file_checksum(args.mesh_file));
  const fs::path dir = make_run_dir(out_root, manifest);

  const SimplicialMesh mesh = load_mesh(args.mesh_file);
  const EigenSequence seq = compute_eigs(mesh, args.p, args.m, args.method, args.tol, args.seed);

  std::vector<std::string> refs;
  for (std::size_t i = 0; i < seq.pairs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "pair-%03zu.func", i + 1);
    std::ostringstream out;
    write_fem_function(seq.pairs[i].function, out);
    save_file(dir / name, out.str());
    refs.push_back(name);
    manifest.outputs.push_back(name);
  }
  std::ostringstream out;
  write_eigen_json(seq, refs, out);
  save_file(dir / "eigs.json", out.str());
  manifest.outputs.push_back("eigs.json");

  print_eigs(seq);
  finish_run(dir, manifest, started);
  return 0;
}

struct ThresholdCmd {
  double p = 2.0;
  double r = 0.0;
  double q = 0.0;
  int dim = 0;
  double volume_direct = 0.0;
  std::string mesh_file;
  std::vector<double> lambda_m;
  std::string eigs_file;
  int m_max = 0;  // 0 means all available lambda_m
  double tol = 1e-12;
};

int run_threshold(const ThresholdCmd& args, const std::string& out_root) {
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.command = "threshold";
  put(manifest, "p", args.p);
  put(manifest, "r", args.r);
  if (args.q > 0.0) put(manifest, "q", args.q);
  put(manifest, "tol", args.tol);

  ProblemParams params;
  params.p = args.p;
  params.r = args.r;
  if (args.q > 0.0) params.q = args.q;
  if (!args.mesh_file.empty()) {
    const SimplicialMesh mesh = load_mesh(args.mesh_file);
    params.dimension = mesh.dimension;
    params.volume = volume(mesh);
    put(manifest, "mesh", args.mesh_file);
    manifest.inputs.emplace_back(args.mesh_file, file_checksum(args.mesh_file));
  } else if (args.volume_direct > 0.0 && args.dim > 0) {
    params.dimension = args.dim;
    params.volume = args.volume_direct;
    put(manifest, "dim", args.dim);
    put(manifest, "volume", args.volume_direct);
  } else {
    throw std::invalid_argument("supply --mesh, or both --dim and --volume");
  }

  std::vector<double> values = args.lambda_m;
  std::string method = "direct";
  if (!args.eigs_file.empty()) {
    if (!values.empty())
      throw std::invalid_argument("supply either --lambda-m or --eigs, not both");
    const nlohmann::json doc = nlohmann::json::parse(read_file(args.eigs_file));
    method = doc.at("method").get<std::string>();
    for (const auto& pair : doc.at("pairs")) values.push_back(pair.at("value").get<double>());
    put(manifest, "eigs", args.eigs_file);
    manifest.inputs.emplace_back(args.eigs_file, file_checksum(args.eigs_file));
  } else if (!values.empty()) {
    put(manifest, "lambda_m", values);
  } else {
    throw std::invalid_argument("supply eigenvalues via --lambda-m or --eigs");
  }
  const int m_max = args.m_max > 0 ? args.m_max : static_cast<int>(values.size());
  if (m_max > static_cast<int>(values.size()))
    throw std::invalid_argument("m range exceeds the supplied eigenvalue list");
  put(manifest, "m_max", m_max);
  const fs::path dir = make_run_dir(out_root, manifest);

  std::vector<ThresholdResult> rows;
  for (int m = 1; m <= m_max; ++m)
    rows.push_back(params.has_q() ? threshold_pq(m, values[m - 1], params, args.tol)
                                  : threshold_p(m, values[m - 1], params, args.tol));

  std::ostringstream json_out, csv_out;
  write_threshold_json(rows, method, json_out);
  write_threshold_csv(rows, method, csv_out);
  save_file(dir / "thresholds.json", json_out.str());
  save_file(dir / "thresholds.csv", csv_out.str());
  manifest.outputs.push_back("thresholds.json");
  manifest.outputs.push_back("thresholds.csv");

  for (const auto& row : rows)
    std::printf("m=%d lambda_m=%s threshold=%s%s\n", row.m, format17(row.lambda_m).c_str(),
                format17(row.threshold).c_str(),
                row.all_lambda_admissible ? " all-lambda-admissible" : "");
  finish_run(dir, manifest, started);
  return 0;
}

struct AuditCmd {
  ModelArgs model;
  double lambda = 0.0;
  int m = 1;
  std::vector<double> radii = {0.1, 0.5, 1.0};
  int holder_samples = 200;
  std::uint32_t seed = 20240101u;
};

int run_energy_audit(const AuditCmd& args, const std::string& out_root, int threads) {
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.command = "energy-audit";
  put_model(manifest, args.model);
  put(manifest, "lambda", args.lambda);
  put(manifest, "m", args.m);
  put(manifest, "radii", args.radii);
  put(manifest, "holder_samples", args.holder_samples);
  put(manifest, "seed", static_cast<int>(args.seed));
  manifest.seed = args.seed;
  manifest.inputs.emplace_back(args.model.mesh_file, file_checksum(args.model.mesh_file));
  const fs::path dir = make_run_dir(out_root, manifest);

  const SimplicialMesh mesh = load_mesh(args.model.mesh_file);
  const EnergyModel model(mesh, threads);
  ProblemParams params = make_params(args.model, mesh);
  params.lambda = args.lambda;
  params.validate();

  const EigenSequence eigs =
      compute_eigs(mesh, args.model.p, args.m, "auto", 1e-10, args.seed);
  const OriginAuditReport origin = origin_audit(model, params, args.radii, args.seed);
  const GeometryAuditReport geometry = geometry_audit(model, params, args.m, eigs, args.seed);

  HolderAudit worst;
  worst.slack_grad_bound = std::numeric_limits<double>::infinity();
  worst.slack_sub_bound = std::numeric_limits<double>::infinity();
  worst.slack_crit_bound = std::numeric_limits<double>::infinity();
  std::mt19937 rng(args.seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  FemFunction u = zero_function(mesh);
  for (int s = 0; s < args.holder_samples; ++s) {
    for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients[i] = coeff(rng);
    const HolderAudit audit = model.holder_audit(u, params);
    worst.slack_grad_bound = std::min(worst.slack_grad_bound, audit.slack_grad_bound);
    worst.slack_sub_bound = std::min(worst.slack_sub_bound, audit.slack_sub_bound);
    worst.slack_crit_bound = std::min(worst.slack_crit_bound, audit.slack_crit_bound);
  }

  std::ostringstream out;
  write_energy_audit_json(origin, geometry, worst, args.holder_samples, out);
  save_file(dir / "energy-audit.json", out.str());
  manifest.outputs.push_back("energy-audit.json");

  std::printf("origin all_positive=%d\n", origin.all_positive ? 1 : 0);
  std::printf("geometry endpoint_nonpositive=%d path_below_ceiling=%d envelope_min_slack=%s\n",
              geometry.endpoint_nonpositive ? 1 : 0, geometry.path_below_ceiling ? 1 : 0,
              format17(geometry.envelope_min_slack).c_str());
  std::printf("holder min slacks: grad=%s sub=%s crit=%s\n",
              format17(worst.slack_grad_bound).c_str(),
              format17(worst.slack_sub_bound).c_str(),
              format17(worst.slack_crit_bound).c_str());
  finish_run(dir, manifest, started);
  return 0;
}

struct SolveCmd {
  ModelArgs model;
  SolverArgs solver;
  double lambda = 0.0;
  int m = 1;
};

int run_solve(const SolveCmd& args, const std::string& out_root, int threads) {
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.command = "solve";
  put_model(manifest, args.model);
  put_solver(manifest, args.solver);
  put(manifest, "lambda", args.lambda);
  put(manifest, "m", args.m);
  manifest.seed = args.solver.seed;
  manifest.inputs.emplace_back(args.model.mesh_file, file_checksum(args.model.mesh_file));
  const fs::path dir = make_run_dir(out_root, manifest);

  const SimplicialMesh mesh = load_mesh(args.model.mesh_file);
  const EnergyModel model(mesh, threads);
  ProblemParams params = make_params(args.model, mesh);
  params.lambda = args.lambda;
  params.validate();
  const SolverConfig config = make_config(args.solver, threads);

  const EigenSequence eigs =
      compute_eigs(mesh, args.model.p, args.m, "auto", 1e-10, args.solver.seed);
  const GeometryAuditReport audit =
      geometry_audit(model, params, args.m, eigs, args.solver.seed);
  FemFunction direction;
  direction.mesh = &mesh;
  direction.coefficients = eigs.pairs[args.m - 1].function.coefficients;
  direction.coefficients /= model.value_norm_w(direction, params.p);
  const FemFunction endpoint =
      detail::valley_endpoint(model, params, direction, audit.radius);
  if (endpoint.coefficients.isZero(0.0))
    throw SolverFailure("seed energy stayed positive under scaling", 0.0, 0);

  const MountainPassResult result = mountain_pass(model, params, config, endpoint);
  const PsDiagnostic ps =
      ps_diagnostic(result.trace, ps_ceiling(params.dimension, params.p));

  std::string ref;
  if (result.converged) {
    ref = "solution.func";
    std::ostringstream fout;
    write_fem_function(result.point.function, fout);
    save_file(dir / ref, fout.str());
    manifest.outputs.push_back(ref);
  }
  std::ostringstream out;
  write_solve_json(result, ps, ref, out);
  save_file(dir / "solve.json", out.str());
  manifest.outputs.push_back("solve.json");

  std::printf("converged=%d iterations=%d energy=%s grad_dual_norm=%s\n",
              result.converged ? 1 : 0, result.iterations,
              format17(result.point.energy).c_str(),
              format17(result.point.grad_dual_norm).c_str());
  std::printf("%s\n", ps.summary.c_str());
  if (!result.converged) std::printf("diagnostic: %s\n", result.diagnostic.c_str());
  finish_run(dir, manifest, started);
  return result.converged ? 0 : 2;
}

struct ScanCmd {
  ModelArgs model;
  SolverArgs solver;
  std::vector<double> lambdas;
  int m_max = 2;
};

int run_scan(const ScanCmd& args, const std::string& out_root, int threads) {
  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.command = "scan";
  put_model(manifest, args.model);
  put_solver(manifest, args.solver);
  put(manifest, "lambdas", args.lambdas);
  put(manifest, "m_max", args.m_max);
  put(manifest, "threads", threads);
  manifest.seed = args.solver.seed;
  manifest.inputs.emplace_back(args.model.mesh_file, file_checksum(args.model.mesh_file));
  const fs::path dir = make_run_dir(out_root, manifest);

  const SimplicialMesh mesh = load_mesh(args.model.mesh_file);
  const EnergyModel model(mesh, threads);
  const ProblemParams base = make_params(args.model, mesh);
  const SolverConfig config = make_config(args.solver, threads);

  const EigenSequence eigs =
      compute_eigs(mesh, args.model.p, args.m_max, "auto", 1e-10, args.solver.seed);
  const LambdaScanReport report =
      scan_lambda(model, base, args.lambdas, config, args.m_max, eigs);

  std::vector<std::vector<std::string>> refs(report.solutions.size());
  for (std::size_t i = 0; i < report.solutions.size(); ++i)
    for (std::size_t j = 0; j < report.solutions[i].size(); ++j) {
      char name[48];
      std::snprintf(name, sizeof(name), "sol-%03zu-%03zu.func", i + 1, j + 1);
      std::ostringstream fout;
      write_fem_function(report.solutions[i][j].function, fout);
      save_file(dir / name, fout.str());
      refs[i].push_back(name);
      manifest.outputs.push_back(name);
    }
  std::ostringstream json_out, csv_out;
  write_scan_json(report, refs, json_out);
  write_scan_csv(report, csv_out);
  save_file(dir / "scan.json", json_out.str());
  save_file(dir / "scan.csv", csv_out.str());
  manifest.outputs.push_back("scan.json");
  manifest.outputs.push_back("scan.csv");

  for (std::size_t i = 0; i < report.lambdas.size(); ++i)
    std::printf("lambda=%s count=%d\n", format17(report.lambdas[i]).c_str(), report.counts[i]);
  finish_run(dir, manifest, started);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiplicity thresholds and mountain-pass searches on meshed boxes"};
  app.set_version_flag("--version", plcrit::kVersion);
  app.set_config("--config", "",
                 "flat key=value configuration file (command options as command.key=value); "
                 "command-line flags win");
  app.require_subcommand(1);
  int threads = 1;
  std::string out_root = "runs";
  app.add_option("--threads", threads, "worker threads; 1 selects the bit-deterministic path")
      ->capture_default_str();
  app.add_option("--out", out_root, "root directory for run outputs")->capture_default_str();

  MeshCmd mesh_args;
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "generate a box mesh file");
  mesh_cmd->add_option("--divisions", mesh_args.divisions, "cells per axis, e.g. 8,8,8")
      ->required()
      ->delimiter(',');
  mesh_cmd->add_option("--lengths", mesh_args.lengths, "box edge lengths (default all 1)")
      ->delimiter(',');
  mesh_cmd->add_option("--output", mesh_args.output, "mesh file name inside the run directory")
      ->capture_default_str();

  EigsCmd eigs_args;
  CLI::App* eigs_cmd = app.add_subcommand("eigs", "compute an eigenvalue sequence");
  eigs_cmd->add_option("--mesh", eigs_args.mesh_file, "mesh file")->required();
  eigs_cmd->add_option("--p", eigs_args.p, "exponent")->capture_default_str();
  eigs_cmd->add_option("--m", eigs_args.m, "number of pairs")->required();
  eigs_cmd
      ->add_option("--method", eigs_args.method,
                   "auto (linear for p = 2, continuation otherwise), linear, continuation")
      ->capture_default_str();
  eigs_cmd->add_option("--tol", eigs_args.tol, "residual tolerance")->capture_default_str();
  eigs_cmd->add_option("--seed", eigs_args.seed, "random seed")->capture_default_str();

  ThresholdCmd thr_args;
  CLI::App* thr_cmd = app.add_subcommand("threshold", "tabulate multiplicity thresholds");
  thr_cmd->add_option("--p", thr_args.p, "primary exponent")->capture_default_str();
  thr_cmd->add_option("--r", thr_args.r, "subcritical exponent")->required();
  thr_cmd->add_option("--q", thr_args.q, "secondary exponent (omit for single-exponent model)");
  thr_cmd->add_option("--dim", thr_args.dim, "spatial dimension (with --volume)");
  thr_cmd->add_option("--volume", thr_args.volume_direct, "domain volume (with --dim)");
  thr_cmd->add_option("--mesh", thr_args.mesh_file, "mesh file supplying dimension and volume");
  thr_cmd->add_option("--lambda-m", thr_args.lambda_m, "eigenvalues, ascending")->delimiter(',');
  thr_cmd->add_option("--eigs", thr_args.eigs_file, "eigenvalue sequence JSON file");
  thr_cmd->add_option("--m-max", thr_args.m_max, "rows for m = 1..m_max (default: all)");
  thr_cmd->add_option("--tol", thr_args.tol, "bracket search tolerance")->capture_default_str();

  AuditCmd audit_args;
  CLI::App* audit_cmd =
      app.add_subcommand("energy-audit", "origin positivity, path geometry, norm inequalities");
  add_model_options(audit_cmd, audit_args.model);
  audit_cmd->add_option("--lambda", audit_args.lambda, "problem parameter")->required();
  audit_cmd->add_option("--m", audit_args.m, "eigen-directions in the path family")
      ->capture_default_str();
  audit_cmd->add_option("--radii", audit_args.radii, "sphere radii for the origin audit")
      ->delimiter(',')
      ->capture_default_str();
  audit_cmd
      ->add_option("--holder-samples", audit_args.holder_samples,
                   "random functions in the inequality battery")
      ->capture_default_str();
  audit_cmd->add_option("--seed", audit_args.seed, "random seed")->capture_default_str();

  SolveCmd solve_args;
  CLI::App* solve_cmd = app.add_subcommand("solve", "single mountain-pass search");
  add_model_options(solve_cmd, solve_args.model);
  solve_cmd->add_option("--lambda", solve_args.lambda, "problem parameter")->required();
  solve_cmd->add_option("--m", solve_args.m, "eigen-direction index of the endpoint seed")
      ->capture_default_str();
  add_solver_options(solve_cmd, solve_args.solver);

  ScanCmd scan_args;
  CLI::App* scan_cmd =
      app.add_subcommand("scan", "sweep a lambda grid, counting accepted solution pairs");
  add_model_options(scan_cmd, scan_args.model);
  scan_cmd->add_option("--lambdas", scan_args.lambdas, "ascending lambda grid, e.g. 50,100,200")
      ->required()
      ->delimiter(',');
  scan_cmd->add_option("--m-max", scan_args.m_max, "thresholds and seeds for m = 1..m_max")
      ->capture_default_str();
  add_solver_options(scan_cmd, scan_args.solver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (mesh_cmd->parsed()) return run_mesh(mesh_args, out_root);
    if (eigs_cmd->parsed()) return run_eigs(eigs_args, out_root);
    if (thr_cmd->parsed()) return run_threshold(thr_args, out_root);
    if (audit_cmd->parsed()) return run_energy_audit(audit_args, out_root, threads);
    if (solve_cmd->parsed()) return run_solve(solve_args, out_root, threads);
    if (scan_cmd->parsed()) return run_scan(scan_args, out_root, threads);
  } catch (const plcrit::SolverFailure& e) {
    std::fprintf(stderr, "solver failure: %s (last residual %s after %d iterations)\n", e.what(),
                 plcrit::format17(e.last_residual).c_str(), e.iterations);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
