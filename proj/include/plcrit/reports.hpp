#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plcrit/common.hpp"
#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/minmax.hpp"
#include "plcrit/thresholds.hpp"

// Report serialization. Every double is rendered with 17 significant digits
// so serialized numbers round-trip exactly and reruns diff clean; generic
// JSON writers emit shortest-round-trip forms instead, which is why the
// emitters here are hand-rolled per document shape.

namespace plcrit {

namespace detail {

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

inline std::string json_str(const std::string& s) { return "\"" + json_escape(s) + "\""; }

inline const char* json_bool(bool b) { return b ? "true" : "false"; }

inline void json_number_array(std::ostream& out, const std::vector<double>& xs) {
  out << "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? ", " : "") << format17(xs[i]);
  out << "]";
}

}  // namespace detail

/// Eigen sequence summary; coefficient vectors live in separate function
/// files referenced by name (one per pair, empty when not saved).
inline void write_eigen_json(const EigenSequence& seq,
                             const std::vector<std::string>& function_refs, std::ostream& out) {
  if (!function_refs.empty() && function_refs.size() != seq.pairs.size())
    throw std::invalid_argument("write_eigen_json: one function reference per pair required");
  out << "{\n";
  out << "  \"mesh\": " << detail::json_str(to_hex(seq.mesh_id)) << ",\n";
  out << "  \"p\": " << format17(seq.p) << ",\n";
  out << "  \"method\": " << detail::json_str(seq.method) << ",\n";
  out << "  \"pairs\": [\n";
  for (std::size_t i = 0; i < seq.pairs.size(); ++i) {
    const std::string ref = function_refs.empty() ? std::string() : function_refs[i];
    out << "    {\"value\": " << format17(seq.pairs[i].value)
        << ", \"residual\": " << format17(seq.pairs[i].residual)
        << ", \"function\": " << detail::json_str(ref) << "}"
        << (i + 1 < seq.pairs.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
}

inline void write_threshold_csv(const std::vector<ThresholdResult>& rows,
                                const std::string& eigen_method, std::ostream& out) {
  out << "m,lambda_m,tau_star,sup_value,threshold,all_lambda_admissible,eigen_method\n";
  for (const auto& r : rows)
    out << r.m << "," << format17(r.lambda_m) << "," << format17(r.tau_star) << ","
        << format17(r.sup_value) << "," << format17(r.threshold) << ","
        << (r.all_lambda_admissible ? 1 : 0) << "," << eigen_method << "\n";
}

inline void write_threshold_json(const std::vector<ThresholdResult>& rows,
                                 const std::string& eigen_method, std::ostream& out) {
  out << "{\n";
  out << "  \"eigen_method\": " << detail::json_str(eigen_method) << ",\n";
  out << "  \"rows\": [\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out << "    {\"m\": " << r.m << ", \"lambda_m\": " << format17(r.lambda_m)
        << ", \"tau_star\": " << format17(r.tau_star)
        << ", \"sup_value\": " << format17(r.sup_value)
        << ", \"threshold\": " << format17(r.threshold)
        << ", \"all_lambda_admissible\": " << detail::json_bool(r.all_lambda_admissible) << "}"
        << (i + 1 < rows.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
}

/// Flat scan table: one row per (lambda, m), with the lambda's accepted-pair
/// count repeated on each of its m rows.
inline void write_scan_csv(const LambdaScanReport& report, std::ostream& out) {
  out << "lambda,m,predicted_threshold,count\n";
  for (std::size_t i = 0; i < report.lambdas.size(); ++i)
    for (const auto& pred : report.predicted)
      out << format17(report.lambdas[i]) << "," << pred.m << "," << format17(pred.threshold)
          << "," << report.counts[i] << "\n";
}

inline void write_scan_json(const LambdaScanReport& report,
                            const std::vector<std::vector<std::string>>& function_refs,
                            std::ostream& out) {
  if (!function_refs.empty() && function_refs.size() != report.solutions.size())
    throw std::invalid_argument("write_scan_json: one reference list per lambda required");
  out << "{\n";
  out << "  \"eigen_method\": " << detail::json_str(report.eigen_method) << ",\n";
  out << "  \"predicted\": [\n";
  for (std::size_t j = 0; j < report.predicted.size(); ++j) {
    const auto& r = report.predicted[j];
    out << "    {\"m\": " << r.m << ", \"lambda_m\": " << format17(r.lambda_m)
        << ", \"tau_star\": " << format17(r.tau_star)
        << ", \"sup_value\": " << format17(r.sup_value)
        << ", \"threshold\": " << format17(r.threshold)
        << ", \"all_lambda_admissible\": " << detail::json_bool(r.all_lambda_admissible) << "}"
        << (j + 1 < report.predicted.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"lambdas\": ";
  detail::json_number_array(out, report.lambdas);
  out << ",\n";
  out << "  \"counts\": [";
  for (std::size_t i = 0; i < report.counts.size(); ++i)
    out << (i ? ", " : "") << report.counts[i];
  out << "],\n";
  out << "  \"solutions\": [\n";
  for (std::size_t i = 0; i < report.solutions.size(); ++i) {
    out << "    [\n";
    for (std::size_t j = 0; j < report.solutions[i].size(); ++j) {
      const CriticalPoint& pt = report.solutions[i][j];
      const std::string ref =
          function_refs.empty() ? std::string() : function_refs[i][j];
      out << "      {\"energy\": " << format17(pt.energy)
          << ", \"grad_dual_norm\": " << format17(pt.grad_dual_norm)
          << ", \"found_at_lambda\": " << format17(pt.found_at_lambda)
          << ", \"pair_tag\": " << detail::json_str(to_hex(pt.pair_tag))
          << ", \"function\": " << detail::json_str(ref) << "}"
          << (j + 1 < report.solutions[i].size() ? "," : "") << "\n";
    }
    out << "    ]" << (i + 1 < report.solutions.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
}

inline void write_solve_json(const MountainPassResult& result, const PsDiagnostic& ps,
                             const std::string& function_ref, std::ostream& out) {
  out << "{\n";
  out << "  \"converged\": " << detail::json_bool(result.converged) << ",\n";
  out << "  \"iterations\": " << result.iterations << ",\n";
  out << "  \"diagnostic\": " << detail::json_str(result.diagnostic) << ",\n";
  out << "  \"energy\": " << format17(result.point.energy) << ",\n";
  out << "  \"grad_dual_norm\": " << format17(result.point.grad_dual_norm) << ",\n";
  out << "  \"found_at_lambda\": " << format17(result.point.found_at_lambda) << ",\n";
  out << "  \"pair_tag\": " << detail::json_str(to_hex(result.point.pair_tag)) << ",\n";
  out << "  \"function\": " << detail::json_str(function_ref) << ",\n";
  out << "  \"ps\": {\"sequence\": " << detail::json_bool(ps.ps_sequence)
      << ", \"level\": " << format17(ps.level) << ", \"ceiling\": " << format17(ps.ceiling)
      << ", \"concentration\": " << detail::json_bool(ps.concentration)
      << ", \"summary\": " << detail::json_str(ps.summary) << "},\n";
  out << "  \"trace\": {\"energies\": ";
  detail::json_number_array(out, result.trace.energies);
  out << ", \"grad_norms\": ";
  detail::json_number_array(out, result.trace.grad_norms);
  out << "}\n";
  out << "}\n";
}

/// Combined audit document: origin positivity probes, path geometry, and the
/// worst observed norm-inequality slacks over a random battery.
inline void write_energy_audit_json(const OriginAuditReport& origin,
                                    const GeometryAuditReport& geometry,
                                    const HolderAudit& worst_slacks, int holder_samples,
                                    std::ostream& out) {
  out << "{\n";
  out << "  \"origin\": {\"all_positive\": " << detail::json_bool(origin.all_positive)
      << ", \"probes\": [\n";
  for (std::size_t i = 0; i < origin.probes.size(); ++i) {
    const auto& pr = origin.probes[i];
    out << "    {\"radius\": " << format17(pr.radius)
        << ", \"min_energy\": " << format17(pr.min_energy)
        << ", \"positive\": " << detail::json_bool(pr.positive) << "}"
        << (i + 1 < origin.probes.size() ? "," : "") << "\n";
  }
  out << "  ]},\n";
  out << "  \"geometry\": {\n";
  out << "    \"m\": " << geometry.m << ",\n";
  out << "    \"lambda_m\": " << format17(geometry.lambda_m) << ",\n";
  out << "    \"rayleigh_max\": " << format17(geometry.rayleigh_max) << ",\n";
  out << "    \"radius\": " << format17(geometry.radius) << ",\n";
  out << "    \"sup_endpoint\": " << format17(geometry.sup_endpoint) << ",\n";
  out << "    \"sup_path\": " << format17(geometry.sup_path) << ",\n";
  out << "    \"ceiling\": " << format17(geometry.ceiling) << ",\n";
  out << "    \"endpoint_nonpositive\": " << detail::json_bool(geometry.endpoint_nonpositive)
      << ",\n";
  out << "    \"path_below_ceiling\": " << detail::json_bool(geometry.path_below_ceiling)
      << ",\n";
  out << "    \"envelope_min_slack\": " << format17(geometry.envelope_min_slack) << ",\n";
  out << "    \"tau_grid\": ";
  detail::json_number_array(out, geometry.tau_grid);
  out << ",\n";
  out << "    \"sup_measured\": ";
  detail::json_number_array(out, geometry.sup_measured);
  out << ",\n";
  out << "    \"envelope_bound\": ";
  detail::json_number_array(out, geometry.envelope_bound);
  out << "\n  },\n";
  out << "  \"holder\": {\"samples\": " << holder_samples
      << ", \"min_slack_grad_bound\": " << format17(worst_slacks.slack_grad_bound)
      << ", \"min_slack_sub_bound\": " << format17(worst_slacks.slack_sub_bound)
      << ", \"min_slack_crit_bound\": " << format17(worst_slacks.slack_crit_bound) << "}\n";
  out << "}\n";
}

/// Provenance record written next to every command's outputs. A rerun from
/// the same configuration and seed in sequential mode reproduces every output
/// byte-for-byte; only duration differs.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;   ///< resolved key -> value
  std::vector<std::pair<std::string, std::string>> inputs;   ///< input file -> checksum
  std::uint64_t seed = 0;
  std::string version = kVersion;
  double duration_seconds = 0.0;
  std::vector<std::string> outputs;
};

inline void write_manifest(const RunManifest& manifest, std::ostream& out) {
  out << "{\n";
  out << "  \"command\": " << detail::json_str(manifest.command) << ",\n";
  out << "  \"config\": {";
  for (std::size_t i = 0; i < manifest.config.size(); ++i)
    out << (i ? ", " : "") << detail::json_str(manifest.config[i].first) << ": "
        << detail::json_str(manifest.config[i].second);
  out << "},\n";
  out << "  \"inputs\": {";
  for (std::size_t i = 0; i < manifest.inputs.size(); ++i)
    out << (i ? ", " : "") << detail::json_str(manifest.inputs[i].first) << ": "
        << detail::json_str(manifest.inputs[i].second);
  out << "},\n";
  out << "  \"seed\": " << manifest.seed << ",\n";
  out << "  \"version\": " << detail::json_str(manifest.version) << ",\n";
  out << "  \"duration_seconds\": " << format17(manifest.duration_seconds) << ",\n";
  out << "  \"outputs\": [";
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i)
    out << (i ? ", " : "") << detail::json_str(manifest.outputs[i]);
  out << "]\n";
  out << "}\n";
}

}  // namespace plcrit
