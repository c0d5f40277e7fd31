#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "plcrit/common.hpp"

namespace plcrit {

/// Conforming simplicial mesh of a box in R^N. Cells are stored with
/// positive orientation; boundary vertices are those incident to a face
/// shared by exactly one cell. Interior vertices carry the zero-trace
/// degrees of freedom.
struct SimplicialMesh {
  int dimension = 0;
  std::vector<double> vertices;     // vertex_count x dimension, row-major
  std::vector<int> cells;           // cell_count x (dimension + 1)
  std::vector<char> boundary;       // per-vertex flag
  std::vector<int> dof_of_vertex;   // -1 for boundary vertices
  std::vector<int> vertex_of_dof;

  int vertex_count() const { return static_cast<int>(vertices.size()) / dimension; }
  int cell_count() const { return static_cast<int>(cells.size()) / (dimension + 1); }
  int interior_count() const { return static_cast<int>(vertex_of_dof.size()); }
  const double* vertex(int v) const { return vertices.data() + v * dimension; }
  const int* cell(int c) const { return cells.data() + c * (dimension + 1); }
};

struct ConformityReport {
  bool conforming = false;
  int interior_faces = 0;
  int boundary_faces = 0;
};

namespace detail {

inline double signed_cell_volume(const SimplicialMesh& mesh, int c) {
  const int N = mesh.dimension;
  const int* cell = mesh.cell(c);
  Eigen::MatrixXd edges(N, N);
  const double* v0 = mesh.vertex(cell[0]);
  for (int j = 1; j <= N; ++j) {
    const double* vj = mesh.vertex(cell[j]);
    for (int k = 0; k < N; ++k) edges(k, j - 1) = vj[k] - v0[k];
  }
  double factorial = 1.0;
  for (int k = 2; k <= N; ++k) factorial *= k;
  return edges.determinant() / factorial;
}

/// Orient cells positively, audit face sharing, flag boundary vertices, and
/// number the interior degrees of freedom. Rejects degenerate or
/// non-conforming input.
inline void finalize_mesh(SimplicialMesh& mesh) {
  const int N = mesh.dimension;
  if (N < 2 || N > 4) throw std::invalid_argument("mesh: supported dimensions are 2, 3, 4");
  if (mesh.vertices.empty() || mesh.cells.empty())
    throw std::invalid_argument("mesh: empty vertex or cell list");
  if (static_cast<int>(mesh.vertices.size()) % N != 0 ||
      static_cast<int>(mesh.cells.size()) % (N + 1) != 0)
    throw std::invalid_argument("mesh: malformed vertex or cell array");
  const int nv = mesh.vertex_count();
  for (int idx : mesh.cells)
    if (idx < 0 || idx >= nv) throw std::invalid_argument("mesh: cell index out of range");

  for (int c = 0; c < mesh.cell_count(); ++c) {
    const double vol = signed_cell_volume(mesh, c);
    if (vol == 0.0) throw std::invalid_argument("mesh: degenerate cell");
    if (vol < 0.0) std::swap(mesh.cells[c * (N + 1) + N - 1], mesh.cells[c * (N + 1) + N]);
  }

  // Face incidence: a face key is the sorted vertex tuple of an (N-1)-face.
  std::map<std::array<int, 4>, int> face_count;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const int* cell = mesh.cell(c);
    for (int skip = 0; skip <= N; ++skip) {
      std::array<int, 4> key{-1, -1, -1, -1};
      int k = 0;
      for (int j = 0; j <= N; ++j)
        if (j != skip) key[k++] = cell[j];
      std::sort(key.begin(), key.begin() + N);
      if (++face_count[key] > 2) throw std::invalid_argument("mesh: face shared by > 2 cells");
    }
  }
  mesh.boundary.assign(nv, 0);
  for (const auto& [key, count] : face_count)
    if (count == 1)
      for (int j = 0; j < N; ++j) mesh.boundary[key[j]] = 1;

  mesh.dof_of_vertex.assign(nv, -1);
  mesh.vertex_of_dof.clear();
  for (int v = 0; v < nv; ++v)
    if (!mesh.boundary[v]) {
      mesh.dof_of_vertex[v] = static_cast<int>(mesh.vertex_of_dof.size());
      mesh.vertex_of_dof.push_back(v);
    }
}

}  // namespace detail

/// Kuhn triangulation of an axis-aligned box: each grid sub-cube splits into
/// N! simplices along its vertex-ordering chains, which match across shared
/// cube faces. Deterministic vertex and cell ordering.
inline SimplicialMesh build_box_mesh(int dimension, const std::vector<int>& divisions,
                                     const std::vector<double>& lengths) {
  const int N = dimension;
  if (N < 2 || N > 4)
    throw std::invalid_argument("build_box_mesh: supported dimensions are 2, 3, 4");
  if (static_cast<int>(divisions.size()) != N || static_cast<int>(lengths.size()) != N)
    throw std::invalid_argument("build_box_mesh: need one division count and length per axis");
  for (int d : divisions)
    if (d < 1) throw std::invalid_argument("build_box_mesh: divisions must be >= 1");
  for (double len : lengths)
    if (!(len > 0.0)) throw std::invalid_argument("build_box_mesh: lengths must be positive");

  SimplicialMesh mesh;
  mesh.dimension = N;

  std::vector<int> stride(N, 1);
  for (int k = 1; k < N; ++k) stride[k] = stride[k - 1] * (divisions[k - 1] + 1);
  int nv = 1;
  for (int k = 0; k < N; ++k) nv *= divisions[k] + 1;

  mesh.vertices.resize(static_cast<std::size_t>(nv) * N);
  std::vector<int> idx(N, 0);
  for (int v = 0; v < nv; ++v) {
    for (int k = 0; k < N; ++k)
      mesh.vertices[static_cast<std::size_t>(v) * N + k] =
          lengths[k] * (static_cast<double>(idx[k]) / divisions[k]);
    for (int k = 0; k < N; ++k) {
      if (++idx[k] <= divisions[k]) break;
      idx[k] = 0;
    }
  }

  std::vector<int> axes(N);
  std::iota(axes.begin(), axes.end(), 0);
  std::vector<int> corner(N, 0);
  int ncubes = 1;
  for (int k = 0; k < N; ++k) ncubes *= divisions[k];
  std::vector<int> dir(N);
  for (int cube = 0; cube < ncubes; ++cube) {
    // Mirror the chain along every axis whose sub-cube index is odd. A shared
    // facet fixes one axis, so both neighbours split it by the same diagonal
    // and the triangulation stays conforming while keeping the reflection
    // symmetries of the box (degenerate eigenvalues come out exactly equal).
    int start = std::inner_product(corner.begin(), corner.end(), stride.begin(), 0);
    for (int k = 0; k < N; ++k) {
      const bool flip = (corner[k] & 1) != 0;
      dir[k] = flip ? -stride[k] : stride[k];
      if (flip) start += stride[k];
    }
    std::vector<int> perm = axes;
    do {
      mesh.cells.push_back(start);
      int v = start;
      for (int k = 0; k < N; ++k) {
        v += dir[perm[k]];
        mesh.cells.push_back(v);
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (int k = 0; k < N; ++k) {
      if (++corner[k] < divisions[k]) break;
      corner[k] = 0;
    }
  }

  detail::finalize_mesh(mesh);
  return mesh;
}

inline double cell_volume(const SimplicialMesh& mesh, int c) {
  return detail::signed_cell_volume(mesh, c);
}

inline double volume(const SimplicialMesh& mesh) {
  double total = 0.0;
  for (int c = 0; c < mesh.cell_count(); ++c) total += detail::signed_cell_volume(mesh, c);
  return total;
}

/// Shared-face audit: every (N-1)-face belongs to one cell (boundary) or two
/// (interior), and single-cell faces touch only boundary-flagged vertices.
inline ConformityReport conformity_audit(const SimplicialMesh& mesh) {
  const int N = mesh.dimension;
  ConformityReport report;
  report.conforming = true;
  std::map<std::array<int, 4>, int> face_count;
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const int* cell = mesh.cell(c);
    for (int skip = 0; skip <= N; ++skip) {
      std::array<int, 4> key{-1, -1, -1, -1};
      int k = 0;
      for (int j = 0; j <= N; ++j)
        if (j != skip) key[k++] = cell[j];
      std::sort(key.begin(), key.begin() + N);
      ++face_count[key];
    }
  }
  for (const auto& [key, count] : face_count) {
    if (count == 1) {
      ++report.boundary_faces;
      for (int j = 0; j < N; ++j)
        if (!mesh.boundary[key[j]]) report.conforming = false;
    } else if (count == 2) {
      ++report.interior_faces;
    } else {
      report.conforming = false;
    }
  }
  return report;
}

inline void write_mesh(const SimplicialMesh& mesh, std::ostream& out) {
  out << "DIM " << mesh.dimension << "\n";
  out << "VERTICES " << mesh.vertex_count() << "\n";
  out << "CELLS " << mesh.cell_count() << "\n";
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const double* x = mesh.vertex(v);
    for (int k = 0; k < mesh.dimension; ++k) out << (k ? " " : "") << format17(x[k]);
    out << "\n";
  }
  for (int c = 0; c < mesh.cell_count(); ++c) {
    const int* cell = mesh.cell(c);
    for (int j = 0; j <= mesh.dimension; ++j) out << (j ? " " : "") << cell[j];
    out << "\n";
  }
}

inline SimplicialMesh read_mesh(std::istream& in) {
  std::string tag;
  SimplicialMesh mesh;
  int nv = 0, nc = 0;
  if (!(in >> tag) || tag != "DIM" || !(in >> mesh.dimension))
    throw std::invalid_argument("read_mesh: expected 'DIM <n>' header");
  if (!(in >> tag) || tag != "VERTICES" || !(in >> nv) || nv <= 0)
    throw std::invalid_argument("read_mesh: expected 'VERTICES <k>' header");
  if (!(in >> tag) || tag != "CELLS" || !(in >> nc) || nc <= 0)
    throw std::invalid_argument("read_mesh: expected 'CELLS <c>' header");
  if (mesh.dimension < 2 || mesh.dimension > 4)
    throw std::invalid_argument("read_mesh: supported dimensions are 2, 3, 4");
  mesh.vertices.resize(static_cast<std::size_t>(nv) * mesh.dimension);
  for (double& x : mesh.vertices)
    if (!(in >> x)) throw std::invalid_argument("read_mesh: truncated vertex data");
  mesh.cells.resize(static_cast<std::size_t>(nc) * (mesh.dimension + 1));
  for (int& idx : mesh.cells)
    if (!(in >> idx)) throw std::invalid_argument("read_mesh: truncated cell data");
  detail::finalize_mesh(mesh);
  return mesh;
}

inline std::string mesh_to_string(const SimplicialMesh& mesh) {
  std::ostringstream out;
  write_mesh(mesh, out);
  return out.str();
}

inline std::uint64_t mesh_checksum(const SimplicialMesh& mesh) {
  return fnv1a(mesh_to_string(mesh));
}

}  // namespace plcrit
