#include <cstdio>
#include <vector>

#include "plcrit/eigensolve.hpp"
#include "plcrit/fem.hpp"
#include "plcrit/mesh.hpp"
#include "plcrit/minmax.hpp"
#include "plcrit/sobolev.hpp"
#include "plcrit/thresholds.hpp"

// Walkthrough on the unit cube, p = 2, r = 4: compute the first eigenvalues,
// tabulate the multiplicity thresholds nu_m, then sweep lambda across them
// and count the solution pairs the deflated mountain-pass search accepts at
// each level. The predicted count (number of thresholds cleared) is a lower
// bound for the accepted count.

int main() {
  using namespace plcrit;

  const SimplicialMesh mesh = build_box_mesh(3, {8, 8, 8}, {1.0, 1.0, 1.0});
  ProblemParams params;
  params.dimension = 3;
  params.p = 2.0;
  params.r = 4.0;
  params.volume = volume(mesh);

  std::printf("unit cube, %d vertices, %d cells, p = 2, r = 4, p* = %g\n", mesh.vertex_count(),
              mesh.cell_count(), params.p_star());
  std::printf("compactness ceiling c* = %.6f\n\n", ps_ceiling(params.dimension, params.p));

  const int m_max = 2;
  const EigenSequence eigs = eigs_linear_p2(mesh, m_max);
  std::vector<double> nu(m_max);
  std::printf("  m   lambda_m      nu_m\n");
  for (int m = 1; m <= m_max; ++m) {
    const ThresholdResult t = threshold_p(m, eigs.pairs[m - 1].value, params);
    nu[m - 1] = t.threshold;
    std::printf("  %d   %9.4f   %9.4f\n", m, t.lambda_m, t.threshold);
  }

  const EnergyModel model(mesh);
  SolverConfig config;
  config.path_nodes = 17;
  config.max_iterations = 1500;
  const std::vector<double> lambdas = {0.5 * nu[0], 1.25 * nu[0], 1.25 * nu[1]};

  std::printf("\n  lambda      predicted >=   accepted   energies\n");
  const LambdaScanReport scan = scan_lambda(model, params, lambdas, config, m_max, eigs);
  for (std::size_t i = 0; i < scan.lambdas.size(); ++i) {
    int predicted = 0;
    for (double threshold : nu)
      if (scan.lambdas[i] > threshold) ++predicted;
    std::printf("  %9.4f   %d              %d         ", scan.lambdas[i], predicted,
                scan.counts[i]);
    for (const CriticalPoint& pt : scan.solutions[i]) std::printf(" %.6f", pt.energy);
    std::printf("\n");
  }
  std::printf("\neach accepted point is one sign pair {u, -u} below the ceiling\n");
  return 0;
}
