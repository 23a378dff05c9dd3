// Align the two-Gaussian synthetic world and print the metrics.

#include <iostream>

#include "perfalign/perfalign.hpp"

int main() {
  using namespace perfalign;

  const SyntheticWorld world = make_paper_gmm_world(/*seed=*/0);
  const Matrix& x1 = world.x_list[0];
  const Matrix& x2 = world.x_list[1];

  const AlignmentSolution sol = solve_alignment(x1, x2, /*k=*/2);
  const Matrix z1 = encode(sol.a1, x1);
  const Matrix z2 = encode(sol.a2, x2);

  std::cout << "left null dim " << sol.left_null_dim << (sol.perfect ? " (perfect)\n" : "\n");
  std::cout << report_text(make_report(z1, z2, sol.residual_frobenius, world.z_true));

  // The true generation matrices recover Z itself.
  const Matrix z_pinv = pseudo_inverse_encode(world.s_list[0], x1);
  std::cout << "MLRE via S1 pseudo-inverse " << mlre(world.z_true, z_pinv) << '\n';
}
