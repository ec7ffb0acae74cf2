#pragma once

#include <string>

#include "imstab/problem.hpp"

namespace imstab {

// Assembled discrete operator for div(gamma A grad u) + omega^2 rho u = 0
// with Dirichlet data eliminated into the right-hand side. Rows are scaled
// by 1/(hx*hy) so a Laplacian row reads (-4 center, +1 neighbors)/h^2.
struct LinearSystem {
  int n_unknowns = 0;
  // Deterministic CSR-like triplet storage in assembly order.
  std::vector<int> row, col;
  std::vector<Complex> val;
  std::vector<Complex> rhs;
  std::vector<std::int64_t> node_of_unknown;   // grid node index per row
  std::vector<int> unknown_of_node;            // -1 for non-interior nodes
};

struct SolveReport {
  int iterations = 0;          // 0 for the direct path
  double relative_residual = 0.0;
  double wall_time_s = 0.0;
  std::string solver_id;
  double condition_estimate = 0.0;
};

LinearSystem assemble(const ProblemSpec& spec, std::shared_ptr<const Grid> grid);

// Direct sparse LU for n_cells <= 256, BiCGSTAB/ILU fallback above. Throws
// errc::resonance when the system is numerically singular (Assumption-2
// violation surfaces as conditioning, recorded in the report).
std::pair<GridField, SolveReport> solve_forward(const ProblemSpec& spec,
                                                std::shared_ptr<const Grid> grid);

// L1 norm over the stencil-valid interior of the discrete PDE residual.
double pde_residual(const GridField& u, const ProblemSpec& spec,
                    std::shared_ptr<const Grid> grid);

// Boundary trace of g on the grid's boundary nodes (cut-cell nodes evaluate
// g at the nearest boundary point).
GridField boundary_trace(const ProblemSpec& spec, std::shared_ptr<const Grid> grid);

}  // namespace imstab
