#pragma once

#include "modalcur/modal_model.hpp"

#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace modalcur {

// Structured mesh of 4-node rectangular thin-plate bending elements. Each
// node carries (w, dw/dx, dw/dy); w is the sensed transverse displacement.
struct PlateMesh {
  std::vector<NodeCoord> nodes;
  std::vector<std::array<int, 4>> elements;  // counter-clockwise from (x0, y0)
  double dx = 0.0;
  double dy = 0.0;
  std::vector<bool> clamped;  // node has all DOFs fixed
};

PlateMesh build_plate_mesh(const PlateGeometry& geometry, double element_size);

// Returns a mesh whose node i is `mesh.nodes[order[i]]`.
PlateMesh renumber_nodes(const PlateMesh& mesh, const std::vector<int>& order);

// Element matrices in (w, w_x, w_y) x 4 ordering.
struct PlateElementMatrices {
  Eigen::Matrix<double, 12, 12> stiffness;
  Eigen::Matrix<double, 12, 12> mass;
};
PlateElementMatrices plate_element_matrices(double dx, double dy, double thickness, const MaterialSpec& material);

struct PlateSystem {
  Eigen::SparseMatrix<double> stiffness;  // free DOFs only
  Eigen::SparseMatrix<double> mass;
  std::vector<int> free_dof_of;  // 3 * n_nodes entries, -1 when fixed
};

PlateSystem assemble_plate_system(const PlateMesh& mesh, double thickness, const MaterialSpec& material);

struct EigenSolution {
  Eigen::VectorXd eigenvalues;   // omega^2, ascending
  Eigen::MatrixXd eigenvectors;  // free-DOF space, M-orthonormal
};

inline constexpr int kDenseEigenDofLimit = 3000;

// Lowest n_modes eigenpairs of K v = lambda M v. Dense solve up to
// kDenseEigenDofLimit DOFs, subspace iteration with a sparse factorisation
// of K beyond that. Throws std::runtime_error on non-convergence.
EigenSolution solve_lowest_modes(const PlateSystem& system, int n_modes, double tolerance = 1e-10);

ModalModel assemble_plate_model(const PlateGeometry& geometry, const MaterialSpec& material,
                                double element_size, int n_modes);

}  // namespace modalcur
