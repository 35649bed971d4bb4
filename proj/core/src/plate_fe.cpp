#include "modalcur/plate_fe.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace modalcur {
namespace {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using RowVec12 = Eigen::Matrix<double, 1, 12>;

// Complete cubic plus s^3 t and s t^3 (12 terms), in natural coordinates on [0,1]^2.
RowVec12 basis(double s, double t) {
  RowVec12 p;
  p << 1, s, t, s * s, s * t, t * t, s * s * s, s * s * t, s * t * t, t * t * t, s * s * s * t, s * t * t * t;
  return p;
}
RowVec12 basis_s(double s, double t) {
  RowVec12 p;
  p << 0, 1, 0, 2 * s, t, 0, 3 * s * s, 2 * s * t, t * t, 0, 3 * s * s * t, t * t * t;
  return p;
}
RowVec12 basis_t(double s, double t) {
  RowVec12 p;
  p << 0, 0, 1, 0, s, 2 * t, 0, s * s, 2 * s * t, 3 * t * t, s * s * s, 3 * s * t * t;
  return p;
}
RowVec12 basis_ss(double s, double t) {
  RowVec12 p;
  p << 0, 0, 0, 2, 0, 0, 6 * s, 2 * t, 0, 0, 6 * s * t, 0;
  return p;
}
RowVec12 basis_tt(double s, double t) {
  RowVec12 p;
  p << 0, 0, 0, 0, 0, 2, 0, 0, 2 * s, 6 * t, 0, 6 * s * t;
  return p;
}
RowVec12 basis_st(double s, double t) {
  RowVec12 p;
  p << 0, 0, 0, 0, 1, 0, 0, 2 * s, 2 * t, 0, 3 * s * s, 3 * t * t;
  return p;
}

constexpr std::array<std::array<double, 2>, 4> kCorners = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

// 4-point Gauss-Legendre on [0,1]; exact to degree 7 per direction.
constexpr std::array<double, 4> kGaussPoints = {
    0.5 - 0.5 * 0.8611363115940526, 0.5 - 0.5 * 0.3399810435848563,
    0.5 + 0.5 * 0.3399810435848563, 0.5 + 0.5 * 0.8611363115940526};
constexpr std::array<double, 4> kGaussWeights = {
    0.5 * 0.3478548451374538, 0.5 * 0.6521451548625461,
    0.5 * 0.6521451548625461, 0.5 * 0.3478548451374538};

}  // namespace

PlateElementMatrices plate_element_matrices(double dx, double dy, double thickness, const MaterialSpec& material) {
  Eigen::Matrix<double, 12, 12> nodal;
  for (int n = 0; n < 4; ++n) {
    const double s = kCorners[static_cast<std::size_t>(n)][0];
    const double t = kCorners[static_cast<std::size_t>(n)][1];
    nodal.row(3 * n) = basis(s, t);
    nodal.row(3 * n + 1) = basis_s(s, t) / dx;
    nodal.row(3 * n + 2) = basis_t(s, t) / dy;
  }
  const Eigen::Matrix<double, 12, 12> coeff = nodal.inverse();

  const double e = material.youngs_modulus;
  const double nu = material.poisson_ratio;
  const double flexural = e * thickness * thickness * thickness / (12.0 * (1.0 - nu * nu));
  Eigen::Matrix3d d;
  d << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
  d *= flexural;

  PlateElementMatrices out;
  out.stiffness.setZero();
  out.mass.setZero();
  const double area = dx * dy;
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      const double s = kGaussPoints[a];
      const double t = kGaussPoints[b];
      const double w = kGaussWeights[a] * kGaussWeights[b] * area;
      Eigen::Matrix<double, 3, 12> bmat;
      bmat.row(0) = basis_ss(s, t) * coeff / (dx * dx);
      bmat.row(1) = basis_tt(s, t) * coeff / (dy * dy);
      bmat.row(2) = 2.0 * basis_st(s, t) * coeff / (dx * dy);
      out.stiffness.noalias() += w * bmat.transpose() * d * bmat;
      const RowVec12 n = basis(s, t) * coeff;
      out.mass.noalias() += w * material.density * thickness * n.transpose() * n;
    }
  }
  out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose()).eval();
  out.mass = 0.5 * (out.mass + out.mass.transpose()).eval();
  return out;
}

PlateMesh build_plate_mesh(const PlateGeometry& geometry, double element_size) {
  geometry.validate();
  if (!(element_size > 0.0) || !std::isfinite(element_size))
    throw std::invalid_argument("element_size must be > 0");
  const long nx = std::lround(geometry.length / element_size);
  const long ny = std::lround(geometry.width / element_size);
  if (nx < 2 || ny < 2) throw std::invalid_argument("mesh too coarse: need >= 2 elements in each direction");

  PlateMesh mesh;
  mesh.dx = geometry.length / static_cast<double>(nx);
  mesh.dy = geometry.width / static_cast<double>(ny);
  const int cols = static_cast<int>(nx) + 1;
  const int rows = static_cast<int>(ny) + 1;
  mesh.nodes.reserve(static_cast<std::size_t>(cols * rows));
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i) mesh.nodes.push_back({i * mesh.dx, j * mesh.dy});
  for (int j = 0; j < rows - 1; ++j)
    for (int i = 0; i < cols - 1; ++i) {
      const int n0 = j * cols + i;
      mesh.elements.push_back({n0, n0 + 1, n0 + 1 + cols, n0 + cols});
    }
  mesh.clamped.resize(mesh.nodes.size());
  int free_columns = 0;
  for (int i = 0; i < cols; ++i)
    if (!(i * mesh.dx < geometry.clamp_depth)) ++free_columns;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) mesh.clamped[n] = mesh.nodes[n].x < geometry.clamp_depth;
  if (free_columns < 2) throw std::invalid_argument("mesh too coarse: free span has < 2 elements");
  return mesh;
}

PlateMesh renumber_nodes(const PlateMesh& mesh, const std::vector<int>& order) {
  if (order.size() != mesh.nodes.size()) throw std::invalid_argument("renumbering must be a permutation of all nodes");
  std::vector<int> new_index(order.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int old = order[i];
    if (old < 0 || static_cast<std::size_t>(old) >= order.size() || new_index[static_cast<std::size_t>(old)] != -1)
      throw std::invalid_argument("renumbering must be a permutation of all nodes");
    new_index[static_cast<std::size_t>(old)] = static_cast<int>(i);
  }
  PlateMesh out;
  out.dx = mesh.dx;
  out.dy = mesh.dy;
  out.nodes.resize(order.size());
  out.clamped.resize(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.nodes[i] = mesh.nodes[static_cast<std::size_t>(order[i])];
    out.clamped[i] = mesh.clamped[static_cast<std::size_t>(order[i])];
  }
  for (const auto& e : mesh.elements) {
    std::array<int, 4> ne{};
    for (std::size_t k = 0; k < 4; ++k) ne[k] = new_index[static_cast<std::size_t>(e[k])];
    out.elements.push_back(ne);
  }
  return out;
}

PlateSystem assemble_plate_system(const PlateMesh& mesh, double thickness, const MaterialSpec& material) {
  material.validate();
  if (!(thickness > 0.0)) throw std::invalid_argument("invalid geometry: thickness must be > 0");
  const auto elem = plate_element_matrices(mesh.dx, mesh.dy, thickness, material);

  PlateSystem sys;
  sys.free_dof_of.assign(3 * mesh.nodes.size(), -1);
  int n_free = 0;
  for (std::size_t n = 0; n < mesh.nodes.size(); ++n) {
    if (mesh.clamped[n]) continue;
    for (int d = 0; d < 3; ++d) sys.free_dof_of[3 * n + static_cast<std::size_t>(d)] = n_free++;
  }
  if (n_free == 0) throw std::invalid_argument("plate has no free DOFs");

  std::vector<Eigen::Triplet<double>> kt;
  std::vector<Eigen::Triplet<double>> mt;
  kt.reserve(mesh.elements.size() * 144);
  mt.reserve(mesh.elements.size() * 144);
  for (const auto& e : mesh.elements) {
    std::array<int, 12> map{};
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t d = 0; d < 3; ++d)
        map[3 * a + d] = sys.free_dof_of[3 * static_cast<std::size_t>(e[a]) + d];
    for (int r = 0; r < 12; ++r) {
      const int gr = map[static_cast<std::size_t>(r)];
      if (gr < 0) continue;
      for (int c = 0; c < 12; ++c) {
        const int gc = map[static_cast<std::size_t>(c)];
        if (gc < 0) continue;
        kt.emplace_back(gr, gc, elem.stiffness(r, c));
        mt.emplace_back(gr, gc, elem.mass(r, c));
      }
    }
  }
  sys.stiffness.resize(n_free, n_free);
  sys.mass.resize(n_free, n_free);
  sys.stiffness.setFromTriplets(kt.begin(), kt.end());
  sys.mass.setFromTriplets(mt.begin(), mt.end());
  return sys;
}

namespace {

using Factor = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Working subspace: the wanted modes plus guard vectors that speed up
// convergence of the highest wanted one.
int subspace_width(int n_modes, Eigen::Index n) {
  return static_cast<int>(std::min<Eigen::Index>(std::max(2 * n_modes, n_modes + 8), n));
}

// ||lambda K^-1 M v - v|| / ||v||. Unlike the plain residual this stays
// meaningful when K is badly conditioned (rotational DOFs on fine meshes).
double inverse_residual(const Factor& factor, const Eigen::SparseMatrix<double>& m, const Eigen::VectorXd& v,
                        double lambda) {
  const Eigen::VectorXd w = factor.solve(m * v);
  return (lambda * w - v).norm() / v.norm();
}

// Leading q eigenvectors, ascending.
Eigen::MatrixXd dense_solve(const PlateSystem& system, int q) {
  const Eigen::MatrixXd k(system.stiffness);
  const Eigen::MatrixXd m(system.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, m);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigen-solver non-convergence (dense)");
  return solver.eigenvectors().leftCols(q);
}

// Subspace iteration on K^-1 M with Rayleigh-Ritz projection; returns the
// q Ritz vectors once the lowest n_modes have settled.
Eigen::MatrixXd subspace_solve(const PlateSystem& system, const Factor& factor, int n_modes, int q,
                               double tolerance) {
  const auto& k = system.stiffness;
  const auto& m = system.mass;
  const Eigen::Index n = k.rows();

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(n, q);
  x.col(0) = Eigen::VectorXd(m.diagonal());
  for (int j = 1; j < q; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = normal(rng);

  Eigen::VectorXd previous = Eigen::VectorXd::Constant(q, std::numeric_limits<double>::infinity());
  constexpr int kMaxIterations = 2000;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const Eigen::MatrixXd xbar = factor.solve(m * x);
    const Eigen::MatrixXd kr = xbar.transpose() * (k * xbar);
    const Eigen::MatrixXd mr = xbar.transpose() * (m * xbar);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (kr + kr.transpose()), 0.5 * (mr + mr.transpose()));
    if (ritz.info() != Eigen::Success) throw std::runtime_error("eigen-solver non-convergence: Ritz problem failed");
    x = xbar * ritz.eigenvectors();
    const Eigen::VectorXd lambda = ritz.eigenvalues();

    // The double-precision inverse residual bottoms out near 1e-8 on the
    // default plate; polishing takes it the rest of the way.
    bool converged = true;
    for (int i = 0; i < n_modes && converged; ++i) {
      if (std::abs(lambda(i) - previous(i)) > tolerance * std::abs(lambda(i))) converged = false;
      else if (inverse_residual(factor, m, x.col(i), lambda(i)) > 1e-6) converged = false;
    }
    previous = lambda;
    if (converged) return x;
  }
  throw std::runtime_error("eigen-solver non-convergence after subspace iteration limit");
}

// A few block inverse iterations in extended precision, each linear solve
// corrected against a long-double residual. Brings ||Kv - lambda Mv|| / ||Kv||
// down to the rounding floor of a double vector, which on the default plate
// is within a factor of two of 1e-8.
EigenSolution polish(const PlateSystem& system, const Factor& factor, const Eigen::MatrixXd& start, int n_modes) {
  const Eigen::SparseMatrix<long double> k = system.stiffness.cast<long double>();
  const Eigen::SparseMatrix<long double> m = system.mass.cast<long double>();
  MatrixL x = start.cast<long double>();
  Eigen::Matrix<long double, Eigen::Dynamic, 1> lambda;
  constexpr int kPolishIterations = 3;
  constexpr int kRefinements = 3;
  for (int iter = 0; iter < kPolishIterations; ++iter) {
    const MatrixL b = m * x;
    MatrixL y = factor.solve(Eigen::MatrixXd(b.cast<double>())).cast<long double>();
    for (int r = 0; r < kRefinements; ++r) {
      const MatrixL residual = b - k * y;
      y += factor.solve(Eigen::MatrixXd(residual.cast<double>())).cast<long double>();
    }
    const MatrixL kr = y.transpose() * (k * y);
    const MatrixL mr = y.transpose() * (m * y);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixL> ritz(0.5L * (kr + kr.transpose()), 0.5L * (mr + mr.transpose()));
    if (ritz.info() != Eigen::Success) throw std::runtime_error("eigen-solver non-convergence: Ritz problem failed");
    x = y * ritz.eigenvectors();
    lambda = ritz.eigenvalues();
  }
  EigenSolution out;
  out.eigenvalues = lambda.head(n_modes).cast<double>();
  out.eigenvectors = x.leftCols(n_modes).cast<double>();
  return out;
}

}  // namespace

EigenSolution solve_lowest_modes(const PlateSystem& system, int n_modes, double tolerance) {
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  const Eigen::Index n = system.stiffness.rows();
  if (n_modes > n) throw std::invalid_argument("n_modes exceeds number of free DOFs");
  const int q = subspace_width(n_modes, n);
  const Factor factor(system.stiffness);
  if (factor.info() != Eigen::Success) throw std::runtime_error("eigen-solver non-convergence: stiffness factorisation failed");
  const Eigen::MatrixXd start =
      n <= kDenseEigenDofLimit ? dense_solve(system, q) : subspace_solve(system, factor, n_modes, q, tolerance);
  return polish(system, factor, start, n_modes);
}

ModalModel assemble_plate_model(const PlateGeometry& geometry, const MaterialSpec& material,
                                double element_size, int n_modes) {
  geometry.validate();
  material.validate();
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  const PlateMesh mesh = build_plate_mesh(geometry, element_size);
  const PlateSystem system = assemble_plate_system(mesh, geometry.thickness, material);
  const EigenSolution sol = solve_lowest_modes(system, n_modes);

  ModalModel model;
  model.node_coords = mesh.nodes;
  model.placement_mask.resize(mesh.nodes.size());
  model.mode_shapes = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mesh.nodes.size()), n_modes);
  for (std::size_t node = 0; node < mesh.nodes.size(); ++node) {
    model.placement_mask[node] = !mesh.clamped[node];
    const int dof = system.free_dof_of[3 * node];
    if (dof < 0) continue;
    for (int k = 0; k < n_modes; ++k) model.mode_shapes(static_cast<Eigen::Index>(node), k) = sol.eigenvectors(dof, k);
  }
  for (int k = 0; k < n_modes; ++k) {
    const double lambda = std::max(sol.eigenvalues(k), 0.0);
    model.frequencies.push_back(std::sqrt(lambda) / (2.0 * std::numbers::pi));
  }
  normalise_columns(model.mode_shapes);
  fix_mode_signs(model.mode_shapes);
  model.normalised = true;
  model.validate();
  return model;
}

}  // namespace modalcur
