#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace modalcur {

struct MaterialSpec {
  double youngs_modulus = 210e9;  // Pa
  double poisson_ratio = 0.3;
  double density = 7850.0;  // kg/m^3

  // Throws std::invalid_argument on non-physical values.
  void validate() const;
};

struct PlateGeometry {
  double length = 0.447;  // m, along x (clamped at x = 0)
  double width = 0.0762;  // m, along y
  double thickness = 0.003;
  double clamp_depth = 0.024;

  void validate() const;
};

struct NodeCoord {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const NodeCoord&, const NodeCoord&) = default;
};

// Mode shapes sampled at candidate nodes. Rows of `mode_shapes` follow
// `node_coords`; columns are modes in ascending frequency order.
struct ModalModel {
  std::vector<NodeCoord> node_coords;
  Eigen::MatrixXd mode_shapes;
  std::vector<double> frequencies;  // Hz
  std::vector<bool> placement_mask;
  bool normalised = true;

  [[nodiscard]] int n_nodes() const { return static_cast<int>(node_coords.size()); }
  [[nodiscard]] int n_modes() const { return static_cast<int>(mode_shapes.cols()); }
  [[nodiscard]] std::vector<int> placeable_nodes() const;

  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

// Scales each column to unit Euclidean norm. Zero columns are left untouched.
void normalise_columns(Eigen::MatrixXd& shapes);

// Flips each column so that its largest-magnitude entry is positive.
void fix_mode_signs(Eigen::MatrixXd& shapes);

// Closed-form clamped-free Euler-Bernoulli beam sampled on an evenly spaced
// grid x_i = i L / (n_points - 1). Node 0 sits on the clamp and is masked.
// Frequencies use a rectangular section of the given width/thickness.
struct BeamSection {
  double thickness = 0.003;
  MaterialSpec material{};
};
ModalModel beam_modes_analytical(double length, int n_points, int n_modes,
                                 const BeamSection& section = {});

// Roots of 1 + cos(z) cosh(z) = 0; eight are tabulated.
double clamped_free_root(int mode);
inline constexpr int kMaxBeamModes = 8;

// Text format "modal-v1"; see README for the layout.
void write_modal_data(std::ostream& out, const ModalModel& model);
void save_modal_data(const std::filesystem::path& path, const ModalModel& model);
ModalModel read_modal_data(std::istream& in);
ModalModel load_modal_data(const std::filesystem::path& path);

}  // namespace modalcur
