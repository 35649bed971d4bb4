#include "modalcur/modal_model.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace modalcur {
namespace {

constexpr std::array<double, kMaxBeamModes> kClampedFreeRoots = {
    1.875104068711961, 4.694091132974175, 7.854757438237613, 10.995540734875467,
    14.137168391046471, 17.278759532088236, 20.420352251041251, 23.561944901806445,
};

// phi(z) = cosh z - cos z - s (sinh z - sin z), s = (cosh bL + cos bL)/(sinh bL + sin bL).
// The hyperbolic part is rewritten as e^z (1-s)/2 + e^-z (1+s)/2 to avoid
// cancellation for the higher modes.
double clamped_free_shape(double beta_l, double xi) {
  const double bl = beta_l;
  const double denom = std::sinh(bl) + std::sin(bl);
  const double s = (std::cosh(bl) + std::cos(bl)) / denom;
  const double one_minus_s = (std::sin(bl) - std::cos(bl) - std::exp(-bl)) / denom;
  const double z = bl * xi;
  const double hyper = 0.5 * std::exp(z) * one_minus_s + 0.5 * std::exp(-z) * (1.0 + s);
  return hyper - std::cos(z) + s * std::sin(z);
}

}  // namespace

double clamped_free_root(int mode) {
  if (mode < 1 || mode > kMaxBeamModes)
    throw std::invalid_argument("clamped-free root table holds modes 1.." + std::to_string(kMaxBeamModes));
  return kClampedFreeRoots[static_cast<std::size_t>(mode - 1)];
}

ModalModel beam_modes_analytical(double length, int n_points, int n_modes, const BeamSection& section) {
  if (!(length > 0.0)) throw std::invalid_argument("beam length must be > 0");
  if (n_modes < 1) throw std::invalid_argument("n_modes must be >= 1");
  if (n_modes > kMaxBeamModes)
    throw std::invalid_argument("n_modes > " + std::to_string(kMaxBeamModes) + ": root-finding table exhausted");
  if (n_points < n_modes + 1) throw std::invalid_argument("n_points must be >= n_modes + 1");
  section.material.validate();
  if (!(section.thickness > 0.0)) throw std::invalid_argument("beam thickness must be > 0");

  ModalModel model;
  model.node_coords.resize(static_cast<std::size_t>(n_points));
  model.placement_mask.assign(static_cast<std::size_t>(n_points), true);
  model.placement_mask[0] = false;
  model.mode_shapes.resize(n_points, n_modes);

  // EI / (rho A) for a rectangular section reduces to E t^2 / (12 rho).
  const auto& mat = section.material;
  const double stiffness_ratio = mat.youngs_modulus * section.thickness * section.thickness / (12.0 * mat.density);

  for (int i = 0; i < n_points; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(n_points - 1);
    model.node_coords[static_cast<std::size_t>(i)] = {xi * length, 0.0};
    for (int k = 0; k < n_modes; ++k) model.mode_shapes(i, k) = clamped_free_shape(kClampedFreeRoots[static_cast<std::size_t>(k)], xi);
  }
  for (int k = 0; k < n_modes; ++k) {
    const double bl = kClampedFreeRoots[static_cast<std::size_t>(k)];
    model.frequencies.push_back(bl * bl / (2.0 * std::numbers::pi * length * length) * std::sqrt(stiffness_ratio));
    model.mode_shapes(0, k) = 0.0;
  }
  normalise_columns(model.mode_shapes);
  fix_mode_signs(model.mode_shapes);
  model.normalised = true;
  return model;
}

}  // namespace modalcur
