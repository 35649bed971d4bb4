#include "modalcur/modal_model.hpp"

#include "text_format.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace modalcur {

void MaterialSpec::validate() const {
  if (!(youngs_modulus > 0.0) || !std::isfinite(youngs_modulus))
    throw std::invalid_argument("non-physical material: youngs_modulus must be > 0");
  if (!(poisson_ratio >= 0.0 && poisson_ratio < 0.5))
    throw std::invalid_argument("non-physical material: poisson_ratio must lie in [0, 0.5)");
  if (!(density > 0.0) || !std::isfinite(density))
    throw std::invalid_argument("non-physical material: density must be > 0");
}

void PlateGeometry::validate() const {
  for (double v : {length, width, thickness, clamp_depth}) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("invalid geometry: all dimensions must be > 0");
  }
  if (!(clamp_depth < length))
    throw std::invalid_argument("invalid geometry: clamp_depth must be < length");
}

std::vector<int> ModalModel::placeable_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < n_nodes(); ++i)
    if (placement_mask[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

void ModalModel::validate() const {
  if (node_coords.empty()) throw std::invalid_argument("modal model has no nodes");
  if (mode_shapes.rows() != n_nodes())
    throw std::invalid_argument("row-count mismatch between coordinates and shapes");
  if (placement_mask.size() != node_coords.size())
    throw std::invalid_argument("row-count mismatch between coordinates and placement mask");
  if (mode_shapes.cols() < 1) throw std::invalid_argument("modal model has no modes");
  if (frequencies.size() != static_cast<std::size_t>(mode_shapes.cols()))
    throw std::invalid_argument("frequency count does not match mode count");
  for (std::size_t k = 0; k < frequencies.size(); ++k) {
    if (!std::isfinite(frequencies[k]) || frequencies[k] < 0.0)
      throw std::invalid_argument("frequencies must be finite and non-negative");
    if (k > 0 && !(frequencies[k] > frequencies[k - 1]))
      throw std::invalid_argument("non-ascending frequencies");
  }
  if (!mode_shapes.allFinite()) throw std::invalid_argument("mode shapes contain non-finite values");
  for (const auto& c : node_coords)
    if (!std::isfinite(c.x) || !std::isfinite(c.y))
      throw std::invalid_argument("node coordinates must be finite");
  if (normalised) {
    for (Eigen::Index k = 0; k < mode_shapes.cols(); ++k) {
      if (std::abs(mode_shapes.col(k).norm() - 1.0) > 1e-9)
        throw std::invalid_argument("mode shape column is not unit-normalised");
    }
  }
}

void normalise_columns(Eigen::MatrixXd& shapes) {
  for (Eigen::Index k = 0; k < shapes.cols(); ++k) {
    const double n = shapes.col(k).norm();
    if (n > 0.0) shapes.col(k) /= n;
  }
}

void fix_mode_signs(Eigen::MatrixXd& shapes) {
  for (Eigen::Index k = 0; k < shapes.cols(); ++k) {
    Eigen::Index imax = 0;
    shapes.col(k).cwiseAbs().maxCoeff(&imax);
    if (shapes(imax, k) < 0.0) shapes.col(k) *= -1.0;
  }
}

void write_modal_data(std::ostream& out, const ModalModel& model) {
  out << "modal-v1 " << model.n_nodes() << ' ' << model.n_modes() << ' '
      << (model.normalised ? 1 : 0) << '\n';
  for (int i = 0; i < model.n_nodes(); ++i) {
    const auto& c = model.node_coords[static_cast<std::size_t>(i)];
    out << text::format_double(c.x) << ' ' << text::format_double(c.y) << ' '
        << (model.placement_mask[static_cast<std::size_t>(i)] ? 1 : 0);
    for (int k = 0; k < model.n_modes(); ++k) out << ' ' << text::format_double(model.mode_shapes(i, k));
    out << '\n';
  }
  out << "freqs";
  for (double f : model.frequencies) out << ' ' << text::format_double(f);
  out << '\n';
}

void save_modal_data(const std::filesystem::path& path, const ModalModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_modal_data(out, model);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModalModel read_modal_data(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("malformed header: empty file");
  const auto head = text::split_ws(line);
  if (head.size() != 4 || head[0] != "modal-v1")
    throw std::invalid_argument("malformed header: expected 'modal-v1 <n_nodes> <n_modes> <normalised>'");
  int n_nodes = 0;
  int n_modes = 0;
  int norm_flag = 0;
  try {
    n_nodes = text::parse_int(head[1]);
    n_modes = text::parse_int(head[2]);
    norm_flag = text::parse_int(head[3]);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("malformed header: non-integer field");
  }
  if (n_nodes < 1 || n_modes < 1 || (norm_flag != 0 && norm_flag != 1))
    throw std::invalid_argument("malformed header: counts must be >= 1 and flag 0|1");

  ModalModel model;
  model.node_coords.reserve(static_cast<std::size_t>(n_nodes));
  model.placement_mask.reserve(static_cast<std::size_t>(n_nodes));
  model.mode_shapes.resize(n_nodes, n_modes);

  int row = 0;
  bool have_freqs = false;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tok = text::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "freqs") {
      if (row != n_nodes) throw std::invalid_argument("row-count mismatch between coordinates and shapes");
      if (static_cast<int>(tok.size()) != n_modes + 1)
        throw std::invalid_argument("freqs line has wrong number of entries");
      for (int k = 0; k < n_modes; ++k) model.frequencies.push_back(text::parse_double(tok[static_cast<std::size_t>(k + 1)]));
      have_freqs = true;
      continue;
    }
    if (have_freqs) throw std::invalid_argument("unexpected content after freqs line");
    if (row >= n_nodes) throw std::invalid_argument("row-count mismatch between coordinates and shapes");
    if (static_cast<int>(tok.size()) != n_modes + 3)
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected x y mask and " +
                                  std::to_string(n_modes) + " shape values");
    NodeCoord c{text::parse_double(tok[0]), text::parse_double(tok[1])};
    const int mask = text::parse_int(tok[2]);
    if (mask != 0 && mask != 1) throw std::invalid_argument("mask must be 0 or 1");
    model.node_coords.push_back(c);
    model.placement_mask.push_back(mask == 1);
    for (int k = 0; k < n_modes; ++k) model.mode_shapes(row, k) = text::parse_double(tok[static_cast<std::size_t>(k + 3)]);
    ++row;
  }
  if (!have_freqs) {
    if (row != n_nodes) throw std::invalid_argument("row-count mismatch between coordinates and shapes");
    throw std::invalid_argument("missing freqs line");
  }
  model.normalised = true;
  if (norm_flag == 0) normalise_columns(model.mode_shapes);
  model.validate();
  return model;
}

ModalModel load_modal_data(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open modal data file " + path.string());
  return read_modal_data(in);
}

}  // namespace modalcur
