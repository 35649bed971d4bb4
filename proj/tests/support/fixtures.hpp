#pragma once

#include "oracles.hpp"

#include <modalcur/info_reward.hpp>
#include <modalcur/modal_model.hpp>
#include <modalcur/sensing_env.hpp>

#include <memory>
#include <vector>

namespace modalcur::testing {

// Beam with `n_candidates` placeable nodes plus the clamped root node.
inline std::shared_ptr<const ModalModel> beam_toy(int n_candidates, int n_modes) {
  return std::make_shared<const ModalModel>(beam_modes_analytical(0.423, n_candidates + 1, n_modes));
}

inline oracle::Problem to_problem(const ModalModel& m, ModeRange theta, int n_sensors) {
  oracle::Problem p;
  for (int i = 0; i < m.n_nodes(); ++i) {
    oracle::Vec row;
    for (int k = 0; k < m.n_modes(); ++k) row.push_back(m.mode_shapes(i, k));
    p.shapes.push_back(row);
    p.x.push_back(m.node_coords[static_cast<std::size_t>(i)].x);
    p.y.push_back(m.node_coords[static_cast<std::size_t>(i)].y);
  }
  p.first_mode = theta.first;
  p.last_mode = theta.last;
  p.n_sensors = n_sensors;
  return p;
}

inline std::vector<int> placeable(const ModalModel& m) { return m.placeable_nodes(); }

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace modalcur::testing
