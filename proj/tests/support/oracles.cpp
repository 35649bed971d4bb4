#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

double clamped_free_root(int k) {
  // Root k lies in ((k - 1/2) pi - 1, (k - 1/2) pi + 1) for the clamped-free
  // characteristic equation; the first one sits near 1.875.
  auto f = [](double z) { return 1.0 + std::cos(z) * std::cosh(z); };
  double lo = (k - 0.5) * std::numbers::pi - 1.0;
  double hi = (k - 0.5) * std::numbers::pi + 1.0;
  if (k == 1) {
    lo = 1.0;
    hi = 2.5;
  }
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double clamped_free_shape(int k, double xi) {
  const double b = clamped_free_root(k);
  const double sigma = (std::cosh(b) + std::cos(b)) / (std::sinh(b) + std::sin(b));
  const double z = b * xi;
  return std::cosh(z) - std::cos(z) - sigma * (std::sinh(z) - std::sin(z));
}

double beam_frequency(int k, double length, double thickness, double youngs, double density) {
  const double b = clamped_free_root(k);
  return b * b / (2.0 * std::numbers::pi * length * length) * std::sqrt(youngs * thickness * thickness / (12.0 * density));
}

Mat beam_shapes(int n_points, int n_modes) {
  Mat s(static_cast<std::size_t>(n_points), Vec(static_cast<std::size_t>(n_modes), 0.0));
  for (int k = 0; k < n_modes; ++k) {
    double norm = 0.0;
    for (int i = 1; i < n_points; ++i) {
      const double v = clamped_free_shape(k + 1, static_cast<double>(i) / (n_points - 1));
      s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = v;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    int imax = 0;
    for (int i = 0; i < n_points; ++i) {
      auto& v = s[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      v /= norm;
      if (std::abs(v) > std::abs(s[static_cast<std::size_t>(imax)][static_cast<std::size_t>(k)])) imax = i;
    }
    if (s[static_cast<std::size_t>(imax)][static_cast<std::size_t>(k)] < 0.0)
      for (auto& row : s) row[static_cast<std::size_t>(k)] = -row[static_cast<std::size_t>(k)];
  }
  return s;
}

Mat inverse(const Mat& a) {
  const std::size_t n = a.size();
  Mat m = a;
  Mat inv(n, Vec(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (m[piv][col] == 0.0) throw std::runtime_error("oracle: singular matrix");
    std::swap(m[piv], m[col]);
    std::swap(inv[piv], inv[col]);
    const double d = m[col][col];
    for (std::size_t c = 0; c < n; ++c) {
      m[col][c] /= d;
      inv[col][c] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r][col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        m[r][c] -= f * m[col][c];
        inv[r][c] -= f * inv[col][c];
      }
    }
  }
  return inv;
}

double determinant(const Mat& a) {
  const std::size_t n = a.size();
  Mat m = a;
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    if (m[piv][col] == 0.0) return 0.0;
    if (piv != col) {
      std::swap(m[piv], m[col]);
      det = -det;
    }
    det *= m[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t c = col; c < n; ++c) m[r][c] -= f * m[col][c];
    }
  }
  return det;
}

namespace {

double diameter(const Problem& p) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i)
    for (std::size_t j = 0; j < p.x.size(); ++j) d = std::max(d, std::hypot(p.x[i] - p.x[j], p.y[i] - p.y[j]));
  return d;
}

}  // namespace

double covariance(const Problem& p, int i, int j) {
  const auto ui = static_cast<std::size_t>(i);
  const auto uj = static_cast<std::size_t>(j);
  const double upsilon = diameter(p) / p.n_sensors;
  const double dist = std::hypot(p.x[ui] - p.x[uj], p.y[ui] - p.y[uj]);
  double sum = 0.0;
  for (int k = p.first_mode; k <= p.last_mode; ++k) {
    const double a = p.shapes[ui][static_cast<std::size_t>(k - 1)];
    const double b = p.shapes[uj][static_cast<std::size_t>(k - 1)];
    const double m = std::max(std::abs(a), std::abs(b));
    if (m == 0.0) continue;
    sum += (std::abs(a) / m) * (std::abs(b) / m);
  }
  return std::exp(-dist / upsilon) * sum / (p.last_mode - p.first_mode + 1);
}

Mat fim(const Problem& p, const std::vector<int>& cells) {
  const std::size_t s = cells.size();
  const std::size_t k = static_cast<std::size_t>(p.last_mode - p.first_mode + 1);
  Mat sigma(s, Vec(s));
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b) sigma[a][b] = covariance(p, cells[a], cells[b]);
  const Mat sinv = inverse(sigma);
  Mat l(s, Vec(k));
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t m = 0; m < k; ++m)
      l[a][m] = p.shapes[static_cast<std::size_t>(cells[a])][static_cast<std::size_t>(p.first_mode - 1) + m];
  Mat q(k, Vec(k, 0.0));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) {
      double acc = 0.0;
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b) acc += l[a][r] * sinv[a][b] * l[b][c];
      q[r][c] = acc;
    }
  return q;
}

double det_fim(const Problem& p, const std::vector<int>& cells) { return determinant(fim(p, cells)); }

std::vector<EfiStep> efi_sequence(const Problem& p, std::vector<int> candidates) {
  const std::size_t k = static_cast<std::size_t>(p.last_mode - p.first_mode + 1);
  std::vector<EfiStep> steps;
  while (static_cast<int>(candidates.size()) > p.n_sensors) {
    Mat a(k, Vec(k, 0.0));
    for (int c : candidates)
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < k; ++s)
          a[r][s] += p.shapes[static_cast<std::size_t>(c)][static_cast<std::size_t>(p.first_mode - 1) + r] *
                     p.shapes[static_cast<std::size_t>(c)][static_cast<std::size_t>(p.first_mode - 1) + s];
    const Mat ainv = inverse(a);
    EfiStep step;
    step.candidates = candidates;
    std::size_t worst = 0;
    for (std::size_t n = 0; n < candidates.size(); ++n) {
      const auto& row = p.shapes[static_cast<std::size_t>(candidates[n])];
      double e = 0.0;
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t s = 0; s < k; ++s)
          e += row[static_cast<std::size_t>(p.first_mode - 1) + r] * ainv[r][s] * row[static_cast<std::size_t>(p.first_mode - 1) + s];
      step.effectiveness.push_back(e);
      if (e < step.effectiveness[worst]) worst = n;
    }
    step.removed = candidates[worst];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(worst));
    steps.push_back(std::move(step));
  }
  return steps;
}

Enumeration enumerate_all(const Problem& p, const std::vector<int>& candidates) {
  Enumeration out;
  const int n = static_cast<int>(candidates.size());
  const int m = p.n_sensors;
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = i;
  bool first = true;
  while (true) {
    std::vector<int> cells;
    for (int i : idx) cells.push_back(candidates[static_cast<std::size_t>(i)]);
    const double d = det_fim(p, cells);
    out.configs.push_back(cells);
    out.dets.push_back(d);
    if (first || d > out.best_det) {
      out.best = cells;
      out.best_det = d;
      first = false;
    }
    int i = m - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - m + i) --i;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < m; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

double mac_entry(const Mat& shapes, int mode_a, int mode_b, const std::vector<int>& rows) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (int r : rows) {
    const double a = shapes[static_cast<std::size_t>(r)][static_cast<std::size_t>(mode_a)];
    const double b = shapes[static_cast<std::size_t>(r)][static_cast<std::size_t>(mode_b)];
    ab += a * b;
    aa += a * a;
    bb += b * b;
  }
  return ab * ab / (aa * bb);
}

}  // namespace oracle
