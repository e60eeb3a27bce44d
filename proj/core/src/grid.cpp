#include "kruzkov/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "kruzkov/errors.hpp"

namespace kruzkov {

double kruzkov(double v) {
  if (std::isnan(v) || v < 0.0) throw DomainError("kruzkov transform: negative argument");
  if (std::isinf(v)) return 1.0;
  return -std::expm1(-v);
}

double inv_kruzkov(double W, double tol_dom) {
  if (std::isnan(W) || W < 0.0 || W > 1.0) {
    throw DomainError("inverse kruzkov transform: W outside [0, 1]");
  }
  if (W >= 1.0 - tol_dom) return kInfinity;
  return -std::log1p(-W);
}

const char* to_string(InitRegime r) {
  return r == InitRegime::FromAbove ? "above" : "below";
}

const char* to_string(OutOfBox o) { return o == OutOfBox::One ? "one" : "extrapolate"; }

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> counts)
    : lo_(std::move(lo)), hi_(std::move(hi)), counts_(std::move(counts)) {
  if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != counts_.size()) {
    throw ConfigError("grid: bounds and counts must be nonempty with equal length");
  }
  if (lo_.size() > 3) throw ConfigError("grid: at most 3 dimensions are supported");
  const std::size_t n = lo_.size();
  h_.resize(n);
  strides_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts_[i] < 2) throw ConfigError("grid: at least 2 nodes per axis");
    if (!(hi_[i] > lo_[i])) throw ConfigError("grid: upper bound must exceed lower bound");
    h_[i] = (hi_[i] - lo_[i]) / static_cast<double>(counts_[i] - 1);
  }
  size_ = 1;
  for (std::size_t i = n; i-- > 0;) {
    strides_[i] = size_;
    size_ *= counts_[i];
  }
}

Grid Grid::with_spacing(std::vector<double> lo, std::vector<double> hi, double h) {
  if (!(h > 0.0)) throw ConfigError("grid: spacing must be positive");
  std::vector<std::size_t> counts(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    counts[i] = static_cast<std::size_t>(std::llround((hi[i] - lo[i]) / h)) + 1;
  }
  return Grid(std::move(lo), std::move(hi), std::move(counts));
}

double Grid::min_spacing() const { return *std::min_element(h_.begin(), h_.end()); }

double Grid::cell_diagonal() const {
  double s = 0.0;
  for (double h : h_) s += h * h;
  return std::sqrt(s);
}

double Grid::coord(std::size_t axis, std::size_t i) const {
  if (i + 1 == counts_[axis]) return hi_[axis];
  return lo_[axis] + h_[axis] * static_cast<double>(i);
}

void Grid::node(std::size_t index, std::span<double> out) const {
  for (std::size_t a = 0; a < dims(); ++a) {
    out[a] = coord(a, (index / strides_[a]) % counts_[a]);
  }
}

State Grid::node(std::size_t index) const {
  State x(dims());
  node(index, x);
  return x;
}

bool Grid::locate(std::span<const double> x, bool clamp, std::size_t& base,
                  std::span<double> frac) const {
  base = 0;
  for (std::size_t a = 0; a < dims(); ++a) {
    const double last = static_cast<double>(counts_[a] - 1);
    double t = (x[a] - lo_[a]) / h_[a];
    if (!(t >= -1e-9) || !(t <= last + 1e-9)) {
      if (!clamp || std::isnan(t)) return false;
    }
    t = std::clamp(t, 0.0, last);
    auto i = static_cast<std::size_t>(t);
    if (i + 1 >= counts_[a]) i = counts_[a] - 2;
    frac[a] = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
    base += i * strides_[a];
  }
  return true;
}

double Grid::interpolate_cell(std::span<const double> values, std::size_t base,
                              std::span<const double> frac) const {
  const std::size_t n = dims();
  const std::size_t corners = std::size_t{1} << n;
  double sum = 0.0;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t idx = base;
    for (std::size_t a = 0; a < n; ++a) {
      if (c & (std::size_t{1} << a)) {
        w *= frac[a];
        idx += strides_[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    if (w != 0.0) sum += w * values[idx];
  }
  return sum;
}

double Grid::interpolate(std::span<const double> values, std::span<const double> x,
                         OutOfBox policy, double outside) const {
  std::array<double, 3> frac{};
  std::size_t base = 0;
  if (!locate(x, policy == OutOfBox::Extrapolate, base, std::span(frac.data(), dims()))) {
    return outside;
  }
  return interpolate_cell(values, base, std::span(frac.data(), dims()));
}

std::size_t Grid::nearest(std::span<const double> x) const {
  std::size_t index = 0;
  for (std::size_t a = 0; a < dims(); ++a) {
    const double t = std::clamp((x[a] - lo_[a]) / h_[a], 0.0,
                                static_cast<double>(counts_[a] - 1));
    index += static_cast<std::size_t>(std::llround(t)) * strides_[a];
  }
  return index;
}

// ---------------------------------------------------------------------------
// ValueTable

ValueTable::ValueTable(Grid grid, std::vector<double> W, double tol_dom, TableMeta meta)
    : grid_(std::move(grid)), W_(std::move(W)), tol_dom_(tol_dom), meta_(std::move(meta)) {
  if (W_.size() != grid_.size()) throw ConfigError("value table: size differs from grid");
  for (double w : W_) {
    // Round-off slack only; anything else is a caller bug.
    if (!(w >= -1e-12 && w <= 1.0 + 1e-12)) throw DomainError("value table: W outside [0,1]");
  }
  refresh_mask();
}

void ValueTable::refresh_mask() {
  mask_.resize(W_.size());
  for (std::size_t i = 0; i < W_.size(); ++i) mask_[i] = W_[i] < 1.0 - tol_dom_ ? 1 : 0;
}

double ValueTable::W_at(std::span<const double> x, OutOfBox policy) const {
  return grid_.interpolate(W_, x, policy, 1.0);
}

double ValueTable::V_at(std::span<const double> x, OutOfBox policy) const {
  return inv_kruzkov(std::clamp(W_at(x, policy), 0.0, 1.0), tol_dom_);
}

double ValueTable::V(std::size_t i) const {
  return inv_kruzkov(std::clamp(W_[i], 0.0, 1.0), tol_dom_);
}

}  // namespace kruzkov
