#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kruzkov/problem.hpp"
#include "kruzkov/transform.hpp"

namespace kruzkov {

/// Value used for interpolation feet that fall outside the grid box.
enum class OutOfBox {
  One,          ///< leaving the box is infinite cost (W = 1)
  Extrapolate,  ///< constant extrapolation (clamp to the box)
};

/// Regular tensor grid with N_i >= 2 nodes per axis; node 0 is the
/// lower corner and the last axis varies fastest.
class Grid {
 public:
  Grid(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> counts);
  /// Node counts chosen as round((hi - lo) / h) + 1 per axis.
  static Grid with_spacing(std::vector<double> lo, std::vector<double> hi, double h);

  std::size_t dims() const { return lo_.size(); }
  std::size_t size() const { return size_; }
  double lo(std::size_t axis) const { return lo_[axis]; }
  double hi(std::size_t axis) const { return hi_[axis]; }
  std::size_t count(std::size_t axis) const { return counts_[axis]; }
  double spacing(std::size_t axis) const { return h_[axis]; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  double min_spacing() const;
  double cell_diagonal() const;
  Box box() const { return Box{lo_, hi_}; }

  double coord(std::size_t axis, std::size_t i) const;
  void node(std::size_t index, std::span<double> out) const;
  State node(std::size_t index) const;
  std::size_t stride(std::size_t axis) const { return strides_[axis]; }

  /// Cell containing `x`: base node index plus fractional offsets in [0,1].
  /// Returns false when x is outside the box (after optional clamping).
  bool locate(std::span<const double> x, bool clamp, std::size_t& base,
              std::span<double> frac) const;

  /// Multilinear interpolation of nodal `values` at `x`.
  double interpolate(std::span<const double> values, std::span<const double> x,
                     OutOfBox policy = OutOfBox::One, double outside = 1.0) const;

  /// Interpolation from a precomputed cell; used in hot loops.
  double interpolate_cell(std::span<const double> values, std::size_t base,
                          std::span<const double> frac) const;

  /// Index of the node nearest to x (clamped into the box).
  std::size_t nearest(std::span<const double> x) const;

 private:
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<std::size_t> counts_;
  std::vector<double> h_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

enum class InitRegime { FromAbove, FromBelow };

const char* to_string(InitRegime r);
const char* to_string(OutOfBox o);

/// Provenance recorded alongside a value table.
struct TableMeta {
  double delta_target = 0.0;
  double eps = 0.0;
  InitRegime init = InitRegime::FromAbove;
  double dt = 0.0;
  /// Horizon for finite-time tables; 0 otherwise.
  double horizon = 0.0;
  std::string mode = "exit-time";
  /// Free-form note, e.g. the viability assumption of infinite-horizon mode.
  std::string note;
};

/// Kruzkov-transformed values W in [0,1] on a grid plus the domain mask
/// {W < 1 - tol_dom}.
class ValueTable {
 public:
  ValueTable(Grid grid, std::vector<double> W, double tol_dom = 1e-6, TableMeta meta = {});

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return W_; }
  std::vector<double>& mutable_values() { return W_; }
  double operator[](std::size_t i) const { return W_[i]; }
  bool in_domain(std::size_t i) const { return mask_[i] != 0; }
  double tol_dom() const { return tol_dom_; }
  const TableMeta& meta() const { return meta_; }
  TableMeta& meta() { return meta_; }

  /// Recomputes the domain mask after W was modified in place.
  void refresh_mask();

  /// Interpolated W at an arbitrary point.
  double W_at(std::span<const double> x, OutOfBox policy = OutOfBox::One) const;
  /// -log(1 - W) at x; +inf outside the domain.
  double V_at(std::span<const double> x, OutOfBox policy = OutOfBox::One) const;
  /// -log(1 - W) at node i; +inf outside the domain.
  double V(std::size_t i) const;

 private:
  Grid grid_;
  std::vector<double> W_;
  std::vector<std::uint8_t> mask_;
  double tol_dom_;
  TableMeta meta_;
};

}  // namespace kruzkov
