#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "regulab/common.hpp"

namespace regulab {

/// Uniform dyadic time grid on [0, horizon]: nodes t_k = k * horizon / steps.
/// The step count must be a power of two so that dyadic refinement (sewing
/// levels, macro grids, circulant embedding) stays exactly representable.
struct TimeGrid {
  double horizon = 1.0;
  std::size_t steps = 2;

  TimeGrid() = default;
  TimeGrid(double horizon_, std::size_t steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (steps < 2 || !is_power_of_two(steps))
      throw std::invalid_argument("TimeGrid: steps must be a power of two >= 2");
  }

  double dt() const { return horizon / static_cast<double>(steps); }

  /// t_k; exact at k = steps (multiplication by a dyadic rational).
  double t(std::size_t k) const {
    return horizon * (static_cast<double>(k) / static_cast<double>(steps));
  }
};

/// Uniform N-dimensional box of value-space bins.  Bin (i_1,...,i_N) has
/// center lo_a + (i_a + 1/2) h_a along axis a.  Flat indices are row-major
/// with the last axis fastest.
struct ValueGrid {
  std::size_t dim = 1;
  std::size_t bins = 1;  // per axis
  std::vector<double> lo, hi;

  ValueGrid() = default;
  ValueGrid(std::size_t dim_, std::size_t bins_, std::vector<double> lo_, std::vector<double> hi_)
      : dim(dim_), bins(bins_), lo(std::move(lo_)), hi(std::move(hi_)) {
    if (dim == 0 || dim > 3) throw std::invalid_argument("ValueGrid: dim must be 1..3");
    if (lo.size() != dim || hi.size() != dim)
      throw std::invalid_argument("ValueGrid: bounds must have one entry per axis");
    if (bins < 8) throw std::invalid_argument("ValueGrid: need at least 8 bins per axis");
    double cells = 1.0;
    for (std::size_t a = 0; a < dim; ++a) {
      if (!(hi[a] > lo[a])) throw std::invalid_argument("ValueGrid: hi must exceed lo");
      cells *= static_cast<double>(bins);
    }
    if (cells > static_cast<double>(std::size_t{1} << 24))
      throw std::invalid_argument("ValueGrid: bins^dim exceeds 2^24");
  }

  /// Symmetric 1..3-d cube helper.
  static ValueGrid cube(std::size_t dim, std::size_t bins, double lo, double hi) {
    return ValueGrid(dim, bins, std::vector<double>(dim, lo), std::vector<double>(dim, hi));
  }

  double h(std::size_t axis) const { return (hi[axis] - lo[axis]) / static_cast<double>(bins); }

  /// Product of bin widths (the discrete volume element h^N).
  double cell_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < dim; ++a) v *= h(a);
    return v;
  }

  std::size_t total() const {
    std::size_t n = 1;
    for (std::size_t a = 0; a < dim; ++a) n *= bins;
    return n;
  }

  double center(std::size_t axis, std::size_t idx) const {
    return lo[axis] + (static_cast<double>(idx) + 0.5) * h(axis);
  }

  /// Axis index of the bin containing x; the closed upper edge belongs to the
  /// last bin.  Returns false when x lies outside the axis range.
  bool axis_index(std::size_t axis, double x, std::size_t& out) const {
    const double w = h(axis);
    if (x < lo[axis] || x > hi[axis]) return false;
    double f = std::floor((x - lo[axis]) / w);
    if (f < 0.0) f = 0.0;
    std::size_t i = static_cast<std::size_t>(f);
    if (i >= bins) i = bins - 1;
    out = i;
    return true;
  }

  /// Flat index of the bin containing the point, or throws naming the caller
  /// supplied context (e.g. the offending time index).
  std::size_t locate(std::span<const double> point, const std::string& context) const {
    if (point.size() != dim) throw std::invalid_argument("ValueGrid::locate: wrong point dim");
    std::size_t flat = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      std::size_t ia = 0;
      if (!axis_index(a, point[a], ia))
        throw std::invalid_argument("ValueGrid::locate: point outside grid (" + context + ")");
      flat = flat * bins + ia;
    }
    return flat;
  }

  std::vector<std::size_t> unflatten(std::size_t flat) const {
    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t a = dim; a-- > 0;) {
      idx[a] = flat % bins;
      flat /= bins;
    }
    return idx;
  }
};

/// Interior nodes of the unit interval with zero Dirichlet boundary:
/// x_j = (j+1) dx, j = 0..interior-1, dx = 1/(interior+1).
struct SpaceGrid1D {
  std::size_t interior = 1;

  SpaceGrid1D() = default;
  explicit SpaceGrid1D(std::size_t interior_) : interior(interior_) {
    if (interior == 0) throw std::invalid_argument("SpaceGrid1D: need at least one interior node");
  }

  double dx() const { return 1.0 / static_cast<double>(interior + 1); }
  double x(std::size_t j) const { return static_cast<double>(j + 1) * dx(); }
};

}  // namespace regulab
