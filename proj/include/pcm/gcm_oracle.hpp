#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "pcm/numerics.hpp"

namespace pcm {

/// Samples of a 1D function on a strictly increasing grid.
struct GridFunction {
  Vec us;
  Vec fs;

  GridFunction() = default;
  GridFunction(Vec us_, Vec fs_);
  Eigen::Index size() const { return us.size(); }
};

/// Lower convex envelope of the points (u_i, f_i), sampled back on the same
/// grid: monotone-chain lower hull, then linear interpolation between hull
/// vertices. Near-collinear points (relative 1e-13) are dropped from the hull
/// and the result is capped by f, so the output never exceeds the input and
/// applying the envelope twice reproduces the first result.
GridFunction lower_convex_envelope(const GridFunction& g);

struct SliceCheckReport {
  double f_min = 0.0;
  double envelope_min = 0.0;
  bool minima_equal = false;          // exact equality
  bool argmin_included = false;       // every grid argmin of f is one of the envelope
  std::vector<Eigen::Index> f_argmins;
};

/// min f(x, .) == min of its envelope, and argmin f is contained in the
/// envelope's argmin, checked on `u_grid`. `tolerance` applies to the argmin
/// membership test on the envelope values.
SliceCheckReport pgcm_slice_check(const std::function<double(const Vec&, double)>& f,
                                  const Vec& x, const Vec& u_grid, double tolerance = 0.0);

struct ContinuityReport {
  std::vector<double> separations;
  std::vector<double> sup_distances;
  bool non_increasing = false;
};

/// For each pair, the sup-distance between the envelope slices at the two x.
/// Pairs should be ordered by decreasing separation.
ContinuityReport pgcm_continuity_probe(const std::function<double(const Vec&, double)>& f,
                                       const std::vector<std::pair<Vec, Vec>>& x_pairs,
                                       const Vec& u_grid);

/// Largest amount by which f_i exceeds the chord through its two grid
/// neighbours (0 when convex on the grid; on a uniform grid this is the
/// midpoint-convexity defect).
double convexity_violation(const GridFunction& g);

}  // namespace pcm
