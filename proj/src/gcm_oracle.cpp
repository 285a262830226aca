#include "pcm/gcm_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace pcm {

GridFunction::GridFunction(Vec us_, Vec fs_) : us(std::move(us_)), fs(std::move(fs_)) {
  require(us.size() >= 2, "GridFunction: need at least 2 points");
  require(us.size() == fs.size(), "GridFunction: length mismatch");
  require(us.allFinite() && fs.allFinite(), "GridFunction: values must be finite");
  for (Eigen::Index i = 1; i < us.size(); ++i)
    require(us[i] > us[i - 1], "GridFunction: grid must be strictly increasing");
}

GridFunction lower_convex_envelope(const GridFunction& g) {
  require(g.size() >= 2, "lower_convex_envelope: need at least 2 points");
  const Eigen::Index n = g.size();
  const double f_scale = 1.0 + g.fs.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> hull;
  hull.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) {
    while (hull.size() >= 2) {
      const Eigen::Index a = hull[hull.size() - 2];
      const Eigen::Index b = hull.back();
      const double du_ab = g.us[b] - g.us[a];
      const double du_ac = g.us[c] - g.us[a];
      const double cross = du_ab * (g.fs[c] - g.fs[a]) - (g.fs[b] - g.fs[a]) * du_ac;
      if (cross > 1e-13 * du_ab * du_ac * f_scale) break;
      hull.pop_back();
    }
    hull.push_back(c);
  }

  GridFunction out = g;
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    const Eigen::Index a = hull[k];
    const Eigen::Index b = hull[k + 1];
    for (Eigen::Index i = a + 1; i < b; ++i) {
      const double t = (g.us[i] - g.us[a]) / (g.us[b] - g.us[a]);
      out.fs[i] = std::min(g.fs[i], (1.0 - t) * g.fs[a] + t * g.fs[b]);
    }
  }
  return out;
}

double convexity_violation(const GridFunction& g) {
  double worst = 0.0;
  for (Eigen::Index i = 1; i + 1 < g.size(); ++i) {
    const double t = (g.us[i] - g.us[i - 1]) / (g.us[i + 1] - g.us[i - 1]);
    const double chord = (1.0 - t) * g.fs[i - 1] + t * g.fs[i + 1];
    worst = std::max(worst, g.fs[i] - chord);
  }
  return worst;
}

namespace {

GridFunction sample_slice(const std::function<double(const Vec&, double)>& f, const Vec& x,
                          const Vec& u_grid) {
  Vec fs(u_grid.size());
  for (Eigen::Index i = 0; i < u_grid.size(); ++i) fs[i] = f(x, u_grid[i]);
  return GridFunction(u_grid, std::move(fs));
}

}  // namespace

SliceCheckReport pgcm_slice_check(const std::function<double(const Vec&, double)>& f,
                                  const Vec& x, const Vec& u_grid, double tolerance) {
  const GridFunction slice = sample_slice(f, x, u_grid);
  const GridFunction env = lower_convex_envelope(slice);
  SliceCheckReport rep;
  rep.f_min = slice.fs.minCoeff();
  rep.envelope_min = env.fs.minCoeff();
  rep.minima_equal = rep.f_min == rep.envelope_min;
  rep.argmin_included = true;
  for (Eigen::Index i = 0; i < slice.size(); ++i) {
    if (slice.fs[i] == rep.f_min) {
      rep.f_argmins.push_back(i);
      if (!(env.fs[i] <= rep.envelope_min + tolerance)) rep.argmin_included = false;
    }
  }
  return rep;
}

ContinuityReport pgcm_continuity_probe(const std::function<double(const Vec&, double)>& f,
                                       const std::vector<std::pair<Vec, Vec>>& x_pairs,
                                       const Vec& u_grid) {
  ContinuityReport rep;
  for (const auto& [xa, xb] : x_pairs) {
    const GridFunction ea = lower_convex_envelope(sample_slice(f, xa, u_grid));
    const GridFunction eb = lower_convex_envelope(sample_slice(f, xb, u_grid));
    rep.separations.push_back((xa - xb).norm());
    rep.sup_distances.push_back((ea.fs - eb.fs).lpNorm<Eigen::Infinity>());
  }
  rep.non_increasing = true;
  for (std::size_t k = 1; k < rep.sup_distances.size(); ++k) {
    if (rep.sup_distances[k] > rep.sup_distances[k - 1] + 1e-12) rep.non_increasing = false;
  }
  return rep;
}

}  // namespace pcm
