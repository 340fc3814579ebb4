#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "ssb/common.hpp"
#include "ssb/problems.hpp"

namespace ssb {

/// The fixed point sets of a run: interior collocation points plus one
/// boundary set per constraint. Sampled once per run and reused by every
/// optimizer iteration.
struct CollocationSet {
  std::vector<Point> interior;
  std::vector<std::vector<Point>> boundary;  // indexed like ProblemSpec::constraints
  int n_near = 0;
  int n_far = 0;
  std::uint64_t seed = 0;
};

namespace detail {

/// The near-origin sub-box of half-width r_split. For problems living on
/// a half plane the wall side is not mirrored.
inline Box near_box(const Box& domain, double r_split, bool half_plane_y2) {
  Box b = domain;
  b.lo[0] = std::max(domain.lo[0], -r_split);
  b.hi[0] = std::min(domain.hi[0], r_split);
  if (domain.dim == 2) {
    b.lo[1] = half_plane_y2 ? domain.lo[1] : std::max(domain.lo[1], -r_split);
    b.hi[1] = std::min(domain.hi[1], half_plane_y2 ? domain.lo[1] + r_split : r_split);
  }
  return b;
}

}  // namespace detail

/// Interior collocation with two uniform densities: n_near points in the
/// near-origin sub-box of half-width r_split, n_far in the remainder of
/// the domain. Deterministic in the seed.
inline std::vector<Point> sample_interior(const Box& domain, int n_near, int n_far,
                                          double r_split, std::uint64_t seed,
                                          bool half_plane_y2 = false) {
  if (n_near < 0 || n_far < 0 || n_near + n_far == 0)
    throw ConfigError("sample_interior: need a positive number of points");
  if (!(r_split > 0.0) || r_split >= domain.hi[0] ||
      (domain.dim == 2 && r_split >= domain.hi[1] - (half_plane_y2 ? domain.lo[1] : 0.0)))
    throw ConfigError("sample_interior: r_split must lie strictly inside the domain");
  const Box nb = detail::near_box(domain, r_split, half_plane_y2);
  Rng rng(seed);
  std::vector<Point> pts;
  pts.reserve(static_cast<std::size_t>(n_near) + n_far);
  for (int i = 0; i < n_near; ++i) {
    Point p{{rng.uniform(nb.lo[0], nb.hi[0]), 0.0}};
    if (domain.dim == 2) p[1] = rng.uniform(nb.lo[1], nb.hi[1]);
    pts.push_back(p);
  }
  int produced = 0;
  int guard = 0;
  while (produced < n_far) {
    Point p{{rng.uniform(domain.lo[0], domain.hi[0]), 0.0}};
    if (domain.dim == 2) p[1] = rng.uniform(domain.lo[1], domain.hi[1]);
    if (nb.contains(p)) {
      if (++guard > 10000 * (n_far + 1))
        throw ConfigError("sample_interior: far region has negligible area");
      continue;
    }
    pts.push_back(p);
    ++produced;
  }
  return pts;
}

/// Boundary points for one constraint. Coordinates on the locus are set
/// exactly (not approximated); single-point loci collapse to one point.
inline std::vector<Point> sample_boundary(const ConstraintSpec& c, const Box& domain, int n,
                                          std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Point> pts;
  switch (c.locus) {
    case Locus::single_point:
      pts.push_back(c.point);
      break;
    case Locus::bottom_edge: {
      for (int i = 0; i < n; ++i)
        pts.push_back(Point{{rng.uniform(domain.lo[0], domain.hi[0]), domain.lo[1]}});
      break;
    }
    case Locus::left_axis: {
      if (domain.dim == 1) throw ConfigError("left_axis locus needs a 2-D domain");
      for (int i = 0; i < n; ++i)
        pts.push_back(Point{{0.0, rng.uniform(domain.lo[1], domain.hi[1])}});
      break;
    }
    case Locus::outer_boundary: {
      if (domain.dim == 1) {
        // The two endpoints, alternating.
        for (int i = 0; i < n; ++i)
          pts.push_back(Point{{i % 2 == 0 ? domain.hi[0] : domain.lo[0], 0.0}});
        break;
      }
      // Perimeter pieces away from the wall: y1 = lo, y1 = hi, y2 = hi,
      // sampled proportionally to their lengths.
      const double len_side = domain.extent(1);
      const double len_top = domain.extent(0);
      const double total = 2.0 * len_side + len_top;
      for (int i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        if (u < len_side) {
          pts.push_back(Point{{domain.lo[0], rng.uniform(domain.lo[1], domain.hi[1])}});
        } else if (u < 2.0 * len_side) {
          pts.push_back(Point{{domain.hi[0], rng.uniform(domain.lo[1], domain.hi[1])}});
        } else {
          pts.push_back(Point{{rng.uniform(domain.lo[0], domain.hi[0]), domain.hi[1]}});
        }
      }
      break;
    }
  }
  return pts;
}

/// Samples everything a run needs. Sub-seeds are derived deterministically
/// from the run seed.
inline CollocationSet sample_collocation(const ProblemSpec& prob, int n_near, int n_far,
                                         double r_split, const std::vector<int>& boundary_counts,
                                         std::uint64_t seed) {
  CollocationSet cs;
  cs.seed = seed;
  cs.n_near = n_near;
  cs.n_far = n_far;
  const bool half_plane = prob.kind == ProblemKind::boussinesq;
  cs.interior =
      sample_interior(prob.collocation_box(), n_near, n_far, r_split, seed * 2654435761u + 1,
                      half_plane);
  cs.boundary.resize(prob.constraints.size());
  for (std::size_t j = 0; j < prob.constraints.size(); ++j) {
    const int nj = j < boundary_counts.size() ? boundary_counts[j] : 1;
    cs.boundary[j] =
        sample_boundary(prob.constraints[j], prob.domain, nj, seed * 2654435761u + 17 * (j + 2));
  }
  return cs;
}

}  // namespace ssb
