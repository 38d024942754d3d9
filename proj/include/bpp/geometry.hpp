#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "bpp/geom.hpp"

namespace bpp {

/// A discretized path thickened by a radius. A single-vertex chain with
/// radius rho is the ball B(x, rho).
struct CapsuleChain {
  Polyline path;
  double radius = 0.0;
  int id = 0;
};

/// Uniform-grid broad phase over (chain, segment) entries. Registration
/// inflates every segment's bounding box by radius + tol/2, so any two
/// capsules within tol of touching share at least one cell.
struct SpatialIndex {
  int dim = 0;
  double cell_size = 0.0;
  double tol = 0.0;  // contact tolerance the index was built for
  std::array<double, kMaxDim> origin{};
  std::array<int, kMaxDim> cells{};
  std::vector<std::uint32_t> cell_start;  // CSR offsets, cells-total + 1
  std::vector<std::uint64_t> items;       // chain << 20 | segment

  static std::uint64_t encode(std::uint32_t chain, std::uint32_t seg) {
    return (std::uint64_t(chain) << 20) | seg;
  }
  static std::uint32_t chain_of(std::uint64_t item) {
    return static_cast<std::uint32_t>(item >> 20);
  }
  static std::uint32_t segment_of(std::uint64_t item) {
    return static_cast<std::uint32_t>(item & 0xfffffULL);
  }
  std::size_t cell_count() const { return cell_start.empty() ? 0 : cell_start.size() - 1; }
};

/// Builds the broad-phase grid. tol must not be smaller than the contact
/// tolerance later passed to cluster()/crossing helpers.
SpatialIndex build_index(const std::vector<CapsuleChain>& chains, double tol);

/// True iff the capsules touch: min over segment pairs of the segment
/// distance is <= radius(c1) + radius(c2) + tol. The boundary case counts
/// as touching.
bool chains_touch(const CapsuleChain& c1, const CapsuleChain& c2, double tol);

/// Union-find partition of chains into touch-connected clusters.
struct ClusterLabeling {
  std::vector<std::int32_t> parent;      // final forest, roots point at themselves
  std::vector<std::int32_t> cluster_id;  // canonical root per chain
  std::unordered_map<std::int32_t, Box> cluster_bbox;  // per root, radius-inflated

  std::size_t cluster_count() const { return cluster_bbox.size(); }
};

/// Exact connected components of the touch graph (same partition as
/// breadth-first search over chains_touch).
ClusterLabeling cluster(const std::vector<CapsuleChain>& chains,
                        const SpatialIndex& index, double tol);

/// Crossing event for the box [0,N1]x...x[0,Nd]: some cluster has capsule
/// material inside the box touching the N1-face at coordinate 0 and the
/// N1-face at coordinate N1. Face contact is evaluated against the closed
/// face rectangle, so only material inside the box counts; connectivity is
/// that of the given labeling.
bool crossing(const ClusterLabeling& labeling,
              const std::vector<CapsuleChain>& chains, const Box& box);

/// One-pass crossing indicator: same decision as cluster() + crossing(),
/// with early exit once a spanning cluster appears.
bool crossing_indicator(const std::vector<CapsuleChain>& chains, const Box& box,
                        double tol);

/// True iff some capsule material of the chain, restricted to the closed
/// box, touches the face {x_axis = at} of that box.
bool face_contact(const CapsuleChain& chain, const Box& box, int axis,
                  double at);

/// Centerline restriction of the chains to the complement of the open box:
/// each maximal sub-polyline outside the box becomes its own chain (ids are
/// fresh and dense). Single-vertex chains survive iff their vertex is not
/// inside the open box.
std::vector<CapsuleChain> clip_outside_box(const std::vector<CapsuleChain>& chains,
                                           const Box& inner);

}  // namespace bpp
