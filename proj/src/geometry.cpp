#include "bpp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace bpp {

namespace {

constexpr std::size_t kMaxCells = std::size_t(1) << 22;

struct UnionFind {
  std::vector<std::int32_t> parent;
  std::vector<std::int32_t> rank_;

  explicit UnionFind(std::size_t n) : parent(n), rank_(n, 0) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // Returns the new root, or -1 if already joined.
  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return -1;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }
};

struct SegRef {
  const double* p;
  const double* q;
};

inline SegRef segment_of(const CapsuleChain& c, std::uint32_t seg) {
  int n = c.path.count();
  int j = (n == 1) ? 0 : static_cast<int>(seg) + 1;
  return {c.path.point(static_cast<int>(seg)), c.path.point(j)};
}

inline void entry_bounds(const CapsuleChain& c, std::uint32_t seg, double pad,
                         double* lo, double* hi) {
  SegRef s = segment_of(c, seg);
  for (int j = 0; j < c.path.dim; ++j) {
    lo[j] = std::min(s.p[j], s.q[j]) - (c.radius + pad);
    hi[j] = std::max(s.p[j], s.q[j]) + (c.radius + pad);
  }
}

inline std::size_t cell_linear(const SpatialIndex& ix, const int* c) {
  std::size_t lin = 0;
  for (int j = 0; j < ix.dim; ++j) lin = lin * ix.cells[j] + c[j];
  return lin;
}

inline void cell_range(const SpatialIndex& ix, const double* lo, const double* hi,
                       int* clo, int* chi) {
  for (int j = 0; j < ix.dim; ++j) {
    int a = static_cast<int>(std::floor((lo[j] - ix.origin[j]) / ix.cell_size));
    int b = static_cast<int>(std::floor((hi[j] - ix.origin[j]) / ix.cell_size));
    clo[j] = std::clamp(a, 0, ix.cells[j] - 1);
    chi[j] = std::clamp(b, 0, ix.cells[j] - 1);
  }
}

template <class Fn>
void for_each_cell(const SpatialIndex& ix, const int* clo, const int* chi, Fn&& fn) {
  int c[kMaxDim];
  for (int j = 0; j < ix.dim; ++j) c[j] = clo[j];
  for (;;) {
    fn(cell_linear(ix, c));
    int j = ix.dim - 1;
    for (; j >= 0; --j) {
      if (++c[j] <= chi[j]) break;
      c[j] = clo[j];
    }
    if (j < 0) break;
  }
}

double capsule_pair_distance_gap(const std::vector<CapsuleChain>& chains,
                                 std::uint64_t ia, std::uint64_t ib) {
  const CapsuleChain& A = chains[SpatialIndex::chain_of(ia)];
  const CapsuleChain& B = chains[SpatialIndex::chain_of(ib)];
  SegRef sa = segment_of(A, SpatialIndex::segment_of(ia));
  SegRef sb = segment_of(B, SpatialIndex::segment_of(ib));
  double d = segment_segment_distance(sa.p, sa.q, sb.p, sb.q, A.path.dim);
  return d - (A.radius + B.radius);
}

// Runs the broad-phase pair scan, uniting chains whose candidate segments
// touch. Entries within a cell are grouped by chain (the builder inserts
// them in chain order), so already-merged chain pairs are skipped with a
// single find instead of per-segment work. on_union(new_root, old_root_a,
// old_root_b) -> bool; returning true stops the scan early.
template <class OnUnion>
void scan_touch_pairs(const std::vector<CapsuleChain>& chains,
                      const SpatialIndex& index, double tol, UnionFind& uf,
                      OnUnion&& on_union) {
  const std::size_t ncells = index.cell_count();
  std::vector<std::uint32_t> group;  // start offsets of per-chain runs
  for (std::size_t c = 0; c < ncells; ++c) {
    const std::uint32_t beg = index.cell_start[c], end = index.cell_start[c + 1];
    if (end - beg < 2) continue;
    group.clear();
    std::uint32_t prev_chain = ~0u;
    for (std::uint32_t i = beg; i < end; ++i) {
      std::uint32_t ch = SpatialIndex::chain_of(index.items[i]);
      if (ch != prev_chain) {
        group.push_back(i);
        prev_chain = ch;
      }
    }
    group.push_back(end);
    const std::size_t ngroups = group.size() - 1;
    for (std::size_t gi = 0; gi + 1 < ngroups; ++gi) {
      std::int32_t ca =
          static_cast<std::int32_t>(SpatialIndex::chain_of(index.items[group[gi]]));
      for (std::size_t gj = gi + 1; gj < ngroups; ++gj) {
        std::int32_t cb =
            static_cast<std::int32_t>(SpatialIndex::chain_of(index.items[group[gj]]));
        if (ca == cb) continue;
        std::int32_t ra = uf.find(ca), rb = uf.find(cb);
        if (ra == rb) continue;
        bool touched = false;
        for (std::uint32_t i = group[gi]; i < group[gi + 1] && !touched; ++i)
          for (std::uint32_t j = group[gj]; j < group[gj + 1] && !touched; ++j)
            touched =
                capsule_pair_distance_gap(chains, index.items[i], index.items[j]) <= tol;
        if (touched) {
          std::int32_t root = uf.unite(ra, rb);
          if (on_union(root, ra, rb)) return;
        }
      }
    }
  }
}

bool open_contains(const Box& b, const double* p) {
  for (int j = 0; j < b.dim; ++j)
    if (!(p[j] > b.lo[j] && p[j] < b.hi[j])) return false;
  return true;
}

}  // namespace

SpatialIndex build_index(const std::vector<CapsuleChain>& chains, double tol) {
  if (tol < 0.0) throw invalid_parameter("build_index: negative tolerance");
  SpatialIndex ix;
  ix.tol = tol;
  if (chains.empty()) return ix;
  ix.dim = chains[0].path.dim;
  const double pad = 0.5 * tol;

  std::size_t total_entries = 0;
  for (const auto& c : chains) total_entries += std::max(1, c.path.segments());

  // Global bounds from per-chain vertex extrema; sampled segment diagonals
  // set the cell size.
  double glo[kMaxDim], ghi[kMaxDim];
  std::fill(glo, glo + ix.dim, std::numeric_limits<double>::infinity());
  std::fill(ghi, ghi + ix.dim, -std::numeric_limits<double>::infinity());
  std::vector<double> diag_sample;
  diag_sample.reserve(4096);
  const std::size_t stride = std::max<std::size_t>(1, total_entries / 4096);
  double r_max = 0.0;
  std::size_t k = 0;
  for (const auto& c : chains) {
    r_max = std::max(r_max, c.radius);
    const double infl = c.radius + pad;
    for (int v = 0; v < c.path.count(); ++v) {
      const double* p = c.path.point(v);
      for (int j = 0; j < ix.dim; ++j) {
        glo[j] = std::min(glo[j], p[j] - infl);
        ghi[j] = std::max(ghi[j], p[j] + infl);
      }
    }
    std::uint32_t nseg = static_cast<std::uint32_t>(std::max(1, c.path.segments()));
    for (std::uint32_t s = 0; s < nseg; ++s, ++k) {
      if (k % stride) continue;
      double lo[kMaxDim], hi[kMaxDim];
      entry_bounds(c, s, pad, lo, hi);
      double d2 = 0.0;
      for (int j = 0; j < ix.dim; ++j) d2 += (hi[j] - lo[j]) * (hi[j] - lo[j]);
      diag_sample.push_back(std::sqrt(d2));
    }
  }

  std::nth_element(diag_sample.begin(), diag_sample.begin() + diag_sample.size() / 2,
                   diag_sample.end());
  double cell = diag_sample[diag_sample.size() / 2];
  if (r_max > 0.0) cell = std::clamp(cell, r_max, 4.0 * r_max);
  if (!(cell > 0.0)) cell = 1.0;

  // Fit the grid under the cell budget.
  for (;;) {
    std::size_t total = 1;
    bool ok = true;
    for (int j = 0; j < ix.dim; ++j) {
      std::size_t n = static_cast<std::size_t>((ghi[j] - glo[j]) / cell) + 1;
      ix.cells[j] = static_cast<int>(n);
      total *= n;
      if (total > kMaxCells) {
        ok = false;
        break;
      }
    }
    if (ok) break;
    cell *= 2.0;
  }
  ix.cell_size = cell;
  for (int j = 0; j < ix.dim; ++j) ix.origin[j] = glo[j];

  std::size_t ncells = 1;
  for (int j = 0; j < ix.dim; ++j) ncells *= ix.cells[j];

  // Cache every entry's integer cell range, then CSR-fill from the cache.
  const int dim = ix.dim;
  std::vector<int> ranges(total_entries * std::size_t(2 * dim));
  std::vector<std::uint32_t> counts(ncells + 1, 0);
  {
    std::size_t e = 0;
    for (const auto& c : chains) {
      std::uint32_t nseg = static_cast<std::uint32_t>(std::max(1, c.path.segments()));
      for (std::uint32_t s = 0; s < nseg; ++s, ++e) {
        double lo[kMaxDim], hi[kMaxDim];
        int clo[kMaxDim], chi[kMaxDim];
        entry_bounds(c, s, pad, lo, hi);
        cell_range(ix, lo, hi, clo, chi);
        int* r = &ranges[e * 2 * dim];
        for (int j = 0; j < dim; ++j) {
          r[2 * j] = clo[j];
          r[2 * j + 1] = chi[j];
        }
        for_each_cell(ix, clo, chi, [&](std::size_t cell_id) { ++counts[cell_id + 1]; });
      }
    }
  }
  for (std::size_t c = 0; c < ncells; ++c) counts[c + 1] += counts[c];
  ix.cell_start = counts;
  ix.items.resize(ix.cell_start[ncells]);
  std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
  {
    std::size_t e = 0;
    for (std::size_t ci = 0; ci < chains.size(); ++ci) {
      std::uint32_t nseg =
          static_cast<std::uint32_t>(std::max(1, chains[ci].path.segments()));
      for (std::uint32_t s = 0; s < nseg; ++s, ++e) {
        const int* r = &ranges[e * 2 * dim];
        int clo[kMaxDim], chi[kMaxDim];
        for (int j = 0; j < dim; ++j) {
          clo[j] = r[2 * j];
          chi[j] = r[2 * j + 1];
        }
        std::uint64_t item = SpatialIndex::encode(static_cast<std::uint32_t>(ci), s);
        for_each_cell(ix, clo, chi,
                      [&](std::size_t cell_id) { ix.items[cursor[cell_id]++] = item; });
      }
    }
  }
  return ix;
}

bool chains_touch(const CapsuleChain& c1, const CapsuleChain& c2, double tol) {
  if (tol < 0.0) throw invalid_parameter("chains_touch: negative tolerance");
  double reach = c1.radius + c2.radius + tol;
  int n1 = std::max(1, c1.path.segments());
  int n2 = std::max(1, c2.path.segments());

  // Grid-accelerate large pairs; brute force is fine for small ones.
  if (std::size_t(n1) * std::size_t(n2) > 4096) {
    std::vector<CapsuleChain> pair;
    pair.push_back(c1);
    pair.push_back(c2);
    pair[0].id = 0;
    pair[1].id = 1;
    SpatialIndex ix = build_index(pair, tol);
    UnionFind uf(2);
    bool hit = false;
    scan_touch_pairs(pair, ix, tol, uf, [&](std::int32_t, std::int32_t, std::int32_t) {
      hit = true;
      return true;
    });
    return hit;
  }

  for (int a = 0; a < n1; ++a) {
    SegRef sa = segment_of(c1, static_cast<std::uint32_t>(a));
    for (int b = 0; b < n2; ++b) {
      SegRef sb = segment_of(c2, static_cast<std::uint32_t>(b));
      if (segment_segment_distance(sa.p, sa.q, sb.p, sb.q, c1.path.dim) <= reach)
        return true;
    }
  }
  return false;
}

ClusterLabeling cluster(const std::vector<CapsuleChain>& chains,
                        const SpatialIndex& index, double tol) {
  if (tol > index.tol + 1e-15)
    throw invalid_parameter("cluster: index built for a smaller tolerance");
  ClusterLabeling out;
  if (chains.empty()) return out;
  UnionFind uf(chains.size());
  scan_touch_pairs(chains, index, tol, uf,
                   [](std::int32_t, std::int32_t, std::int32_t) { return false; });
  out.parent.resize(chains.size());
  out.cluster_id.resize(chains.size());
  for (std::size_t i = 0; i < chains.size(); ++i) {
    std::int32_t root = uf.find(static_cast<std::int32_t>(i));
    out.parent[i] = root;
    out.cluster_id[i] = root;
    const auto& c = chains[i];
    auto [it, fresh] = out.cluster_bbox.try_emplace(root);
    Box& bb = it->second;
    if (fresh) {
      bb.dim = c.path.dim;
      for (int j = 0; j < bb.dim; ++j) {
        bb.lo[j] = std::numeric_limits<double>::infinity();
        bb.hi[j] = -std::numeric_limits<double>::infinity();
      }
    }
    for (int p = 0; p < c.path.count(); ++p) {
      const double* x = c.path.point(p);
      for (int j = 0; j < bb.dim; ++j) {
        bb.lo[j] = std::min(bb.lo[j], x[j] - c.radius);
        bb.hi[j] = std::max(bb.hi[j], x[j] + c.radius);
      }
    }
  }
  return out;
}

bool face_contact(const CapsuleChain& chain, const Box& box, int axis, double at) {
  Box face = box;
  face.lo[axis] = at;
  face.hi[axis] = at;
  // Cheap reject: the chain must come within radius of the face plane.
  int n = std::max(1, chain.path.segments());
  for (int s = 0; s < n; ++s) {
    SegRef sr = segment_of(chain, static_cast<std::uint32_t>(s));
    double lo = std::min(sr.p[axis], sr.q[axis]) - chain.radius;
    double hi = std::max(sr.p[axis], sr.q[axis]) + chain.radius;
    if (lo > at || hi < at) continue;
    if (segment_box_distance(sr.p, sr.q, face) <= chain.radius) return true;
  }
  return false;
}

bool crossing(const ClusterLabeling& labeling,
              const std::vector<CapsuleChain>& chains, const Box& box) {
  if (!box.nondegenerate()) throw invalid_parameter("crossing: degenerate box");
  if (chains.empty()) return false;
  std::unordered_map<std::int32_t, unsigned> flags;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    unsigned f = 0;
    if (face_contact(chains[i], box, 0, box.lo[0])) f |= 1u;
    if (face_contact(chains[i], box, 0, box.hi[0])) f |= 2u;
    if (!f) continue;
    unsigned& agg = flags[labeling.cluster_id[i]];
    agg |= f;
    if (agg == 3u) return true;
  }
  return false;
}

bool crossing_indicator(const std::vector<CapsuleChain>& chains, const Box& box,
                        double tol) {
  if (!box.nondegenerate()) throw invalid_parameter("crossing_indicator: degenerate box");
  if (chains.empty()) return false;
  std::vector<unsigned char> flags(chains.size(), 0);
  for (std::size_t i = 0; i < chains.size(); ++i) {
    unsigned char f = 0;
    if (face_contact(chains[i], box, 0, box.lo[0])) f |= 1u;
    if (face_contact(chains[i], box, 0, box.hi[0])) f |= 2u;
    if (f == 3u) return true;
    flags[i] = f;
  }
  SpatialIndex ix = build_index(chains, tol);
  UnionFind uf(chains.size());
  bool spanning = false;
  scan_touch_pairs(chains, ix, tol, uf,
                   [&](std::int32_t root, std::int32_t ra, std::int32_t rb) {
                     unsigned char merged = flags[ra] | flags[rb];
                     flags[root] = merged;
                     if (merged == 3u) {
                       spanning = true;
                       return true;
                     }
                     return false;
                   });
  return spanning;
}

std::vector<CapsuleChain> clip_outside_box(const std::vector<CapsuleChain>& chains,
                                           const Box& inner) {
  std::vector<CapsuleChain> pieces;
  int next_id = 0;
  for (const auto& c : chains) {
    const int dim = c.path.dim;
    std::vector<double> cur;
    auto flush = [&]() {
      if (cur.size() >= std::size_t(2 * dim)) {
        CapsuleChain piece;
        piece.path.dim = dim;
        piece.path.step = c.path.step;
        piece.path.coords = cur;
        piece.radius = c.radius;
        piece.id = next_id++;
        pieces.push_back(std::move(piece));
      }
      cur.clear();
    };
    auto push_point = [&](const double* p) {
      cur.insert(cur.end(), p, p + dim);
    };
    auto push_lerp = [&](const double* p, const double* q, double s) {
      for (int j = 0; j < dim; ++j) cur.push_back(p[j] + s * (q[j] - p[j]));
    };

    if (c.path.count() == 1) {
      if (!open_contains(inner, c.path.point(0))) {
        CapsuleChain piece = c;
        piece.id = next_id++;
        pieces.push_back(std::move(piece));
      }
      continue;
    }

    for (int s = 0; s < c.path.segments(); ++s) {
      const double* p = c.path.point(s);
      const double* q = c.path.point(s + 1);
      // Open parameter interval along which the segment is strictly inside.
      double s0 = 0.0, s1 = 1.0;
      bool never_inside = false;
      for (int j = 0; j < dim && !never_inside; ++j) {
        double d = q[j] - p[j];
        if (d == 0.0) {
          if (p[j] <= inner.lo[j] || p[j] >= inner.hi[j]) never_inside = true;
          continue;
        }
        double ta = (inner.lo[j] - p[j]) / d;
        double tb = (inner.hi[j] - p[j]) / d;
        if (ta > tb) std::swap(ta, tb);
        s0 = std::max(s0, ta);
        s1 = std::min(s1, tb);
        if (s0 >= s1) never_inside = true;
      }
      if (never_inside) {
        if (cur.empty()) push_point(p);
        push_point(q);
        continue;
      }
      if (s0 > 0.0) {
        if (cur.empty()) push_point(p);
        push_lerp(p, q, s0);
      }
      flush();
      if (s1 < 1.0) {
        push_lerp(p, q, s1);
        push_point(q);
      }
    }
    flush();
  }
  return pieces;
}

}  // namespace bpp
