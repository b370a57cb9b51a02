#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "interval_set.hpp"
#include "rational.hpp"
#include "tower.hpp"

namespace towerforge {

// Ordered Bratteli diagram of a refining tower sequence. Level 0 is a single
// root; level k >= 1 carries one vertex per principal column of tower k plus
// a distinguished infinite vertex (the last index). Edges into a level-k
// vertex are the complete traversals of level-(k-1) columns by that column's
// fiber, ordered by traversal time; the infinite vertices form a chain of
// single edges carrying the unique fixed-point path.
struct BratteliEdge {
  std::size_t source = 0;  // vertex at the previous level
  std::size_t range = 0;   // vertex at this level
  long long order = 0;     // position among edges sharing the range

  bool operator==(const BratteliEdge&) const = default;
};

struct BratteliLevel {
  std::size_t column_count = 0;
  std::vector<BratteliEdge> edges;       // from the previous level into this one
  std::vector<long long> column_heights;  // per principal vertex
  std::vector<Rational> base_measures;    // per principal vertex

  std::size_t vertex_count() const { return column_count + 1; }
  std::size_t infinite_vertex() const { return column_count; }
};

struct BratteliDiagram {
  std::vector<BratteliLevel> levels;  // levels[0] sits directly above the root

  std::size_t level_count() const { return levels.size(); }

  // Edge ids into (level, vertex), sorted by order.
  std::vector<std::size_t> incoming(std::size_t level, std::size_t vertex) const {
    require(level < levels.size(), ErrorKind::kPrecondition, "level out of range");
    require(vertex < levels[level].vertex_count(), ErrorKind::kPrecondition,
            "vertex out of range");
    std::vector<std::size_t> ids;
    for (std::size_t e = 0; e < levels[level].edges.size(); ++e)
      if (levels[level].edges[e].range == vertex) ids.push_back(e);
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      return levels[level].edges[a].order < levels[level].edges[b].order;
    });
    return ids;
  }
};

// Structural audit: orders are 0..indegree-1 per vertex, sources exist,
// every vertex has an incoming edge, and the infinite chain is a single
// distinguished edge per level.
inline void validate_diagram(const BratteliDiagram& d) {
  require(!d.levels.empty(), ErrorKind::kPrecondition, "diagram has no levels");
  for (std::size_t k = 0; k < d.levels.size(); ++k) {
    const BratteliLevel& lv = d.levels[k];
    std::size_t prev_vertices = k == 0 ? 1 : d.levels[k - 1].vertex_count();
    require(lv.column_heights.size() == lv.column_count &&
                lv.base_measures.size() == lv.column_count,
            ErrorKind::kInconsistentTower, "level metadata shape mismatch");
    for (const BratteliEdge& e : lv.edges) {
      require(e.source < prev_vertices && e.range < lv.vertex_count(),
              ErrorKind::kInconsistentTower, "edge endpoint out of range");
    }
    for (std::size_t v = 0; v < lv.vertex_count(); ++v) {
      auto ids = d.incoming(k, v);
      require(!ids.empty(), ErrorKind::kInconsistentTower,
              "vertex without incoming edges at level " + std::to_string(k + 1));
      for (std::size_t i = 0; i < ids.size(); ++i)
        require(lv.edges[ids[i]].order == static_cast<long long>(i),
                ErrorKind::kInconsistentTower, "edge order is not total");
    }
    auto inf_in = d.incoming(k, lv.infinite_vertex());
    require(inf_in.size() == 1, ErrorKind::kInconsistentTower,
            "infinite vertex must carry exactly one incoming edge");
    std::size_t want = k == 0 ? 0 : d.levels[k - 1].infinite_vertex();
    require(lv.edges[inf_in[0]].source == want, ErrorKind::kInconsistentTower,
            "infinite chain broken at level " + std::to_string(k + 1));
  }
}

namespace detail {

struct CoarsePiece {
  Rational lo, hi;
  std::size_t column;
  long long level;
};

// Decomposes one fine column's fiber into complete traversals of the coarse
// tower's columns, in traversal order; infinite-level positions stand alone.
inline std::vector<std::size_t> fiber_traversals(const Column& fine, const StandardTower& coarse,
                                                 const IntervalSet& coarse_levels,
                                                 const std::vector<CoarsePiece>& index,
                                                 std::size_t infinite_vertex) {
  auto owner = [&](const Rational& x) -> const CoarsePiece* {
    auto it = std::upper_bound(index.begin(), index.end(), x,
                               [](const Rational& v, const CoarsePiece& p) { return v < p.lo; });
    if (it == index.begin()) return nullptr;
    --it;
    return x < it->hi ? &*it : nullptr;
  };

  std::vector<std::size_t> sources;
  long long j = 0;
  while (j < fine.height) {
    const IntervalSet& lev = fine.level_sets[static_cast<std::size_t>(j)];
    require(!lev.empty(), ErrorKind::kInconsistentTower, "empty level in a principal column");
    if (lev.is_disjoint_from(coarse_levels)) {
      sources.push_back(infinite_vertex);
      ++j;
      continue;
    }
    const CoarsePiece* p = owner(lev.pieces().front().lo);
    require(p != nullptr, ErrorKind::kNotRefining, "fine level straddles the coarse tower");
    require(p->level == 0, ErrorKind::kNotRefining, "fiber enters a coarse column above its base");
    const Column& col = coarse.principal_columns[p->column];
    require(j + col.height <= fine.height, ErrorKind::kNotRefining,
            "fiber tops out mid-traversal of a coarse column");
    for (long long s = 0; s < col.height; ++s)
      require(fine.level_sets[static_cast<std::size_t>(j + s)].is_subset_of(
                  col.level_sets[static_cast<std::size_t>(s)]),
              ErrorKind::kNotRefining, "traversal leaves its coarse column");
    sources.push_back(p->column);
    j += col.height;
  }
  return sources;
}

}  // namespace detail

// Encodes a refining sequence of standard towers as an ordered diagram.
// Path counts into each principal vertex then reproduce column heights, so
// path-count times base-measure equals the column's total mass exactly.
inline BratteliDiagram export_bratteli(const std::vector<StandardTower>& towers) {
  require(!towers.empty(), ErrorKind::kPrecondition, "need at least one tower");
  BratteliDiagram d;

  {
    const StandardTower& t1 = towers.front();
    require(!t1.degenerate(), ErrorKind::kPrecondition, "first tower has no columns");
    BratteliLevel lv;
    lv.column_count = t1.principal_columns.size();
    for (std::size_t c = 0; c < lv.column_count; ++c) {
      const Column& col = t1.principal_columns[c];
      lv.column_heights.push_back(col.height);
      lv.base_measures.push_back(col.base.measure());
      for (long long j = 0; j < col.height; ++j) lv.edges.push_back({0, c, j});
    }
    lv.edges.push_back({0, lv.infinite_vertex(), 0});
    d.levels.push_back(std::move(lv));
  }

  for (std::size_t k = 1; k < towers.size(); ++k) {
    const StandardTower& coarse = towers[k - 1];
    const StandardTower& fine = towers[k];
    require(!fine.degenerate(), ErrorKind::kPrecondition,
            "tower " + std::to_string(k + 1) + " has no columns");
    RefinesReport rep = refines(fine, coarse);
    require(rep.ok, ErrorKind::kNotRefining,
            "tower " + std::to_string(k + 1) + " does not refine tower " + std::to_string(k) +
                (rep.violations.empty() ? "" : ": " + rep.violations.front()));

    IntervalSet coarse_levels = coarse.principal_levels();
    std::vector<detail::CoarsePiece> index;
    for (std::size_t c = 0; c < coarse.principal_columns.size(); ++c)
      for (long long j = 0; j < coarse.principal_columns[c].height; ++j)
        for (const auto& p :
             coarse.principal_columns[c].level_sets[static_cast<std::size_t>(j)].pieces())
          index.push_back({p.lo, p.hi, c, j});
    std::sort(index.begin(), index.end(),
              [](const detail::CoarsePiece& a, const detail::CoarsePiece& b) { return a.lo < b.lo; });

    std::size_t coarse_inf = d.levels.back().infinite_vertex();
    BratteliLevel lv;
    lv.column_count = fine.principal_columns.size();
    for (std::size_t v = 0; v < lv.column_count; ++v) {
      const Column& col = fine.principal_columns[v];
      lv.column_heights.push_back(col.height);
      lv.base_measures.push_back(col.base.measure());
      auto sources = detail::fiber_traversals(col, coarse, coarse_levels, index, coarse_inf);
      for (std::size_t i = 0; i < sources.size(); ++i)
        lv.edges.push_back({sources[i], v, static_cast<long long>(i)});
    }
    lv.edges.push_back({coarse_inf, lv.infinite_vertex(), 0});
    d.levels.push_back(std::move(lv));
  }

  validate_diagram(d);
  return d;
}

// Root paths into each vertex, level by level; table[0] is the root itself.
inline std::vector<std::vector<BigInt>> path_count_table(const BratteliDiagram& d) {
  std::vector<std::vector<BigInt>> table;
  table.push_back({BigInt(1)});
  for (const BratteliLevel& lv : d.levels) {
    std::vector<BigInt> counts(lv.vertex_count(), BigInt(0));
    for (const BratteliEdge& e : lv.edges) counts[e.range] += table.back()[e.source];
    table.push_back(std::move(counts));
  }
  return table;
}

// A finite path from the root: edge_ids[k] indexes d.levels[k].edges.
struct BratteliPath {
  std::vector<std::size_t> edge_ids;

  bool operator==(const BratteliPath&) const = default;
};

inline void validate_path(const BratteliDiagram& d, const BratteliPath& p) {
  require(p.edge_ids.size() == d.level_count(), ErrorKind::kPrecondition,
          "path length must match the stored diagram depth");
  std::size_t at = 0;
  for (std::size_t k = 0; k < p.edge_ids.size(); ++k) {
    require(p.edge_ids[k] < d.levels[k].edges.size(), ErrorKind::kPrecondition,
            "edge id out of range");
    const BratteliEdge& e = d.levels[k].edges[p.edge_ids[k]];
    require(e.source == at, ErrorKind::kPrecondition, "path is not connected");
    at = e.range;
  }
}

inline std::size_t path_end_vertex(const BratteliDiagram& d, const BratteliPath& p) {
  validate_path(d, p);
  const BratteliEdge& e = d.levels.back().edges[p.edge_ids.back()];
  return e.range;
}

// The all-minimal path ending at (level, vertex), as edge ids for levels
// 0..level inclusive.
inline std::vector<std::size_t> minimal_prefix_into(const BratteliDiagram& d, std::size_t level,
                                                    std::size_t vertex) {
  std::vector<std::size_t> ids(level + 1);
  std::size_t v = vertex;
  for (std::size_t k = level + 1; k-- > 0;) {
    std::size_t e = d.incoming(k, v).front();
    ids[k] = e;
    v = d.levels[k].edges[e].source;
  }
  return ids;
}

inline BratteliPath minimal_path_into(const BratteliDiagram& d, std::size_t vertex) {
  require(d.level_count() >= 1, ErrorKind::kPrecondition, "diagram has no levels");
  BratteliPath p;
  p.edge_ids = minimal_prefix_into(d, d.level_count() - 1, vertex);
  return p;
}

inline bool edge_is_maximal(const BratteliDiagram& d, std::size_t level, std::size_t edge_id) {
  const BratteliEdge& e = d.levels[level].edges[edge_id];
  return e.order + 1 == static_cast<long long>(d.incoming(level, e.range).size());
}

inline bool path_is_maximal(const BratteliDiagram& d, const BratteliPath& p) {
  validate_path(d, p);
  for (std::size_t k = 0; k < p.edge_ids.size(); ++k)
    if (!edge_is_maximal(d, k, p.edge_ids[k])) return false;
  return true;
}

inline bool path_is_minimal(const BratteliDiagram& d, const BratteliPath& p) {
  validate_path(d, p);
  for (std::size_t k = 0; k < p.edge_ids.size(); ++k)
    if (d.levels[k].edges[p.edge_ids[k]].order != 0) return false;
  return true;
}

// Adic successor: increment the first non-maximal edge (scanning from the
// root), fill everything below with the minimal run into the new source.
// The end vertex never changes.
inline BratteliPath vershik_step(const BratteliDiagram& d, const BratteliPath& p) {
  validate_path(d, p);
  for (std::size_t k = 0; k < p.edge_ids.size(); ++k) {
    if (edge_is_maximal(d, k, p.edge_ids[k])) continue;
    const BratteliEdge& e = d.levels[k].edges[p.edge_ids[k]];
    std::size_t succ = d.incoming(k, e.range)[static_cast<std::size_t>(e.order) + 1];
    BratteliPath out = p;
    out.edge_ids[k] = succ;
    if (k > 0) {
      auto prefix = minimal_prefix_into(d, k - 1, d.levels[k].edges[succ].source);
      std::copy(prefix.begin(), prefix.end(), out.edge_ids.begin());
    }
    return out;
  }
  throw Error(ErrorKind::kMaximalPath, "path is maximal at the stored depth");
}

// Traversal time of the path inside its end column: the number of root paths
// into the same vertex that precede it in adic order.
inline BigInt path_position(const BratteliDiagram& d, const BratteliPath& p) {
  validate_path(d, p);
  auto table = path_count_table(d);
  BigInt pos = 0;
  for (std::size_t k = 0; k < p.edge_ids.size(); ++k) {
    const BratteliEdge& e = d.levels[k].edges[p.edge_ids[k]];
    for (std::size_t id : d.incoming(k, e.range)) {
      if (id == p.edge_ids[k]) break;
      pos += table[k][d.levels[k].edges[id].source];
    }
  }
  return pos;
}

// Every finite path of the stored depth, grouped by nothing in particular;
// intended for exhaustive desk-scale audits.
inline std::vector<BratteliPath> all_paths(const BratteliDiagram& d) {
  std::vector<BratteliPath> out;
  std::vector<std::size_t> stack;
  auto rec = [&](auto&& self, std::size_t k, std::size_t at) -> void {
    if (k == d.level_count()) {
      out.push_back(BratteliPath{stack});
      return;
    }
    for (std::size_t e = 0; e < d.levels[k].edges.size(); ++e) {
      if (d.levels[k].edges[e].source != at) continue;
      stack.push_back(e);
      self(self, k + 1, d.levels[k].edges[e].range);
      stack.pop_back();
    }
  };
  rec(rec, 0, 0);
  return out;
}

}  // namespace towerforge
