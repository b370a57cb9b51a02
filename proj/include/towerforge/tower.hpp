#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/errors.hpp"
#include "towerforge/interval_set.hpp"
#include "towerforge/partition.hpp"
#include "towerforge/rankone.hpp"

namespace towerforge {

// One column of a Kakutani-Rohlin tower: level j is the exact T^j-image of
// the base. level_names are optional per-level annotations (atom indices as
// strings); empty when unset.
struct Column {
  IntervalSet base;
  long long height = 0;
  std::vector<IntervalSet> level_sets;
  std::vector<std::string> level_names;

  Rational mass() const { return base.measure() * height; }
};

// Principal columns plus one implicit infinite level: the complement of all
// principal level sets. The infinite level counts as a height-one column of
// B(t), so fibers meet B(t) at least every max_height steps.
struct StandardTower {
  std::vector<Column> principal_columns;

  bool degenerate() const { return principal_columns.empty(); }

  long long max_height() const {
    long long m = 1;  // the infinite level is a column of height one
    for (const auto& c : principal_columns) m = std::max(m, c.height);
    return m;
  }

  Rational principal_mass() const {
    Rational total = 0;
    for (const auto& c : principal_columns) total += c.mass();
    return total;
  }

  IntervalSet principal_levels() const {
    std::vector<IntervalSet> all;
    for (const auto& c : principal_columns)
      for (const auto& l : c.level_sets) all.push_back(l);
    return union_all(all);
  }

  IntervalSet bases() const {
    std::vector<IntervalSet> all;
    for (const auto& c : principal_columns) all.push_back(c.base);
    return union_all(all);
  }
};

inline std::string column_key(const Column& c) {
  std::string key;
  for (std::size_t j = 0; j < c.level_names.size(); ++j) {
    if (j) key += ',';
    key += c.level_names[j];
  }
  return key;
}

// Full structural audit: level counts, equal measures, global disjointness,
// and the T-image chain through the stage column. Test/API-boundary tool;
// surgery operations rely on cheaper local checks.
inline void validate_tower(RankOneEngine& eng, const StandardTower& t, long depth) {
  Rational level_sum = 0;
  std::vector<IntervalSet> all;
  for (const auto& c : t.principal_columns) {
    require(c.height >= 1, ErrorKind::kInconsistentTower, "column height must be >= 1");
    require(c.level_sets.size() == static_cast<std::size_t>(c.height),
            ErrorKind::kInconsistentTower, "level_sets size disagrees with height");
    require(c.level_names.empty() || c.level_names.size() == c.level_sets.size(),
            ErrorKind::kInconsistentTower, "level_names size disagrees with height");
    for (long long j = 0; j < c.height; ++j) {
      const auto& l = c.level_sets[static_cast<std::size_t>(j)];
      require(l.measure() == c.base.measure(), ErrorKind::kInconsistentTower,
              "level measure differs from base measure");
      require(l == eng.shift_set(c.base, j, depth, true).moved, ErrorKind::kInconsistentTower,
              "level is not the exact T^j image of the base");
      level_sum += l.measure();
      all.push_back(l);
    }
  }
  require(union_all(all).measure() == level_sum, ErrorKind::kInconsistentTower,
          "principal levels overlap");
}

struct KStandardReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// K-standard: K is covered by principal levels, every principal level lies
// inside K or misses it, and every principal column visits K.
inline KStandardReport is_K_standard(const StandardTower& t, const IntervalSet& K) {
  KStandardReport rep;
  if (!K.set_diff(t.principal_levels()).empty()) {
    rep.ok = false;
    rep.violations.push_back("K is not covered by the principal levels");
  }
  for (std::size_t i = 0; i < t.principal_columns.size(); ++i) {
    const Column& c = t.principal_columns[i];
    bool hits_K = false;
    for (long long j = 0; j < c.height; ++j) {
      const auto& l = c.level_sets[static_cast<std::size_t>(j)];
      if (l.is_subset_of(K))
        hits_K = true;
      else if (!l.is_disjoint_from(K)) {
        rep.ok = false;
        rep.violations.push_back("column " + std::to_string(i) + " level " + std::to_string(j) +
                                 " straddles K");
      }
    }
    if (!hits_K) {
      rep.ok = false;
      rep.violations.push_back("column " + std::to_string(i) + " has no level inside K");
    }
  }
  return rep;
}

// The single-column tower over the deepest base available: levels are the
// stage levels themselves. This is the canonical "base C with h disjoint
// iterates" that the constructions start from.
inline StandardTower stage_column_tower(RankOneEngine& eng, long depth) {
  const StageTower& st = eng.stage(depth);
  Column c;
  c.base = st.level_set(0);
  c.height = st.height();
  c.level_sets.reserve(static_cast<std::size_t>(st.height()));
  for (long long j = 0; j < st.height(); ++j) c.level_sets.push_back(st.level_set(j));
  StandardTower t;
  t.principal_columns.push_back(std::move(c));
  return t;
}

// Splits every column into subcolumns of constant fiber α-name; level_names
// carry the name symbols. Empty subcolumns are dropped; subcolumns of one
// parent are emitted in lexicographic name order.
inline StandardTower refine_according_to(RankOneEngine& eng, const StandardTower& t,
                                         const Partition& alpha, long depth) {
  // Stage-level buckets of the finite atoms, so a level only ever looks at
  // the atoms that can actually meet it.
  std::map<long long, std::vector<std::pair<int, IntervalSet>>> atom_frags;
  for (int a = 2; a <= alpha.alphabet_size(); ++a)
    for (const auto& lp : eng.split_by_levels(alpha.atom(a), depth))
      atom_frags[lp.level].push_back({a, IntervalSet(lp.piece.lo, lp.piece.hi)});

  StandardTower out;
  for (const auto& col : t.principal_columns) {
    struct Cell {
      std::vector<int> symbols;
      IntervalSet set;  // subset of the base
    };
    std::vector<Cell> cells{{{}, col.base}};
    for (long long j = 0; j < col.height; ++j) {
      const IntervalSet& level = col.level_sets[static_cast<std::size_t>(j)];
      std::map<int, std::vector<IntervalSet>> pulled;
      for (const auto& lp : eng.split_by_levels(level, depth)) {
        auto it = atom_frags.find(lp.level);
        if (it == atom_frags.end()) continue;
        IntervalSet piece(lp.piece.lo, lp.piece.hi);
        for (const auto& [a, frag] : it->second) {
          IntervalSet hit = piece.set_intersect(frag);
          if (!hit.empty()) pulled[a].push_back(eng.shift_set(hit, -j, depth, true).moved);
        }
      }
      std::vector<Cell> next;
      for (auto& c : cells) {
        IntervalSet rest = c.set;
        for (auto& [a, parts] : pulled) {
          IntervalSet hit = c.set.set_intersect(union_all(parts));
          if (hit.empty()) continue;
          Cell nc{c.symbols, std::move(hit)};
          nc.symbols.push_back(a);
          rest = rest.set_diff(nc.set);
          next.push_back(std::move(nc));
        }
        if (!rest.empty()) {
          Cell nc{std::move(c.symbols), std::move(rest)};
          nc.symbols.push_back(1);
          next.push_back(std::move(nc));
        }
      }
      cells = std::move(next);
    }
    std::sort(cells.begin(), cells.end(),
              [](const Cell& x, const Cell& y) { return x.symbols < y.symbols; });

    Rational split_mass = 0;
    for (auto& c : cells) {
      Column nc;
      nc.base = c.set;
      nc.height = col.height;
      nc.level_sets.reserve(static_cast<std::size_t>(col.height));
      for (long long j = 0; j < col.height; ++j)
        nc.level_sets.push_back(eng.shift_set(c.set, j, depth, true).moved);
      for (int s : c.symbols) nc.level_names.push_back(std::to_string(s));
      split_mass += c.set.measure();
      out.principal_columns.push_back(std::move(nc));
    }
    // Pullbacks land inside the base only when the levels really are stage
    // shifts of it; a shortfall or overshoot means the tower was inconsistent.
    require(split_mass == col.base.measure(), ErrorKind::kInconsistentTower,
            "column levels are not stage-aligned images of the base");
  }
  return out;
}

// h = aN + b(N+1) with a,b >= 0 and a maximal (equivalently b minimal).
inline std::optional<std::pair<long long, long long>> try_frobenius(long long h, long long N) {
  if (h < N) return std::nullopt;
  long long b = h % N;
  long long a = h / N - b;
  if (a < 0) return std::nullopt;
  return std::make_pair(a, b);
}

inline std::pair<long long, long long> frobenius_decompose(long long h, long long N) {
  require(N >= 1, ErrorKind::kPrecondition, "block height must be >= 1");
  require(h >= N, ErrorKind::kPrecondition, "height must be >= N");
  auto r = try_frobenius(h, N);
  if (!r)
    fail(ErrorKind::kNotRepresentable,
         std::to_string(h) + " is not a nonnegative combination of " + std::to_string(N) +
             " and " + std::to_string(N + 1));
  return *r;
}

// Cuts a column into consecutive blocks with the given heights, bottom first.
inline std::vector<Column> cut_column(const Column& col, const std::vector<long long>& heights) {
  long long total = 0;
  for (long long ht : heights) total += ht;
  require(total <= col.height, ErrorKind::kPrecondition, "block heights exceed column height");
  std::vector<Column> out;
  long long at = 0;
  for (long long ht : heights) {
    Column b;
    b.base = col.level_sets[static_cast<std::size_t>(at)];
    b.height = ht;
    for (long long j = 0; j < ht; ++j) {
      b.level_sets.push_back(col.level_sets[static_cast<std::size_t>(at + j)]);
      if (!col.level_names.empty())
        b.level_names.push_back(col.level_names[static_cast<std::size_t>(at + j)]);
    }
    out.push_back(std::move(b));
    at += ht;
  }
  return out;
}

// Unites columns sharing a key: bases and level sets unioned level-wise.
// Default key is the level-name string. Keyless columns stay separate.
inline StandardTower unite_columns_by_name(const StandardTower& t,
                                           const std::vector<std::string>& keys) {
  require(keys.size() == t.principal_columns.size(), ErrorKind::kPrecondition,
          "one key per column required");
  StandardTower out;
  std::map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < t.principal_columns.size(); ++i) {
    const Column& c = t.principal_columns[i];
    std::string key = keys[i].empty() ? "\x01unkeyed:" + std::to_string(i) : keys[i];
    auto it = slot.find(key);
    if (it == slot.end()) {
      slot[key] = out.principal_columns.size();
      out.principal_columns.push_back(c);
      continue;
    }
    Column& dst = out.principal_columns[it->second];
    require(dst.height == c.height, ErrorKind::kHeightMismatch,
            "same key on columns of heights " + std::to_string(dst.height) + " and " +
                std::to_string(c.height));
    dst.base = dst.base.set_union(c.base);
    for (long long j = 0; j < c.height; ++j)
      dst.level_sets[static_cast<std::size_t>(j)] =
          dst.level_sets[static_cast<std::size_t>(j)].set_union(
              c.level_sets[static_cast<std::size_t>(j)]);
  }
  return out;
}

inline StandardTower unite_columns_by_name(const StandardTower& t) {
  std::vector<std::string> keys;
  keys.reserve(t.principal_columns.size());
  for (const auto& c : t.principal_columns) keys.push_back(column_key(c));
  return unite_columns_by_name(t, keys);
}

// Absorbs the victim columns into the implicit infinite level.
inline StandardTower unite_into_infinite_level(const StandardTower& t,
                                               const std::vector<std::size_t>& victims) {
  StandardTower out;
  std::vector<bool> drop(t.principal_columns.size(), false);
  for (std::size_t v : victims) {
    require(v < t.principal_columns.size(), ErrorKind::kPrecondition,
            "victim index out of range");
    drop[v] = true;
  }
  for (std::size_t i = 0; i < t.principal_columns.size(); ++i)
    if (!drop[i]) out.principal_columns.push_back(t.principal_columns[i]);
  return out;
}

// Builds a K-standard tower with all principal heights N or N+1: take the
// stage column, refine according to {K, complement}, split each column into
// a blocks of N under b blocks of N+1, unite same-name blocks, and push the
// K-free blocks into the infinite level.
inline StandardTower build_K_standard(RankOneEngine& eng, const IntervalSet& K, long long N,
                                      long depth) {
  require(!K.empty(), ErrorKind::kPrecondition, "K must have positive measure");
  require(N >= 1, ErrorKind::kPrecondition, "N must be >= 1");
  const StageTower& st = eng.stage(depth);
  require(K.is_subset_of(st.used_region()), ErrorKind::kPrecondition,
          "K leaves the used region at this depth");

  StandardTower t = refine_according_to(eng, stage_column_tower(eng, depth), Partition({K}), depth);

  StandardTower blocks;
  for (const auto& col : t.principal_columns) {
    auto [a, b] = frobenius_decompose(col.height, N);
    std::vector<long long> heights(static_cast<std::size_t>(a), N);
    heights.insert(heights.end(), static_cast<std::size_t>(b), N + 1);
    for (auto& blk : cut_column(col, heights)) blocks.principal_columns.push_back(std::move(blk));
  }

  StandardTower united = unite_columns_by_name(blocks);

  std::vector<std::size_t> victims;
  for (std::size_t i = 0; i < united.principal_columns.size(); ++i) {
    bool all_out = true;
    for (const auto& name : united.principal_columns[i].level_names)
      if (name != "1") all_out = false;
    if (all_out) victims.push_back(i);
  }
  return unite_into_infinite_level(united, victims);
}

// The levels of a tower as a partition: one finite atom per principal level,
// ordered by (column, level). Used to refine other towers according to t.
struct StrataInfo {
  Partition partition;
  // atom index - 2  ->  (column, level) in t
  std::vector<std::pair<std::size_t, long long>> atom_source;
};

inline StrataInfo stratum_partition(const StandardTower& t) {
  StrataInfo out;
  std::vector<IntervalSet> atoms;
  for (std::size_t c = 0; c < t.principal_columns.size(); ++c)
    for (long long j = 0; j < t.principal_columns[c].height; ++j) {
      atoms.push_back(t.principal_columns[c].level_sets[static_cast<std::size_t>(j)]);
      out.atom_source.push_back({c, j});
    }
  out.partition = Partition(std::move(atoms));
  return out;
}

struct RefinesReport {
  bool ok = true;
  std::vector<std::string> violations;
};

// t2 refines t1: every base of t2 sits inside B(t1) (a base of t1 or the
// infinite level), and every principal level of t2 sits inside a principal
// level of t1 or inside its infinite level.
inline RefinesReport refines(const StandardTower& t2, const StandardTower& t1) {
  RefinesReport rep;
  IntervalSet t1_levels = t1.principal_levels();
  IntervalSet t1_bases = t1.bases();

  // Flattened index of t1's (disjoint) level pieces: the candidate container
  // of any set is the level owning the piece its left endpoint falls in.
  struct PieceRef {
    Rational lo, hi;
    std::size_t column;
    long long level;
  };
  std::vector<PieceRef> index;
  for (std::size_t c = 0; c < t1.principal_columns.size(); ++c)
    for (long long j = 0; j < t1.principal_columns[c].height; ++j)
      for (const auto& p : t1.principal_columns[c].level_sets[static_cast<std::size_t>(j)].pieces())
        index.push_back({p.lo, p.hi, c, j});
  std::sort(index.begin(), index.end(),
            [](const PieceRef& a, const PieceRef& b) { return a.lo < b.lo; });
  auto owner = [&](const Rational& x) -> const PieceRef* {
    auto it = std::upper_bound(index.begin(), index.end(), x,
                               [](const Rational& v, const PieceRef& p) { return v < p.lo; });
    if (it == index.begin()) return nullptr;
    --it;
    return x < it->hi ? &*it : nullptr;
  };

  for (std::size_t i = 0; i < t2.principal_columns.size(); ++i) {
    const Column& c = t2.principal_columns[i];
    {
      // base ⊆ B(t1): the part inside t1's principal levels must lie in a
      // base; the rest is automatically in the infinite level.
      IntervalSet inside = c.base.set_intersect(t1_levels);
      if (!inside.is_subset_of(t1_bases)) {
        rep.ok = false;
        rep.violations.push_back("base of column " + std::to_string(i) + " leaves B(t1)");
      }
    }
    for (long long j = 0; j < c.height; ++j) {
      const IntervalSet& l = c.level_sets[static_cast<std::size_t>(j)];
      if (l.is_disjoint_from(t1_levels)) continue;  // inside the infinite level
      const PieceRef* cand = l.empty() ? nullptr : owner(l.pieces().front().lo);
      bool contained =
          cand && l.is_subset_of(
                      t1.principal_columns[cand->column].level_sets[static_cast<std::size_t>(
                          cand->level)]);
      if (!contained) {
        rep.ok = false;
        rep.violations.push_back("level " + std::to_string(j) + " of column " +
                                 std::to_string(i) + " straddles t1");
      }
    }
  }
  return rep;
}

// Builds a K-standard tower refining t1 with all principal heights in
// [n, n+4N], N the largest column height of t1. The stage column is refined
// according to t1's levels, cut into blocks of n+2N and n+2N+1 levels below a
// K-free suffix, block bottoms are moved to the nearest B(t1) level
// (index distance, ties downward), blocks are united by height and t1-name,
// and K-free columns go to the infinite level.
inline StandardTower refine_K_standard(RankOneEngine& eng, const StandardTower& t1,
                                       const IntervalSet& K, long long n, long depth) {
  {
    KStandardReport pre = is_K_standard(t1, K);
    require(pre.ok, ErrorKind::kPrecondition, "refine_K_standard needs a K-standard input");
  }
  const long long N = t1.max_height();
  const long long L = n + 2 * N;
  const StageTower& st = eng.stage(depth);
  const long long h = st.height();

  StrataInfo strata = stratum_partition(t1);
  // per finite atom: is it a base level of t1, and does it sit inside K
  std::vector<bool> atom_is_base(strata.atom_source.size());
  std::vector<bool> atom_in_K(strata.atom_source.size());
  for (std::size_t a = 0; a < strata.atom_source.size(); ++a) {
    auto [c, j] = strata.atom_source[a];
    atom_is_base[a] = (j == 0);
    atom_in_K[a] = t1.principal_columns[c].level_sets[static_cast<std::size_t>(j)].is_subset_of(K);
  }

  // Largest cut position H <= h that is a nonnegative combination of L and
  // L+1 and leaves a K-free suffix [H, h).
  long long topK = 0;
  for (const auto& lp : eng.split_by_levels(K, depth)) topK = std::max(topK, lp.level);
  long long H = -1;
  std::vector<long long> block_heights;
  for (long long cand = h; cand >= std::max(topK + 1, L); --cand) {
    if (auto ab = try_frobenius(cand, L)) {
      H = cand;
      block_heights.assign(static_cast<std::size_t>(ab->first), L);
      block_heights.insert(block_heights.end(), static_cast<std::size_t>(ab->second), L + 1);
      break;
    }
  }
  if (H < 0)
    throw NeedsDeeperStage("no cut position with a K-free suffix is a combination of " +
                               std::to_string(L) + " and " + std::to_string(L + 1) +
                               " at depth " + std::to_string(depth),
                           L);

  // Stage column refined according to t1's levels: every subcolumn has a
  // constant t1-pattern, so B(t1) membership is a per-index flag.
  StandardTower sub = refine_according_to(eng, stage_column_tower(eng, depth), strata.partition,
                                          depth);

  StandardTower blocks;
  for (const auto& col : sub.principal_columns) {
    std::vector<bool> in_B(static_cast<std::size_t>(col.height));
    for (long long j = 0; j < col.height; ++j) {
      int s = std::stoi(col.level_names[static_cast<std::size_t>(j)]);
      in_B[static_cast<std::size_t>(j)] =
          (s == 1) || atom_is_base[static_cast<std::size_t>(s - 2)];
    }
    auto nearest_in_B = [&](long long g) {
      for (long long d = 0;; ++d) {
        if (g - d >= 1 && in_B[static_cast<std::size_t>(g - d)]) return g - d;  // ties downward
        if (g + d < H && in_B[static_cast<std::size_t>(g + d)]) return g + d;
        require(d <= col.height, ErrorKind::kInconsistentTower, "no B(t1) level in range");
      }
    };
    std::vector<long long> bounds{0};
    long long at = 0;
    for (std::size_t bi = 0; bi + 1 < block_heights.size(); ++bi) {
      at += block_heights[bi];
      bounds.push_back(nearest_in_B(at));
    }
    bounds.push_back(H);
    std::vector<long long> heights;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      require(bounds[i] < bounds[i + 1], ErrorKind::kInconsistentTower,
              "block boundaries collapsed");
      heights.push_back(bounds[i + 1] - bounds[i]);
    }
    for (auto& blk : cut_column(col, heights)) blocks.principal_columns.push_back(std::move(blk));
  }

  // Uniting by (height, t1-pattern) is the proof's "unite blocks of the same
  // height, then refine according to t1" collapsed into one grouping.
  std::vector<std::string> keys;
  for (const auto& c : blocks.principal_columns)
    keys.push_back(std::to_string(c.height) + "|" + column_key(c));
  StandardTower united = unite_columns_by_name(blocks, keys);

  std::vector<std::size_t> victims;
  for (std::size_t i = 0; i < united.principal_columns.size(); ++i) {
    bool has_K = false;
    for (const auto& name : united.principal_columns[i].level_names) {
      int s = std::stoi(name);
      if (s != 1 && atom_in_K[static_cast<std::size_t>(s - 2)]) has_K = true;
    }
    if (!has_K) victims.push_back(i);
  }
  return unite_into_infinite_level(united, victims);
}

// Materializes a return-time decomposition as a tower (levels = exact
// images of each base through the stage column).
inline StandardTower tower_from_return_times(RankOneEngine& eng,
                                             const RankOneEngine::ReturnTimeTower& rtt,
                                             long depth) {
  StandardTower t;
  for (const auto& col : rtt.columns) {
    Column c;
    c.base = col.base;
    c.height = col.height;
    for (long long j = 0; j < col.height; ++j)
      c.level_sets.push_back(eng.shift_set(col.base, j, depth, true).moved);
    t.principal_columns.push_back(std::move(c));
  }
  return t;
}

}  // namespace towerforge
