#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/errors.hpp"
#include "towerforge/interval_set.hpp"
#include "towerforge/rational.hpp"

namespace towerforge {

// One cutting-and-stacking transition: slice the current column into `cuts`
// equal-width subcolumns, put spacers[i] fresh levels on top of subcolumn i,
// stack left to right.
struct StageDescriptor {
  long long cuts = 2;
  std::vector<long long> spacers;
};

struct RankOneSpec {
  Interval base;                          // stage-1 base, a single interval
  std::vector<StageDescriptor> stages;    // stages[k-1] builds stage k+1 from stage k

  void validate() const {
    require(!base.empty(), ErrorKind::kPrecondition, "empty base interval");
    require(base.lo >= 0, ErrorKind::kPrecondition, "base must sit in [0, inf)");
    for (const auto& st : stages) {
      require(st.cuts >= 1, ErrorKind::kPrecondition, "cuts must be >= 1");
      require(st.spacers.size() == static_cast<std::size_t>(st.cuts),
              ErrorKind::kPrecondition, "spacers list must have one entry per cut");
      for (long long s : st.spacers)
        require(s >= 0, ErrorKind::kPrecondition, "negative spacer count");
    }
  }

  // Largest stage this spec can build.
  long max_stage() const { return static_cast<long>(stages.size()) + 1; }
};

// Stage-k tower: h levels of equal width w; level j is the single interval
// [lefts[j], lefts[j]+w). Levels tile the used region exactly and T moves
// level j onto level j+1 by translation (j < h-1). T on the top level is
// undetermined at this stage.
class StageTower {
 public:
  StageTower(long depth, Rational width, std::vector<Rational> lefts, Rational used_hi,
             Rational base_lo)
      : depth_(depth),
        width_(std::move(width)),
        lefts_(std::move(lefts)),
        used_hi_(std::move(used_hi)),
        base_lo_(std::move(base_lo)) {
    order_.resize(lefts_.size());
    std::iota(order_.begin(), order_.end(), 0L);
    std::sort(order_.begin(), order_.end(),
              [&](long a, long b) { return lefts_[a] < lefts_[b]; });
  }

  long depth() const { return depth_; }
  long long height() const { return static_cast<long long>(lefts_.size()); }
  const Rational& width() const { return width_; }
  const Rational& level_left(long long j) const { return lefts_[static_cast<std::size_t>(j)]; }
  IntervalSet level_set(long long j) const {
    const Rational& l = level_left(j);
    return IntervalSet(l, l + width_);
  }
  IntervalSet used_region() const { return IntervalSet(base_lo_, used_hi_); }
  Rational used_measure() const { return used_hi_ - base_lo_; }

  bool in_used_region(const Rational& x) const { return x >= base_lo_ && x < used_hi_; }

  // Level index and offset of a point. Levels tile the used region, so any
  // in-region point resolves to exactly one level.
  std::pair<long long, Rational> locate(const Rational& x) const {
    require(in_used_region(x), ErrorKind::kPrecondition,
            "point " + towerforge::to_string(x) + " outside used region at depth " +
                std::to_string(depth_));
    auto it = std::upper_bound(order_.begin(), order_.end(), x,
                               [&](const Rational& v, long j) { return v < lefts_[j]; });
    --it;
    long long j = *it;
    return {j, x - lefts_[static_cast<std::size_t>(j)]};
  }

 private:
  long depth_;
  Rational width_;
  std::vector<Rational> lefts_;
  Rational used_hi_;
  Rational base_lo_;
  std::vector<long> order_;  // level ids sorted by left endpoint
};

// (level, piece) fragments of an interval set, level-aligned.
struct LevelPiece {
  long long level;
  Interval piece;
};

// Per-level membership of a set: kOut / kIn are exact containments, kPartial
// means the level straddles the set boundary.
enum class LevelFlag : std::int8_t { kOut = 0, kIn = 1, kPartial = 2 };

struct LevelClasses {
  std::vector<LevelFlag> flags;
  bool aligned = true;  // true iff no level is kPartial

  bool in(long long j) const { return flags[static_cast<std::size_t>(j)] == LevelFlag::kIn; }
};

inline long default_max_depth() {
  if (const char* env = std::getenv("TOWERFORGE_MAX_DEPTH")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return v;
  }
  return 10;
}

// Builds and caches stage towers for a spec, and answers all orbit questions
// at a chosen depth. Everything is exact; anything falling off the stage
// column raises NeedsDeeperStage rather than guessing.
class RankOneEngine {
 public:
  explicit RankOneEngine(RankOneSpec spec, long max_depth = default_max_depth())
      : spec_(std::move(spec)), max_depth_(max_depth) {
    spec_.validate();
  }

  const RankOneSpec& spec() const { return spec_; }
  long max_depth() const { return max_depth_; }

  const StageTower& stage(long depth) {
    require(depth >= 1, ErrorKind::kPrecondition, "stage depth must be >= 1");
    if (depth > max_depth_)
      fail(ErrorKind::kDepthExceeded,
           "stage " + std::to_string(depth) + " exceeds depth cap " + std::to_string(max_depth_));
    require(depth <= spec_.max_stage(), ErrorKind::kPrecondition,
            "spec has no stage descriptor for stage " + std::to_string(depth));
    while (static_cast<long>(stages_.size()) < depth) build_next_stage();
    return *stages_[static_cast<std::size_t>(depth - 1)];
  }

  // T(y) at stage `depth`: one level up. Top level -> NeedsDeeperStage.
  Rational apply_T(const Rational& y, long depth) {
    const StageTower& t = stage(depth);
    auto [j, off] = t.locate(y);
    if (j + 1 >= t.height())
      throw NeedsDeeperStage("T undefined on top level of stage " + std::to_string(depth), 1);
    return t.level_left(j + 1) + off;
  }

  Rational apply_T_inverse(const Rational& y, long depth) {
    const StageTower& t = stage(depth);
    auto [j, off] = t.locate(y);
    if (j == 0)
      throw NeedsDeeperStage("T inverse undefined on base level of stage " + std::to_string(depth),
                             -1);
    return t.level_left(j - 1) + off;
  }

  // T^i(y) for i in [m, n], inclusive. Fails with the first orbit index that
  // leaves the stage column.
  std::vector<Rational> orbit_segment(const Rational& y, long long m, long long n, long depth) {
    require(m <= n, ErrorKind::kPrecondition, "orbit segment needs m <= n");
    const StageTower& t = stage(depth);
    auto [j, off] = t.locate(y);
    if (j + m < 0)
      throw NeedsDeeperStage("orbit index " + std::to_string(m) + " falls below the base", m);
    if (j + n >= t.height())
      throw NeedsDeeperStage("orbit index " + std::to_string(n) + " passes the top", n);
    std::vector<Rational> out;
    out.reserve(static_cast<std::size_t>(n - m + 1));
    for (long long i = m; i <= n; ++i) out.push_back(t.level_left(j + i) + off);
    return out;
  }

  // T^i(y) without materializing the whole segment.
  Rational orbit_point(const Rational& y, long long i, long depth) {
    const StageTower& t = stage(depth);
    auto [j, off] = t.locate(y);
    if (j + i < 0) throw NeedsDeeperStage("orbit index falls below the base", i);
    if (j + i >= t.height()) throw NeedsDeeperStage("orbit index passes the top", i);
    return t.level_left(j + i) + off;
  }

  // Least n >= 1 with T^n(y) in B.
  long long return_time(const Rational& y, const IntervalSet& B, long long max_steps, long depth) {
    require(max_steps >= 1, ErrorKind::kPrecondition, "max_steps must be >= 1");
    const StageTower& t = stage(depth);
    auto [j, off] = t.locate(y);
    for (long long i = 1; i <= max_steps; ++i) {
      if (j + i >= t.height())
        throw NeedsDeeperStage("orbit passes the top before returning", i);
      if (B.contains(t.level_left(j + i) + off)) return i;
    }
    fail(ErrorKind::kNoReturnWithinBudget,
         "no return to B within " + std::to_string(max_steps) + " steps");
  }

  // Splits S into level-aligned fragments. S must lie in the used region.
  std::vector<LevelPiece> split_by_levels(const IntervalSet& S, long depth) {
    const StageTower& t = stage(depth);
    require(S.is_subset_of(t.used_region()), ErrorKind::kPrecondition,
            "set leaves the used region at depth " + std::to_string(depth));
    std::vector<LevelPiece> out;
    for (const auto& p : S.pieces()) {
      Rational cur = p.lo;
      while (cur < p.hi) {
        auto [j, off] = t.locate(cur);
        Rational top = t.level_left(j) + t.width();
        Rational cut = std::min(top, p.hi);
        out.push_back({j, Interval{cur, cut}});
        cur = cut;
      }
    }
    return out;
  }

  struct ShiftedSet {
    IntervalSet moved;       // exact T^delta image of the classifiable part
    Rational dropped_mass;   // mass whose image leaves the stage column
  };

  // Exact T^delta image of a set, fragment by fragment. strict: any dropped
  // mass raises NeedsDeeperStage instead of being reported.
  ShiftedSet shift_set(const IntervalSet& S, long long delta, long depth, bool strict) {
    const StageTower& t = stage(depth);
    ShiftedSet out;
    out.dropped_mass = 0;
    std::vector<Interval> moved;
    for (const auto& lp : split_by_levels(S, depth)) {
      long long j2 = lp.level + delta;
      if (j2 < 0 || j2 >= t.height()) {
        if (strict)
          throw NeedsDeeperStage("image of fragment at level " + std::to_string(lp.level) +
                                     " leaves the stage column",
                                 delta);
        out.dropped_mass += lp.piece.width();
        continue;
      }
      Rational shift = t.level_left(j2) - t.level_left(lp.level);
      moved.push_back(Interval{lp.piece.lo + shift, lp.piece.hi + shift});
    }
    out.moved = IntervalSet::from_pieces(std::move(moved));
    return out;
  }

  IntervalSet image(const IntervalSet& S, long long steps, long depth) {
    return shift_set(S, steps, depth, /*strict=*/true).moved;
  }

  LevelClasses classify_levels(const IntervalSet& K, long depth) {
    const StageTower& t = stage(depth);
    LevelClasses out;
    out.flags.assign(static_cast<std::size_t>(t.height()), LevelFlag::kOut);
    std::vector<Rational> covered(static_cast<std::size_t>(t.height()), Rational(0));
    for (const auto& lp : split_by_levels(K, depth))
      covered[static_cast<std::size_t>(lp.level)] += lp.piece.width();
    for (std::size_t j = 0; j < covered.size(); ++j) {
      if (covered[j] == 0) continue;
      if (covered[j] == t.width()) {
        out.flags[j] = LevelFlag::kIn;
      } else {
        out.flags[j] = LevelFlag::kPartial;
        out.aligned = false;
      }
    }
    return out;
  }

  struct ReturnColumn {
    IntervalSet base;       // subset of B
    long long height;       // first-return time of every point of base
  };

  struct ReturnTimeTower {
    std::vector<ReturnColumn> columns;  // ascending by height
    IntervalSet residual;               // part of B whose return is unresolved at depth
  };

  // Decomposes B by first-return time, exactly. Residual = the part whose
  // forward orbit passes the stage top before returning. UnresolvedMass only
  // when nothing at all resolves.
  ReturnTimeTower return_time_tower(const IntervalSet& B, long depth) {
    require(!B.empty(), ErrorKind::kPrecondition, "empty return-time base");
    const StageTower& t = stage(depth);

    // B-carrying levels in index order = visit order along any fiber.
    std::vector<std::pair<long long, IntervalSet>> b_levels;
    {
      std::vector<LevelPiece> frags = split_by_levels(B, depth);
      std::sort(frags.begin(), frags.end(),
                [](const LevelPiece& a, const LevelPiece& b) { return a.level < b.level; });
      for (const auto& f : frags) {
        IntervalSet piece(f.piece.lo, f.piece.hi);
        if (!b_levels.empty() && b_levels.back().first == f.level)
          b_levels.back().second = b_levels.back().second.set_union(piece);
        else
          b_levels.emplace_back(f.level, piece);
      }
    }

    std::map<long long, std::vector<IntervalSet>> by_height;
    std::vector<IntervalSet> residual_parts;
    for (const auto& [j, part] : b_levels) {
      IntervalSet remaining = part;
      for (const auto& [j2, target] : b_levels) {
        if (remaining.empty()) break;
        if (j2 <= j) continue;
        Rational shift = t.level_left(j2) - t.level_left(j);
        IntervalSet hit = remaining.translate(shift).set_intersect(target);
        if (hit.empty()) continue;
        by_height[j2 - j].push_back(hit.translate(-shift));
        remaining = remaining.set_diff(hit.translate(-shift));
      }
      if (!remaining.empty()) residual_parts.push_back(remaining);
    }

    ReturnTimeTower out;
    out.residual = union_all(residual_parts);
    for (auto& [height, bases] : by_height)
      out.columns.push_back({union_all(bases), height});
    if (out.columns.empty())
      fail(ErrorKind::kUnresolvedMass,
           "no return time resolvable at depth " + std::to_string(depth));
    return out;
  }

 private:
  void build_next_stage() {
    if (stages_.empty()) {
      std::vector<Rational> lefts{spec_.base.lo};
      stages_.push_back(std::make_unique<StageTower>(1, spec_.base.width(), std::move(lefts),
                                                     spec_.base.hi, spec_.base.lo));
      return;
    }
    const StageTower& prev = *stages_.back();
    long k = prev.depth();
    const StageDescriptor& st = spec_.stages[static_cast<std::size_t>(k - 1)];
    Rational w2 = prev.width() / st.cuts;
    long long h = prev.height();
    long long h2 = 0;
    for (long long i = 0; i < st.cuts; ++i) h2 += h + st.spacers[static_cast<std::size_t>(i)];

    std::vector<Rational> lefts;
    lefts.reserve(static_cast<std::size_t>(h2));
    Rational unused = prev.used_region().pieces().back().hi;
    for (long long i = 0; i < st.cuts; ++i) {
      Rational strip_shift = w2 * i;
      for (long long j = 0; j < h; ++j) lefts.push_back(prev.level_left(j) + strip_shift);
      // Fresh spacer levels, allocated left to right from the first unused
      // coordinate; the used region stays a single interval.
      for (long long s = 0; s < st.spacers[static_cast<std::size_t>(i)]; ++s) {
        lefts.push_back(unused);
        unused += w2;
      }
    }
    stages_.push_back(std::make_unique<StageTower>(k + 1, std::move(w2), std::move(lefts),
                                                   std::move(unused), spec_.base.lo));
  }

  RankOneSpec spec_;
  long max_depth_;
  std::vector<std::unique_ptr<StageTower>> stages_;
};

// Built-in systems. Both have divergent spacer mass, so the resulting
// transformations preserve an infinite measure; rank-one constructions are
// ergodic.
struct PresetInfo {
  std::string name;
  std::string description;
};

inline std::vector<PresetInfo> list_presets() {
  return {
      {"hajian-kakutani",
       "Hajian-Kakutani skyscraper: base [0,1), two cuts per stage, spacer block of "
       "2*height on the right subcolumn. Heights 1, 4, 16, ...; used measure doubles "
       "per stage."},
      {"triadic-skyscraper",
       "Triadic skyscraper: base [0,1), three cuts per stage, spacer block of 6*height "
       "on the rightmost subcolumn. Heights 1, 9, 81, ...; used measure triples per "
       "stage."},
  };
}

inline RankOneSpec preset_spec(const std::string& name, long depth) {
  require(depth >= 1, ErrorKind::kPrecondition, "preset depth must be >= 1");
  RankOneSpec spec;
  spec.base = Interval{Rational(0), Rational(1)};
  long long h = 1;
  if (name == "hajian-kakutani") {
    for (long k = 1; k < depth; ++k) {
      spec.stages.push_back({2, {0, 2 * h}});
      h = 4 * h;
    }
  } else if (name == "triadic-skyscraper") {
    for (long k = 1; k < depth; ++k) {
      spec.stages.push_back({3, {0, 0, 6 * h}});
      h = 9 * h;
    }
  } else {
    fail(ErrorKind::kPrecondition, "unknown preset '" + name + "'");
  }
  return spec;
}

}  // namespace towerforge
