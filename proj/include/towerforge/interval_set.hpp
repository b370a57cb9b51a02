#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "towerforge/errors.hpp"
#include "towerforge/measure_value.hpp"
#include "towerforge/rational.hpp"

namespace towerforge {

// Half-open interval [lo, hi) with rational endpoints. Empty iff lo >= hi.
struct Interval {
  Rational lo;
  Rational hi;

  bool empty() const { return lo >= hi; }
  Rational width() const { return empty() ? Rational(0) : Rational(hi - lo); }
  bool contains(const Rational& x) const { return lo <= x && x < hi; }
};

enum class SetOp { kUnion, kIntersect, kDiff, kSymDiff };

// Finite union of half-open intervals, kept canonical: sorted by left
// endpoint, pairwise disjoint, no empty pieces, adjacent pieces merged.
// Canonical form makes equality structural.
class IntervalSet {
 public:
  IntervalSet() = default;

  IntervalSet(Rational lo, Rational hi) {
    if (lo < hi) pieces_.push_back({std::move(lo), std::move(hi)});
  }

  static IntervalSet from_pieces(std::vector<Interval> raw) {
    IntervalSet s;
    raw.erase(std::remove_if(raw.begin(), raw.end(),
                             [](const Interval& p) { return p.empty(); }),
              raw.end());
    std::sort(raw.begin(), raw.end(), [](const Interval& a, const Interval& b) {
      return a.lo < b.lo;
    });
    for (auto& p : raw) {
      if (!s.pieces_.empty() && p.lo <= s.pieces_.back().hi) {
        if (p.hi > s.pieces_.back().hi) s.pieces_.back().hi = std::move(p.hi);
      } else {
        s.pieces_.push_back(std::move(p));
      }
    }
    return s;
  }

  const std::vector<Interval>& pieces() const { return pieces_; }
  bool empty() const { return pieces_.empty(); }
  std::size_t piece_count() const { return pieces_.size(); }

  Rational measure() const {
    Rational m = 0;
    for (const auto& p : pieces_) m += p.width();
    return m;
  }
  MeasureValue measure_value() const { return MeasureValue(measure()); }

  bool contains(const Rational& x) const {
    // First piece with lo > x; the candidate is its predecessor.
    auto it = std::upper_bound(
        pieces_.begin(), pieces_.end(), x,
        [](const Rational& v, const Interval& p) { return v < p.lo; });
    if (it == pieces_.begin()) return false;
    --it;
    return x < it->hi;
  }

  IntervalSet boolean(const IntervalSet& other, SetOp op) const {
    // Sweep over all endpoints; between consecutive endpoints membership in
    // each operand is constant.
    std::vector<Rational> cuts;
    cuts.reserve(2 * (pieces_.size() + other.pieces_.size()));
    for (const auto& p : pieces_) { cuts.push_back(p.lo); cuts.push_back(p.hi); }
    for (const auto& p : other.pieces_) { cuts.push_back(p.lo); cuts.push_back(p.hi); }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    IntervalSet out;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const Rational& lo = cuts[i];
      while (ia < pieces_.size() && pieces_[ia].hi <= lo) ++ia;
      while (ib < other.pieces_.size() && other.pieces_[ib].hi <= lo) ++ib;
      bool in_a = ia < pieces_.size() && pieces_[ia].contains(lo);
      bool in_b = ib < other.pieces_.size() && other.pieces_[ib].contains(lo);
      bool keep = false;
      switch (op) {
        case SetOp::kUnion: keep = in_a || in_b; break;
        case SetOp::kIntersect: keep = in_a && in_b; break;
        case SetOp::kDiff: keep = in_a && !in_b; break;
        case SetOp::kSymDiff: keep = in_a != in_b; break;
      }
      if (keep) {
        if (!out.pieces_.empty() && out.pieces_.back().hi == lo) {
          out.pieces_.back().hi = cuts[i + 1];
        } else {
          out.pieces_.push_back({lo, cuts[i + 1]});
        }
      }
    }
    return out;
  }

  IntervalSet set_union(const IntervalSet& o) const { return boolean(o, SetOp::kUnion); }
  IntervalSet set_intersect(const IntervalSet& o) const { return boolean(o, SetOp::kIntersect); }
  IntervalSet set_diff(const IntervalSet& o) const { return boolean(o, SetOp::kDiff); }
  IntervalSet set_symdiff(const IntervalSet& o) const { return boolean(o, SetOp::kSymDiff); }

  bool is_subset_of(const IntervalSet& o) const { return set_diff(o).empty(); }
  bool is_disjoint_from(const IntervalSet& o) const { return set_intersect(o).empty(); }

  bool operator==(const IntervalSet& o) const {
    if (pieces_.size() != o.pieces_.size()) return false;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      if (pieces_[i].lo != o.pieces_[i].lo || pieces_[i].hi != o.pieces_[i].hi) return false;
    }
    return true;
  }
  bool operator!=(const IntervalSet& o) const { return !(*this == o); }

  // Rigid translation x -> x + delta. The carrier space is [0, inf), so a
  // translate that would cross zero is rejected.
  IntervalSet translate(const Rational& delta) const {
    if (!pieces_.empty() && pieces_.front().lo + delta < 0) {
      throw Error(ErrorKind::kNegativeEndpoint,
                  "translate by " + towerforge::to_string(delta) +
                      " pushes left endpoint below zero");
    }
    IntervalSet out;
    out.pieces_.reserve(pieces_.size());
    for (const auto& p : pieces_) out.pieces_.push_back({p.lo + delta, p.hi + delta});
    return out;
  }

  std::optional<Interval> bounding() const {
    if (pieces_.empty()) return std::nullopt;
    return Interval{pieces_.front().lo, pieces_.back().hi};
  }

  std::string str() const {
    if (pieces_.empty()) return "{}";
    std::string out;
    for (const auto& p : pieces_) {
      if (!out.empty()) out += " u ";
      out += "[" + towerforge::to_string(p.lo) + "," + towerforge::to_string(p.hi) + ")";
    }
    return out;
  }

 private:
  std::vector<Interval> pieces_;
};

inline IntervalSet union_all(const std::vector<IntervalSet>& sets) {
  std::vector<Interval> raw;
  for (const auto& s : sets)
    for (const auto& p : s.pieces()) raw.push_back(p);
  return IntervalSet::from_pieces(std::move(raw));
}

}  // namespace towerforge
