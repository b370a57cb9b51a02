#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "towerforge/interval_set.hpp"

using namespace towerforge;

namespace {

// Oracle: sets as membership bitmaps over a uniform grid of cells
// [i/G, (i+1)/G). Any IntervalSet whose endpoints are multiples of 1/G is
// represented exactly, so boolean ops on bitmaps are the ground truth.
constexpr int kGrid = 96;

using Bitmap = std::vector<bool>;

Bitmap to_bitmap(const IntervalSet& s, int cells) {
  Bitmap bm(static_cast<std::size_t>(cells), false);
  for (int i = 0; i < cells; ++i) {
    Rational mid = Rational(2 * i + 1, 2 * kGrid);
    bm[static_cast<std::size_t>(i)] = s.contains(mid);
  }
  return bm;
}

IntervalSet from_bitmap(const Bitmap& bm) {
  std::vector<Interval> pieces;
  for (std::size_t i = 0; i < bm.size(); ++i)
    if (bm[i])
      pieces.push_back(Interval{Rational(static_cast<long>(i), kGrid),
                                Rational(static_cast<long>(i) + 1, kGrid)});
  return IntervalSet::from_pieces(std::move(pieces));
}

IntervalSet random_grid_set(std::mt19937& rng, int cells) {
  std::uniform_int_distribution<int> coin(0, 2);
  Bitmap bm(static_cast<std::size_t>(cells));
  for (auto&& b : bm) b = coin(rng) == 0;
  return from_bitmap(bm);
}

}  // namespace

TEST_CASE("interval set normalizes overlaps, adjacency and empties") {
  auto s = IntervalSet::from_pieces({Interval{Rational(1, 2), Rational(1, 2)},
                                     Interval{Rational(0), Rational(1, 4)},
                                     Interval{Rational(1, 4), Rational(1, 2)},
                                     Interval{Rational(3, 8), Rational(5, 8)}});
  REQUIRE(s.piece_count() == 1);
  CHECK(s.pieces()[0].lo == 0);
  CHECK(s.pieces()[0].hi == Rational(5, 8));
  CHECK(s.measure() == Rational(5, 8));
  CHECK(IntervalSet{}.empty());
}

TEST_CASE("membership respects half-open endpoints") {
  IntervalSet s(Rational(1, 3), Rational(2, 3));
  CHECK(s.contains(Rational(1, 3)));
  CHECK_FALSE(s.contains(Rational(2, 3)));
  CHECK(s.contains(Rational(1, 2)));
  CHECK_FALSE(s.contains(Rational(0)));
}

TEST_CASE("boolean operations agree with the grid oracle") {
  std::mt19937 rng(20240817);
  for (int trial = 0; trial < 60; ++trial) {
    IntervalSet a = random_grid_set(rng, kGrid);
    IntervalSet b = random_grid_set(rng, kGrid);
    Bitmap ba = to_bitmap(a, kGrid), bb = to_bitmap(b, kGrid);

    Bitmap want_union(kGrid), want_inter(kGrid), want_diff(kGrid), want_sym(kGrid);
    for (int i = 0; i < kGrid; ++i) {
      want_union[i] = ba[i] || bb[i];
      want_inter[i] = ba[i] && bb[i];
      want_diff[i] = ba[i] && !bb[i];
      want_sym[i] = ba[i] != bb[i];
    }
    CHECK(a.set_union(b) == from_bitmap(want_union));
    CHECK(a.set_intersect(b) == from_bitmap(want_inter));
    CHECK(a.set_diff(b) == from_bitmap(want_diff));
    CHECK(a.set_symdiff(b) == from_bitmap(want_sym));

    // Measure is additive across the partition {a\b, a&b, b\a}.
    CHECK(a.set_union(b).measure() ==
          a.measure() + b.measure() - a.set_intersect(b).measure());
  }
}

TEST_CASE("subset and disjointness predicates") {
  IntervalSet a(Rational(0), Rational(1, 2));
  IntervalSet b(Rational(0), Rational(1));
  IntervalSet c(Rational(1, 2), Rational(1));
  CHECK(a.is_subset_of(b));
  CHECK_FALSE(b.is_subset_of(a));
  CHECK(a.is_disjoint_from(c));
  CHECK_FALSE(b.is_disjoint_from(c));
  CHECK(IntervalSet{}.is_subset_of(a));
  CHECK(IntervalSet{}.is_disjoint_from(a));
}

TEST_CASE("translate shifts exactly and guards the origin") {
  IntervalSet s(Rational(1, 4), Rational(1, 2));
  IntervalSet t = s.translate(Rational(3, 4));
  CHECK(t == IntervalSet(Rational(1), Rational(5, 4)));
  CHECK(s.translate(Rational(-1, 4)) == IntervalSet(Rational(0), Rational(1, 4)));
  CHECK_THROWS_AS(s.translate(Rational(-1, 2)), Error);
}

TEST_CASE("union_all merges a batch") {
  std::vector<IntervalSet> parts;
  for (int i = 0; i < 8; ++i)
    parts.emplace_back(Rational(i, 8), Rational(i + 1, 8));
  IntervalSet whole = union_all(parts);
  CHECK(whole == IntervalSet(Rational(0), Rational(1)));
  CHECK(union_all({}).empty());
}
