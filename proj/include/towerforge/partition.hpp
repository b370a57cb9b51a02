#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/errors.hpp"
#include "towerforge/interval_set.hpp"
#include "towerforge/measure_value.hpp"
#include "towerforge/rankone.hpp"

namespace towerforge {

// Symbol sequence over a partition alphabet {1..N}; offset is the coordinate
// of the first symbol.
struct Word {
  long long offset = 0;
  std::vector<int> symbols;

  long long length() const { return static_cast<long long>(symbols.size()); }
  bool all_ones() const {
    for (int s : symbols)
      if (s != 1) return false;
    return true;
  }
  std::string str() const {
    std::string out;
    bool compact = true;
    for (int s : symbols)
      if (s > 9) compact = false;
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i && !compact) out += ' ';
      out += std::to_string(symbols[i]);
    }
    return out;
  }
  auto operator<=>(const Word&) const = default;
};

inline Word constant_word(long long offset, std::size_t length, int symbol) {
  return Word{offset, std::vector<int>(length, symbol)};
}

// Finite partition with one implicit atom: atom 1 is the complement of the
// union of the listed finite atoms, and is the only atom of infinite measure.
// Finite atoms carry indices 2..N in listed order.
class Partition {
 public:
  Partition() = default;
  explicit Partition(std::vector<IntervalSet> finite_atoms) : atoms_(std::move(finite_atoms)) {
    support_ = union_all(atoms_);
    Rational total = 0;
    for (const auto& a : atoms_) total += a.measure();
    require(total == support_.measure(), ErrorKind::kPrecondition,
            "finite atoms must be pairwise disjoint");
  }

  int alphabet_size() const { return static_cast<int>(atoms_.size()) + 1; }
  std::size_t finite_atom_count() const { return atoms_.size(); }
  const std::vector<IntervalSet>& finite_atoms() const { return atoms_; }

  const IntervalSet& atom(int index) const {
    require(index >= 2 && index <= alphabet_size(), ErrorKind::kUnknownSymbol,
            "finite atom indices run from 2 to " + std::to_string(alphabet_size()));
    return atoms_[static_cast<std::size_t>(index - 2)];
  }

  // K: the union of the finite atoms.
  const IntervalSet& support() const { return support_; }
  Rational support_measure() const { return support_.measure(); }

  MeasureValue measure_of(int index) const {
    if (index == 1) return MeasureValue::infinite();
    return MeasureValue{atom(index).measure()};
  }

  int symbol_at(const Rational& y) const {
    for (std::size_t i = 0; i < atoms_.size(); ++i)
      if (atoms_[i].contains(y)) return static_cast<int>(i) + 2;
    return 1;
  }

  // The paper-sense validity check: every finite atom has positive measure
  // and there is at least one. Construction itself tolerates empty atoms,
  // which intermediate pipeline states produce.
  void validate_strict() const {
    require(!atoms_.empty(), ErrorKind::kDegeneratePartition, "no finite atoms");
    for (const auto& a : atoms_)
      require(!a.empty(), ErrorKind::kDegeneratePartition, "finite atom of measure zero");
  }

  bool operator==(const Partition& o) const { return atoms_ == o.atoms_; }

 private:
  std::vector<IntervalSet> atoms_;
  IntervalSet support_;
};

// Common refinement. New finite atoms are the nonempty intersections
// A_i cap B_j other than the (1,1) pair, indexed lexicographically in (i,j);
// the (1,1) intersection is the new implicit atom.
inline Partition join(const Partition& a, const Partition& b) {
  std::vector<IntervalSet> out;
  auto push = [&](IntervalSet s) {
    if (!s.empty()) out.push_back(std::move(s));
  };
  for (std::size_t j = 0; j < b.finite_atom_count(); ++j)
    push(b.finite_atoms()[j].set_diff(a.support()));  // (1, j+2)
  for (std::size_t i = 0; i < a.finite_atom_count(); ++i) {
    push(a.finite_atoms()[i].set_diff(b.support()));  // (i+2, 1)
    for (std::size_t j = 0; j < b.finite_atom_count(); ++j)
      push(a.finite_atoms()[i].set_intersect(b.finite_atoms()[j]));
  }
  return Partition(std::move(out));
}

// d(α, β) = Σ_{i≠1} ν(A_i Δ B_i), matching finite atoms by index.
inline MeasureValue partition_distance(const Partition& a, const Partition& b) {
  require(a.alphabet_size() == b.alphabet_size(), ErrorKind::kAlphabetMismatch,
          "partitions have different alphabet sizes");
  Rational d = 0;
  for (std::size_t i = 0; i < a.finite_atom_count(); ++i)
    d += a.finite_atoms()[i].set_symdiff(b.finite_atoms()[i]).measure();
  return MeasureValue{d};
}

// Symbols of the orbit section T^m y .. T^n y.
inline Word alpha_name(RankOneEngine& eng, const Partition& alpha, const Rational& y, long long m,
                       long long n, long depth) {
  Word w;
  w.offset = m;
  for (const Rational& p : eng.orbit_segment(y, m, n, depth)) w.symbols.push_back(alpha.symbol_at(p));
  return w;
}

struct JoinResult {
  Partition partition;           // finite atoms of the iterated join, realized in the window
  std::vector<Word> atom_words;  // word of finite atom index i+2, offset m
  IntervalSet window;            // levels where the whole coordinate range resolves
  // Mass of ∪_{i=m}^{n} T^{-i}K and the part of it the window misses; only
  // available when the forward images of K stay inside the stage column.
  std::optional<Rational> true_visit_mass;
  std::optional<Rational> unresolved_mass;

  const IntervalSet& cell(const Word& w) const {
    for (std::size_t i = 0; i < atom_words.size(); ++i)
      if (atom_words[i] == w) return partition.finite_atoms()[i];
    fail(ErrorKind::kUnknownSymbol, "word not realized in join");
  }
};

// α_m^n = ⋁_{i=m}^{n} T^{-i}α, realized exactly on the set of levels whose
// full coordinate range [m,n] stays inside the stage column. Points outside
// that window fall to the implicit atom; the shortfall is reported as
// unresolved mass when computable.
inline JoinResult iterated_join(RankOneEngine& eng, const Partition& alpha, long long m,
                                long long n, long depth, std::size_t cell_budget = 1u << 20) {
  require(m <= n, ErrorKind::kPrecondition, "iterated_join needs m <= n");
  const StageTower& t = eng.stage(depth);
  const long long h = t.height();
  const long long jmin = std::max<long long>(0, -m);
  const long long jmax = h - 1 - n;
  if (jmin > jmax)
    throw NeedsDeeperStage("coordinate range [" + std::to_string(m) + "," + std::to_string(n) +
                               "] does not fit any level at depth " + std::to_string(depth),
                           n);

  std::vector<IntervalSet> window_levels;
  window_levels.reserve(static_cast<std::size_t>(jmax - jmin + 1));
  for (long long j = jmin; j <= jmax; ++j) window_levels.push_back(t.level_set(j));
  IntervalSet window = union_all(window_levels);

  struct Cell {
    std::vector<int> symbols;
    IntervalSet set;
  };
  std::vector<Cell> cells{{{}, window}};
  for (long long i = m; i <= n; ++i) {
    // T^{-i}(A) ∩ window, pulled back through the column: restrict A to the
    // levels the window reaches at time i, then shift down by i.
    std::vector<IntervalSet> pre;
    IntervalSet reach;
    {
      std::vector<IntervalSet> rl;
      for (long long j = jmin + i; j <= jmax + i; ++j)
        rl.push_back(t.level_set(j));
      reach = union_all(rl);
    }
    for (int a = 2; a <= alpha.alphabet_size(); ++a)
      pre.push_back(eng.shift_set(alpha.atom(a).set_intersect(reach), -i, depth, true).moved);

    std::vector<Cell> next;
    for (auto& c : cells) {
      IntervalSet rest = c.set;
      for (std::size_t ai = 0; ai < pre.size(); ++ai) {
        IntervalSet hit = c.set.set_intersect(pre[ai]);
        if (hit.empty()) continue;
        Cell nc{c.symbols, std::move(hit)};
        nc.symbols.push_back(static_cast<int>(ai) + 2);
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
    require(cells.size() <= cell_budget, ErrorKind::kPrecondition,
            "iterated_join cell budget exceeded");
  }

  std::sort(cells.begin(), cells.end(),
            [](const Cell& x, const Cell& y) { return x.symbols < y.symbols; });

  JoinResult out;
  out.window = std::move(window);
  std::vector<IntervalSet> atoms;
  Rational realized_visit_mass = 0;
  for (auto& c : cells) {
    bool ones = true;
    for (int s : c.symbols)
      if (s != 1) ones = false;
    if (ones) continue;  // the all-1 cell belongs to the implicit atom
    realized_visit_mass += c.set.measure();
    out.atom_words.push_back(Word{m, std::move(c.symbols)});
    atoms.push_back(std::move(c.set));
  }
  out.partition = Partition(std::move(atoms));

  // ν(∪_{i=m}^{n} T^{-i}K) = ν(∪_{r=0}^{n-m} T^{r}K): push K forward instead
  // of pulling it back, which stays inside the column on deep enough stages.
  const IntervalSet& K = alpha.support();
  long long topK = 0;
  for (const auto& lp : eng.split_by_levels(K, depth)) topK = std::max(topK, lp.level);
  if (topK + (n - m) <= h - 1) {
    IntervalSet acc = K;
    for (long long r = 1; r <= n - m; ++r)
      acc = acc.set_union(eng.shift_set(K, r, depth, true).moved);
    out.true_visit_mass = acc.measure();
    out.unresolved_mass = *out.true_visit_mass - realized_visit_mass;
  }
  return out;
}

// All length-n words over the alphabet realized with positive measure,
// plus the all-1 word (its true atom always has positive measure: the
// spacer region is unbounded).
inline std::vector<Word> language(RankOneEngine& eng, const Partition& alpha, long long n,
                                  long depth, std::size_t sample_budget = 4096) {
  require(n >= 1, ErrorKind::kPrecondition, "language needs word length >= 1");
  JoinResult jr = iterated_join(eng, alpha, 0, n - 1, depth, sample_budget);
  std::vector<Word> out = jr.atom_words;
  out.push_back(constant_word(0, static_cast<std::size_t>(n), 1));
  std::sort(out.begin(), out.end());
  return out;
}

// Counts of the (2n-1)-windows of w centered at its non-1 positions.
// anchor_count is the number of anchors actually counted; anchors whose
// window leaves the word are skipped and reported, not errors.
struct BlockDistribution {
  int n = 1;
  std::map<Word, long long> block_counts;
  long long anchor_count = 0;
  long long skipped_anchors = 0;

  Rational frequency(const Word& w) const {
    require(anchor_count > 0, ErrorKind::kEmptyAnchor, "no anchors counted");
    auto it = block_counts.find(w);
    return it == block_counts.end() ? Rational(0) : Rational(it->second, anchor_count);
  }
};

inline BlockDistribution block_distribution(const Word& w, int n) {
  require(n >= 1, ErrorKind::kPrecondition, "block radius must be >= 1");
  BlockDistribution out;
  out.n = n;
  const long long len = static_cast<long long>(w.symbols.size());
  for (long long j = 0; j < len; ++j) {
    if (w.symbols[static_cast<std::size_t>(j)] == 1) continue;
    if (j - (n - 1) < 0 || j + (n - 1) >= len) {
      ++out.skipped_anchors;
      continue;
    }
    Word v;
    v.offset = -(n - 1);
    v.symbols.assign(w.symbols.begin() + (j - (n - 1)), w.symbols.begin() + (j + n));
    ++out.block_counts[v];
    ++out.anchor_count;
  }
  return out;
}

struct DeviationReport {
  bool within = false;
  Word max_word;
  Rational max_deviation;
};

// Compares empirical block frequencies against a reference map. True iff
// every word (from either side) deviates by strictly less than delta.
inline DeviationReport distribution_within(const BlockDistribution& e,
                                           const std::map<Word, Rational>& ref,
                                           const Rational& delta) {
  require(e.anchor_count > 0, ErrorKind::kEmptyAnchor, "empirical distribution has no anchors");
  DeviationReport rep;
  rep.max_deviation = 0;
  auto consider = [&](const Word& w, const Rational& dev) {
    if (dev >= rep.max_deviation) {  // ties resolve to the later word, deterministically
      rep.max_deviation = dev;
      rep.max_word = w;
    }
  };
  for (const auto& [w, count] : e.block_counts) {
    auto it = ref.find(w);
    Rational r = it == ref.end() ? Rational(0) : it->second;
    consider(w, abs(Rational(count, e.anchor_count) - r));
  }
  for (const auto& [w, r] : ref)
    if (!e.block_counts.count(w)) consider(w, r);
  rep.within = rep.max_deviation < delta;
  return rep;
}

// Exact measure of the defining intersection of a word: ⋂_i T^{-(m+i)}A_{w_i}
// with A_1 read as the complement of K. Infinite iff every symbol is 1;
// otherwise finite and computed by shifting the whole intersection forward so
// it anchors on the first non-1 coordinate:
//   ν(atom(w)) = ν(Y \ ∪_{r=1}^{p} T^{r}K),
// where p is the first non-1 position and Y realizes the suffix constraints
// pushed forward through the column. The offset does not affect the value.
inline MeasureValue exact_word_measure(RankOneEngine& eng, const Partition& alpha, const Word& w,
                                       long depth) {
  require(!w.symbols.empty(), ErrorKind::kPrecondition, "empty word");
  for (int s : w.symbols)
    require(s >= 1 && s <= alpha.alphabet_size(), ErrorKind::kUnknownSymbol,
            "symbol outside alphabet");
  if (w.all_ones()) return MeasureValue::infinite();

  std::size_t p = 0;
  while (w.symbols[p] == 1) ++p;

  const IntervalSet& K = alpha.support();
  IntervalSet Z = alpha.atom(w.symbols[p]);
  for (std::size_t i = p + 1; i < w.symbols.size(); ++i) {
    Z = eng.image(Z, 1, depth);
    if (w.symbols[i] == 1)
      Z = Z.set_diff(K);
    else
      Z = Z.set_intersect(alpha.atom(w.symbols[i]));
  }
  IntervalSet Y = eng.image(Z, -static_cast<long long>(w.symbols.size() - 1 - p), depth);
  for (std::size_t r = 1; r <= p; ++r) Y = Y.set_diff(eng.image(K, static_cast<long long>(r), depth));
  return MeasureValue{Y.measure()};
}

// Reference (2n-1)-block distribution of a partition: words centered on a
// non-1 coordinate, weighted by exact atom measure over ν(K). The family is
// complete iff the weights sum to 1, which is checked; a shortfall means the
// enumeration window was too shallow.
inline std::map<Word, Rational> reference_block_distribution(RankOneEngine& eng,
                                                             const Partition& alpha, int n,
                                                             long depth) {
  require(n >= 1, ErrorKind::kPrecondition, "block radius must be >= 1");
  JoinResult jr = iterated_join(eng, alpha, -(n - 1), n - 1, depth);
  std::map<Word, Rational> out;
  Rational total = 0;
  for (const auto& w : jr.atom_words) {
    if (w.symbols[static_cast<std::size_t>(n - 1)] == 1) continue;
    MeasureValue mv = exact_word_measure(eng, alpha, w, depth);
    Rational weight = mv.value() / alpha.support_measure();
    out[w] = weight;
    total += weight;
  }
  if (total != 1)
    throw NeedsDeeperStage(
        "reference block family incomplete at depth " + std::to_string(depth) +
            " (mass " + towerforge::to_string(total) + " of 1)",
        n);
  return out;
}

}  // namespace towerforge
