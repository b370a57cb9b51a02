#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/stats.hpp"

namespace towerforge {

// Fiber word of a column: its level names parsed back to symbols.
inline Word column_fiber_word(const Column& col) {
  require(!col.level_names.empty() && col.level_names.size() == col.level_sets.size(),
          ErrorKind::kMissingNames, "column carries no fiber name");
  Word w;
  w.offset = 0;
  for (const auto& s : col.level_names) {
    std::size_t used = 0;
    int sym = 0;
    try {
      sym = std::stoi(s, &used);
    } catch (...) {
    }
    require(used == s.size() && sym >= 1, ErrorKind::kMissingNames,
            "level name '" + s + "' is not a symbol");
    w.symbols.push_back(sym);
  }
  return w;
}

inline long long column_hit_count(const Column& col) {
  long long hits = 0;
  for (const auto& s : col.level_names)
    if (s != "1") ++hits;
  return hits;
}

// Columns whose fiber (2n-1)-block distribution is not within delta of the
// reference. Columns with no usable anchor cannot be certified and are
// flagged too.
inline std::vector<std::size_t> detect_bad_columns(const StandardTower& t, int n,
                                                   const Rational& delta,
                                                   const std::map<Word, Rational>& ref) {
  std::vector<std::size_t> bad;
  if (delta >= 1) return bad;  // every probability distribution is within 1
  for (std::size_t i = 0; i < t.principal_columns.size(); ++i) {
    Word fiber = column_fiber_word(t.principal_columns[i]);
    BlockDistribution dist = block_distribution(fiber, n);
    if (dist.anchor_count == 0 || !distribution_within(dist, ref, delta).within)
      bad.push_back(i);
  }
  return bad;
}

struct RenameResult {
  Partition alpha;
  StandardTower tower;
  Rational moved_mass;  // finite-atom mass pushed into the infinite atom
};

// Reassigns every level of each bad column to atom 1 and unites those levels
// with the infinite level. Atom indices are preserved (emptied atoms stay as
// placeholders) so the d-metric remains comparable across steps.
inline RenameResult rename_bad_to_one(const StandardTower& t, const Partition& alpha,
                                      const std::vector<std::size_t>& bad) {
  std::vector<IntervalSet> doomed_levels;
  for (std::size_t i : bad) {
    require(i < t.principal_columns.size(), ErrorKind::kPrecondition,
            "bad column id out of range");
    for (const auto& level : t.principal_columns[i].level_sets) doomed_levels.push_back(level);
  }
  IntervalSet doomed = union_all(doomed_levels);

  RenameResult out;
  out.moved_mass = 0;
  std::vector<IntervalSet> atoms;
  atoms.reserve(alpha.finite_atom_count());
  for (const auto& a : alpha.finite_atoms()) {
    out.moved_mass += a.set_intersect(doomed).measure();
    atoms.push_back(a.set_diff(doomed));
  }
  out.alpha = Partition(std::move(atoms));
  require(out.alpha.support_measure() > 0, ErrorKind::kDegeneratePartition,
          "every finite atom was renamed into the infinite atom");
  out.tower = unite_into_infinite_level(t, bad);
  return out;
}

// Symbol map alpha -> beta induced by atom containment; [1] = 1. Every
// nonempty finite atom of alpha must lie inside exactly one atom of beta:
// a finite one gives its symbol, the implicit complement gives 1. Atoms
// straddling that decomposition mean alpha does not refine beta.
inline std::vector<int> partition_symbol_map(const Partition& alpha, const Partition& beta) {
  std::vector<int> map(static_cast<std::size_t>(alpha.alphabet_size()) + 1, 1);
  for (int i = 2; i <= alpha.alphabet_size(); ++i) {
    const IntervalSet& a = alpha.atom(i);
    if (a.empty()) continue;  // carries no mass, keep the placeholder at 1
    if (a.is_disjoint_from(beta.support())) continue;  // inside the implicit atom
    int home = 0;
    for (int j = 2; j <= beta.alphabet_size(); ++j)
      if (a.is_subset_of(beta.atom(j))) {
        home = j;
        break;
      }
    require(home != 0, ErrorKind::kNotRefining,
            "atom " + std::to_string(i) + " is not inside any atom of the coarser partition");
    map[static_cast<std::size_t>(i)] = home;
  }
  return map;
}

struct CopyResult {
  Partition alpha;
  StandardTower tower;  // level names rewritten to the donated fibers
  Rational moved_mass;
  std::vector<std::size_t> r_columns;  // bad columns with no donor, left untouched
  std::vector<std::pair<std::size_t, std::size_t>> donors;  // (bad column, donor)
};

// Overwrites each bad column's fiber name with the name of a good column in
// the same beta-name class (donor: largest base measure, ties to the lowest
// id). Interval mass moves between alpha atoms accordingly; the coarser
// partition's atoms, and in particular the support, are untouched.
inline CopyResult copy_good_names(const StandardTower& t, const Partition& alpha,
                                  const Partition& beta, const std::vector<std::size_t>& bad) {
  require(alpha.support() == beta.support(), ErrorKind::kPrecondition,
          "supports differ, names cannot be copied within beta classes");
  std::vector<int> to_beta = partition_symbol_map(alpha, beta);

  std::vector<bool> is_bad(t.principal_columns.size(), false);
  for (std::size_t i : bad) {
    require(i < t.principal_columns.size(), ErrorKind::kPrecondition,
            "bad column id out of range");
    is_bad[i] = true;
  }

  auto beta_key = [&](const Column& col) {
    Word fiber = column_fiber_word(col);
    std::string key;
    for (int s : fiber.symbols) {
      key += std::to_string(to_beta[static_cast<std::size_t>(s)]);
      key += ',';
    }
    return key;
  };

  // donor per beta-name class
  std::map<std::string, std::size_t> donor;
  for (std::size_t i = 0; i < t.principal_columns.size(); ++i) {
    if (is_bad[i]) continue;
    std::string key = beta_key(t.principal_columns[i]);
    auto it = donor.find(key);
    if (it == donor.end() ||
        t.principal_columns[i].base.measure() > t.principal_columns[it->second].base.measure())
      donor[key] = i;
  }

  CopyResult out;
  out.moved_mass = 0;
  out.tower = t;
  std::vector<IntervalSet> atoms = alpha.finite_atoms();
  for (std::size_t i : bad) {
    Column& col = out.tower.principal_columns[i];
    auto it = donor.find(beta_key(col));
    if (it == donor.end()) {
      out.r_columns.push_back(i);
      continue;
    }
    out.donors.emplace_back(i, it->second);
    const Column& g = t.principal_columns[it->second];
    Word mine = column_fiber_word(col);
    Word theirs = column_fiber_word(g);
    for (long long j = 0; j < col.height; ++j) {
      int from = mine.symbols[static_cast<std::size_t>(j)];
      int to = theirs.symbols[static_cast<std::size_t>(j)];
      if (from == to) continue;
      require((from == 1) == (to == 1), ErrorKind::kNotRefining,
              "donor name crosses the support boundary");
      const IntervalSet& level = col.level_sets[static_cast<std::size_t>(j)];
      out.moved_mass += level.measure();
      if (from != 1)
        atoms[static_cast<std::size_t>(from - 2)] =
            atoms[static_cast<std::size_t>(from - 2)].set_diff(level);
      if (to != 1)
        atoms[static_cast<std::size_t>(to - 2)] =
            atoms[static_cast<std::size_t>(to - 2)].set_union(level);
      col.level_names[static_cast<std::size_t>(j)] = std::to_string(to);
    }
  }
  out.alpha = Partition(std::move(atoms));
  require(out.alpha.support() == alpha.support(), ErrorKind::kInconsistentTower,
          "copying names changed the support");
  return out;
}

// ---- the inductive schedule ----

enum class UniformizeMode { kInitial, kRefining };

struct UniformizerParams {
  Rational epsilon = Rational(1, 2);
  long long first_floor = 8;      // height floor of the first tower
  int alpha0_symbols = 0;         // #alpha_0, set by uniformize; feeds c_n
  int report_n_max = 1;           // window count of the closing certificate
  std::size_t sample_count = 12;  // sampling width of the certificate
  int max_retries = 4;            // floor doublings allowed per step
  std::vector<Rational> delta_override;  // per-step budgets, when nonempty

  // c_1 = 1, c_n = (#alpha_0)^(2n-1); delta_n = epsilon / (2^(n+2) c_n)
  Rational delta(int n) const {
    require(n >= 1, ErrorKind::kPrecondition, "steps are numbered from 1");
    if (!delta_override.empty()) {
      require(static_cast<std::size_t>(n) <= delta_override.size(), ErrorKind::kPrecondition,
              "no delta override for step " + std::to_string(n));
      return delta_override[static_cast<std::size_t>(n - 1)];
    }
    Rational denom = 1;
    for (int i = 0; i < n + 2; ++i) denom *= 2;
    if (n >= 2) {
      require(alpha0_symbols >= 2, ErrorKind::kPrecondition, "alphabet size not set");
      for (int i = 0; i < 2 * n - 1; ++i) denom *= alpha0_symbols;
    }
    return epsilon / denom;
  }
};

struct StepLog {
  int step = 0;
  long long floor = 0;  // height floor the tower was built at
  int retries = 0;      // floor doublings it took to meet the budget
  Rational delta;        // budget
  Rational d_increment;  // d(alpha_{n-1}, alpha_n), exact
  Rational bad_mass;     // mass renamed or rewritten
  std::vector<std::size_t> bad_columns;
  std::vector<std::size_t> r_columns;  // refining mode only
  long long column_count = 0;
  long long min_height = 0, max_height = 0;
  long long min_hits = 0, max_hits = 0;    // m_n, M_n over surviving columns
  BigInt certified_threshold = 0;          // ceil(2 M_n / delta_n) + 1
};

struct StepOutcome {
  Partition alpha;
  StandardTower tower;
  StepLog log;
};

namespace detail {

inline BigInt ceil_rational(const Rational& q) {
  BigInt n = num(q), d = den(q);
  if (n <= 0) return 0;
  return (n + d - 1) / d;
}

inline void summarize_tower(const StandardTower& t, StepLog& log) {
  log.column_count = static_cast<long long>(t.principal_columns.size());
  bool first = true;
  for (const auto& col : t.principal_columns) {
    long long hits = column_hit_count(col);
    if (first) {
      log.min_height = log.max_height = col.height;
      log.min_hits = log.max_hits = hits;
      first = false;
    } else {
      log.min_height = std::min(log.min_height, col.height);
      log.max_height = std::max(log.max_height, col.height);
      log.min_hits = std::min(log.min_hits, hits);
      log.max_hits = std::max(log.max_hits, hits);
    }
  }
}

}  // namespace detail

// One inductive step: build (or refine) a K-standard tower at the height
// floor, split it to constant-name columns, compare each fiber against the
// exact (2n-1)-block reference, and repair the deviant columns. A step whose
// distance increment would blow its budget is retried at doubled floors:
// taller towers mean more hits per fiber, so edge effects fade and the bad
// mass shrinks below any fixed budget eventually.
inline StepOutcome uniformize_step(RankOneEngine& eng, const Partition& alpha_prev,
                                   const IntervalSet& K, const UniformizerParams& params,
                                   int n, long depth, UniformizeMode mode,
                                   const Partition* beta = nullptr,
                                   const StandardTower* prev_tower = nullptr,
                                   long long floor_override = 0) {
  require(mode == UniformizeMode::kInitial || beta != nullptr, ErrorKind::kPrecondition,
          "refining mode needs the coarser partition");
  Rational delta = params.delta(n);

  long long floor = floor_override;
  if (floor == 0) {
    if (prev_tower == nullptr) {
      floor = params.first_floor;
    } else {
      long long h_max = 0, M_prev = 0;
      for (const auto& col : prev_tower->principal_columns) {
        h_max = std::max(h_max, col.height);
        M_prev = std::max(M_prev, column_hit_count(col));
      }
      floor = h_max * (M_prev + 4);  // forces the new min hit count past M_prev
    }
  }

  std::map<Word, Rational> ref = reference_block_distribution(eng, alpha_prev, n, depth);

  auto attempt = [&](long long fl) {
    StandardTower t = prev_tower == nullptr ? build_K_standard(eng, K, fl, depth)
                                            : refine_K_standard(eng, *prev_tower, K, fl, depth);
    StandardTower r = refine_according_to(eng, t, alpha_prev, depth);
    std::vector<std::size_t> bad = detect_bad_columns(r, n, delta, ref);

    StepOutcome out;
    out.log.step = n;
    out.log.floor = fl;
    out.log.delta = delta;
    out.log.bad_columns = bad;
    if (mode == UniformizeMode::kInitial) {
      RenameResult res = rename_bad_to_one(r, alpha_prev, bad);
      out.alpha = std::move(res.alpha);
      out.tower = std::move(res.tower);
      out.log.bad_mass = res.moved_mass;
    } else {
      CopyResult res = copy_good_names(r, alpha_prev, *beta, bad);
      out.alpha = std::move(res.alpha);
      out.tower = std::move(res.tower);
      out.log.bad_mass = res.moved_mass;
      out.log.r_columns = std::move(res.r_columns);
    }
    out.log.d_increment = partition_distance(alpha_prev, out.alpha).value();
    return out;
  };

  StepOutcome out = attempt(floor);
  for (int r = 0; r < params.max_retries && out.log.d_increment >= delta; ++r) {
    floor *= 2;
    out = attempt(floor);
    out.log.retries = r + 1;
  }
  require(out.log.d_increment < delta, ErrorKind::kPrecondition,
          "step " + std::to_string(n) + " increment " + to_string(out.log.d_increment) +
              " exceeds its budget " + to_string(delta) + " after " +
              std::to_string(params.max_retries) + " retries");

  detail::summarize_tower(out.tower, out.log);
  out.log.certified_threshold =
      detail::ceil_rational(Rational(2 * out.log.max_hits) / delta) + 1;
  return out;
}

struct UniformizeResult {
  Partition alpha;
  std::vector<StepLog> steps;
  Rational total_increment = 0;
  bool hit_growth_ok = true;  // min hits exceeded the previous max at every step
  std::map<Word, UniformityVerdict> certificate;
};

// Runs the inductive schedule for a fixed number of steps. Initial mode
// renames deviant columns into the infinite atom (support shrinks); refining
// mode copies donor names within beta classes (support fixed). The summed
// increments stay under epsilon because the budgets telescope.
inline UniformizeResult uniformize(RankOneEngine& eng, const Partition& alpha0,
                                   const Rational& epsilon, int steps, UniformizeMode mode,
                                   const Partition* beta, long depth,
                                   UniformizerParams params = {}) {
  require(epsilon > 0 && epsilon <= 1, ErrorKind::kPrecondition, "epsilon must lie in (0,1]");
  require(steps >= 0, ErrorKind::kPrecondition, "negative step count");
  alpha0.validate_strict();
  if (mode == UniformizeMode::kRefining) {
    require(beta != nullptr, ErrorKind::kPrecondition, "refining mode needs beta");
    beta->validate_strict();
    require(alpha0.support() == beta->support(), ErrorKind::kPrecondition,
            "refining mode requires equal supports");
    partition_symbol_map(alpha0, *beta);  // throws kNotRefining unless alpha0 refines beta
  }
  params.epsilon = epsilon;
  params.alpha0_symbols = alpha0.alphabet_size();

  UniformizeResult out;
  out.alpha = alpha0;
  StandardTower tower;
  for (int n = 1; n <= steps; ++n) {
    IntervalSet K = mode == UniformizeMode::kRefining ? beta->support() : out.alpha.support();
    StepOutcome so = uniformize_step(eng, out.alpha, K, params, n, depth, mode, beta,
                                     n == 1 ? nullptr : &tower);
    if (n > 1 && so.log.min_hits <= out.steps.back().max_hits) out.hit_growth_ok = false;
    if (mode == UniformizeMode::kInitial)
      require(so.alpha.support().is_subset_of(out.alpha.support()), ErrorKind::kInconsistentTower,
              "support grew during an initial-mode step");
    else
      require(so.alpha.support() == beta->support(), ErrorKind::kInconsistentTower,
              "support drifted during a refining-mode step");
    out.total_increment += so.log.d_increment;
    out.steps.push_back(so.log);
    out.alpha = std::move(so.alpha);
    tower = std::move(so.tower);
  }
  require(out.total_increment < epsilon, ErrorKind::kPrecondition,
          "summed increments reached epsilon; budgets were violated");

  out.certificate = partition_uniformity_test(eng, out.alpha, params.report_n_max, epsilon,
                                              depth, {}, params.sample_count);
  return out;
}

}  // namespace towerforge
