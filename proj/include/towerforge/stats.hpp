#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/tower.hpp"

namespace towerforge {

// Two-sided orbit window of one point, resolved against a single stage.
// values[i - lo] = T^i(point); [lo, hi] is the largest index range the stage
// supports, clipped to the requested range. Within one stage T translates
// level j onto level j+1, so the whole trace needs only one locate().
struct OrbitTrace {
  Rational point;
  long long lo = 0;
  long long hi = 0;
  std::vector<Rational> values;

  const Rational& at(long long i) const { return values[static_cast<std::size_t>(i - lo)]; }
  bool covers(long long a, long long b) const { return lo <= a && b <= hi; }
  // Largest N with [-N, N-1] inside the trace.
  long long max_horizon() const { return std::min(-lo, hi + 1); }
};

inline OrbitTrace trace_orbit(RankOneEngine& eng, const Rational& y, long long want_lo,
                              long long want_hi, long depth) {
  require(want_lo <= 0 && want_hi >= 0, ErrorKind::kPrecondition,
          "trace window must contain index 0");
  const StageTower& t = eng.stage(depth);
  auto [j, off] = t.locate(y);
  OrbitTrace tr;
  tr.point = y;
  tr.lo = std::max(want_lo, -j);
  tr.hi = std::min(want_hi, t.height() - 1 - j);
  tr.values.reserve(static_cast<std::size_t>(tr.hi - tr.lo + 1));
  for (long long i = tr.lo; i <= tr.hi; ++i)
    tr.values.push_back(t.level_left(j + i) + off);
  return tr;
}

// Cumulative membership counts over a trace; count(a, b) is O(1).
class PrefixCounts {
 public:
  PrefixCounts(const OrbitTrace& tr, const IntervalSet& set) : lo_(tr.lo) {
    cum_.reserve(tr.values.size() + 1);
    cum_.push_back(0);
    for (const auto& v : tr.values) cum_.push_back(cum_.back() + (set.contains(v) ? 1 : 0));
  }
  // membership count over orbit indices [a, b], both inside the trace
  long long count(long long a, long long b) const {
    if (b < a) return 0;
    return cum_[static_cast<std::size_t>(b - lo_ + 1)] - cum_[static_cast<std::size_t>(a - lo_)];
  }

 private:
  long long lo_;
  std::vector<long long> cum_;
};

// T_N f = sum_{i=-N}^{N-1} f(T^i y) for f the indicator of f_set.
inline long long birkhoff_sum(RankOneEngine& eng, const IntervalSet& f_set, const Rational& y,
                              long long N, long depth) {
  require(N >= 0, ErrorKind::kPrecondition, "negative horizon");
  if (N == 0) return 0;
  const StageTower& t = eng.stage(depth);
  auto [j, off] = t.locate(y);
  if (j < N)
    throw NeedsDeeperStage("orbit index " + std::to_string(-N) + " falls below the base", -N);
  if (j + N - 1 >= t.height())
    throw NeedsDeeperStage("orbit index " + std::to_string(N - 1) + " passes the top", N - 1);
  long long hits = 0;
  for (long long i = -N; i <= N - 1; ++i)
    if (f_set.contains(t.level_left(j + i) + off)) ++hits;
  return hits;
}

// ---- deterministic sampling ----

// Point at relative mass u inside K (u in [0,1)), walking pieces in order.
inline Rational quantile_point(const IntervalSet& K, const Rational& u) {
  require(!K.empty(), ErrorKind::kPrecondition, "quantile of empty set");
  require(u >= 0 && u < 1, ErrorKind::kPrecondition, "quantile parameter outside [0,1)");
  Rational target = u * K.measure();
  for (const auto& p : K.pieces()) {
    Rational len = p.hi - p.lo;
    if (target < len) return p.lo + target;
    target -= len;
  }
  return K.pieces().back().lo;  // unreachable for u < 1
}

// Fibonacci rotation by 377/610 (golden-section convergent), pushed into K by
// exact quantile. Deterministic, and distinct for count <= 610.
inline std::vector<Rational> low_discrepancy_points(const IntervalSet& K, std::size_t count) {
  std::vector<Rational> out;
  out.reserve(count);
  long long acc = 0;
  for (std::size_t j = 0; j < count; ++j) {
    acc = (acc + 377) % 610;
    out.push_back(quantile_point(K, Rational(acc, 610)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<Rational> tower_base_midpoints(const StandardTower& t) {
  std::vector<Rational> out;
  for (const auto& col : t.principal_columns)
    for (const auto& p : col.base.pieces()) out.push_back((p.lo + p.hi) / 2);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Low-discrepancy points in K, plus any tower-base midpoints that land in K.
inline std::vector<Rational> sample_points(const IntervalSet& K, std::size_t count,
                                           const StandardTower* t = nullptr) {
  std::vector<Rational> out = low_discrepancy_points(K, count);
  if (t != nullptr)
    for (const auto& m : tower_base_midpoints(*t))
      if (K.contains(m)) out.push_back(m);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---- Hopf ratio scan ----

struct RatioRow {
  Rational point;
  long long horizon = 0;
  bool resolved = false;  // false: window not coverable at this depth
  long long hits_K = 0;   // T_N 1_K
  long long hits_C = 0;   // T_N 1_C
  std::optional<Rational> ratio;      // hits_C / hits_K, absent when hits_K == 0
  std::optional<Rational> deviation;  // |ratio - target|
};

struct RatioReport {
  Rational target;  // nu(C)/nu(K)
  std::vector<Rational> points;
  std::vector<long long> horizons;
  std::vector<RatioRow> rows;  // sorted by (point, horizon)

  std::optional<Rational> max_deviation(long long horizon) const {
    std::optional<Rational> best;
    for (const auto& r : rows)
      if (r.horizon == horizon && r.deviation && (!best || *r.deviation > *best))
        best = r.deviation;
    return best;
  }
};

inline RatioReport hopf_ratio_scan(RankOneEngine& eng, const IntervalSet& C, const IntervalSet& K,
                                   const std::vector<Rational>& samples,
                                   const std::vector<long long>& horizons, long depth) {
  require(!K.empty() && K.measure() > 0, ErrorKind::kPrecondition, "K must have positive measure");
  require(C.is_subset_of(K), ErrorKind::kPrecondition, "C must be a subset of K");
  require(!C.empty() && C.measure() > 0, ErrorKind::kPrecondition, "C must have positive measure");

  RatioReport rep;
  rep.target = C.measure() / K.measure();
  rep.points = samples;
  std::sort(rep.points.begin(), rep.points.end());
  rep.points.erase(std::unique(rep.points.begin(), rep.points.end()), rep.points.end());
  rep.horizons = horizons;
  std::sort(rep.horizons.begin(), rep.horizons.end());
  rep.horizons.erase(std::unique(rep.horizons.begin(), rep.horizons.end()), rep.horizons.end());

  long long hmax = rep.horizons.empty() ? 0 : rep.horizons.back();
  for (const auto& y : rep.points) {
    OrbitTrace tr = trace_orbit(eng, y, -hmax, std::max(0LL, hmax - 1), depth);
    PrefixCounts inK(tr, K), inC(tr, C);
    for (long long N : rep.horizons) {
      RatioRow row;
      row.point = y;
      row.horizon = N;
      if (N == 0 || tr.covers(-N, N - 1)) {
        row.resolved = true;
        row.hits_K = inK.count(-N, N - 1);
        row.hits_C = inC.count(-N, N - 1);
        if (row.hits_K > 0) {
          row.ratio = Rational(row.hits_C, 1) / Rational(row.hits_K, 1);
          row.deviation = abs(*row.ratio - rep.target);
        }
      }
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

inline std::string ratio_report_csv(const RatioReport& rep) {
  std::ostringstream os;
  os << "point,N,hit_count,ratio_num,ratio_den,deviation\n";
  for (const auto& r : rep.rows) {
    if (!r.resolved) continue;
    os << to_string(r.point) << "," << r.horizon << "," << r.hits_K << ",";
    if (r.ratio)
      os << num(*r.ratio) << "," << den(*r.ratio) << "," << to_string(*r.deviation);
    else
      os << ",,";
    os << "\n";
  }
  return os.str();
}

// Plot data: one line per horizon with the worst deviation, decimal with the
// declared digit count.
inline std::string ratio_plot_data(const RatioReport& rep, unsigned digits = 12) {
  std::ostringstream os;
  os << "N,max_deviation\n";
  for (long long N : rep.horizons)
    if (auto d = rep.max_deviation(N)) os << N << "," << decimal_string(*d, digits) << "\n";
  return os.str();
}

// ---- uniformity test ----

struct UniformityWitness {
  Rational point;
  long long horizon = 0;
  long long hit_count = 0;
  Rational deviation;
};

struct UniformityVerdict {
  Rational epsilon;
  std::optional<long long> m_found;
  std::vector<UniformityWitness> witnesses;  // violations surviving the largest m
  long long max_hit_seen = 0;
  long long pairs_tested = 0;
};

namespace detail {

// Shared verdict builder: per (point, N) pair the K-hit count and the exact
// deviation of hits_C/hits_K from target, already computed by the caller.
struct PairSink {
  Rational epsilon;
  std::vector<long long> schedule;  // ascending
  long long viol_max_hit = -1;
  std::vector<UniformityWitness> worst;
  long long max_hit = 0;
  long long pairs = 0;

  void feed(const Rational& point, long long N, long long hit, const Rational& deviation) {
    ++pairs;
    max_hit = std::max(max_hit, hit);
    if (deviation < epsilon) return;
    viol_max_hit = std::max(viol_max_hit, hit);
    if (hit >= schedule.back() && worst.size() < 64)
      worst.push_back({point, N, hit, deviation});
  }

  UniformityVerdict verdict() const {
    UniformityVerdict v;
    v.epsilon = epsilon;
    v.max_hit_seen = max_hit;
    v.pairs_tested = pairs;
    for (long long m : schedule)
      if (m > viol_max_hit) {
        v.m_found = m;
        break;
      }
    if (!v.m_found) v.witnesses = worst;
    return v;
  }
};

}  // namespace detail

// Empirical check of "T_N 1_K(y) >= m implies |T_N 1_C / T_N 1_K - target| <
// epsilon" over the sampled points and every horizon the depth supports.
// Returns the smallest schedule entry m that no sampled pair defeats.
inline UniformityVerdict uniformity_test(RankOneEngine& eng, const IntervalSet& C,
                                         const IntervalSet& K, const Rational& epsilon,
                                         const std::vector<long long>& m_schedule,
                                         const std::vector<Rational>& samples, long depth) {
  require(!K.empty() && K.measure() > 0, ErrorKind::kPrecondition, "K must have positive measure");
  require(epsilon > 0, ErrorKind::kPrecondition, "epsilon must be positive");
  require(!m_schedule.empty(), ErrorKind::kPrecondition, "empty m schedule");

  detail::PairSink sink;
  sink.epsilon = epsilon;
  sink.schedule = m_schedule;
  std::sort(sink.schedule.begin(), sink.schedule.end());
  Rational target = C.measure() / K.measure();

  long long hmax = eng.stage(depth).height();
  for (const auto& y : samples) {
    require(K.contains(y), ErrorKind::kPrecondition,
            "sample point " + to_string(y) + " outside K");
    OrbitTrace tr = trace_orbit(eng, y, -hmax, hmax, depth);
    PrefixCounts inK(tr, K), inC(tr, C);
    for (long long N = 1; N <= tr.max_horizon(); ++N) {
      long long hk = inK.count(-N, N - 1);
      if (hk == 0) continue;
      Rational ratio = Rational(inC.count(-N, N - 1), 1) / Rational(hk, 1);
      sink.feed(y, N, hk, abs(ratio - target));
    }
  }
  return sink.verdict();
}

inline std::vector<long long> default_m_schedule() {
  std::vector<long long> s;
  for (long long m = 1; m <= (1LL << 20); m *= 2) s.push_back(m);
  return s;
}

// Runs the uniformity test for every finite-measure atom of the joins
// alpha_{-n}^{n-1}, n = 0..n_max, against K = support(alpha). Atom indicators
// are evaluated symbolically (window of the point's alpha-name), so tail parts
// of the atoms beyond any interval realization are counted correctly; targets
// use the exact cylinder measures.
inline std::map<Word, UniformityVerdict> partition_uniformity_test(
    RankOneEngine& eng, const Partition& alpha, long long n_max, const Rational& epsilon,
    long depth, std::vector<long long> m_schedule = {}, std::size_t sample_count = 12) {
  require(alpha.alphabet_size() >= 2, ErrorKind::kPrecondition, "partition has no finite atoms");
  require(n_max >= 0, ErrorKind::kPrecondition, "negative window count");
  if (m_schedule.empty()) m_schedule = default_m_schedule();
  std::sort(m_schedule.begin(), m_schedule.end());

  IntervalSet K = alpha.support();
  Rational K_mass = alpha.support_measure();
  require(K_mass > 0, ErrorKind::kPrecondition, "partition support has measure zero");

  // collect the words to test
  std::set<Word> words;
  for (int s = 2; s <= alpha.alphabet_size(); ++s) {
    Word w;
    w.offset = 0;
    w.symbols = {s};
    words.insert(w);
  }
  for (long long n = 1; n <= n_max; ++n) {
    JoinResult jr = iterated_join(eng, alpha, -n, n - 1, depth);
    for (const auto& w : jr.atom_words) words.insert(w);
  }

  // one symbol trace per sample, shared across all words
  struct Trace {
    Rational point;
    long long lo, hi;
    std::vector<int> name;  // alpha-symbols along the orbit
  };
  std::vector<Trace> traces;
  long long hmax = eng.stage(depth).height();
  for (const auto& y : sample_points(K, sample_count)) {
    OrbitTrace tr = trace_orbit(eng, y, -hmax, hmax, depth);
    Trace t;
    t.point = y;
    t.lo = tr.lo;
    t.hi = tr.hi;
    t.name.reserve(tr.values.size());
    for (const auto& v : tr.values) t.name.push_back(alpha.symbol_at(v));
    traces.push_back(std::move(t));
  }

  std::map<Word, UniformityVerdict> out;
  for (const auto& w : words) {
    MeasureValue mv = exact_word_measure(eng, alpha, w, depth);
    require(!mv.is_infinite(), ErrorKind::kPrecondition,
            "infinite-measure atom in uniformity sweep: " + w.str());
    Rational target = mv.value() / K_mass;
    long long len = w.length();

    detail::PairSink sink;
    sink.epsilon = epsilon;
    sink.schedule = m_schedule;
    for (const auto& t : traces) {
      // match[i] = 1 iff the atom of w contains T^i(point)
      long long ilo = t.lo - w.offset;
      long long ihi = t.hi - w.offset - (len - 1);
      if (ihi < ilo) continue;
      std::vector<long long> cumK(1, 0), cumW(1, 0);
      for (long long i = ilo; i <= ihi; ++i) {
        bool hit = true;
        for (long long k = 0; k < len && hit; ++k)
          hit = t.name[static_cast<std::size_t>(i + w.offset + k - t.lo)] ==
                w.symbols[static_cast<std::size_t>(k)];
        cumW.push_back(cumW.back() + (hit ? 1 : 0));
        cumK.push_back(cumK.back() +
                       (t.name[static_cast<std::size_t>(i - t.lo)] != 1 ? 1 : 0));
      }
      auto count = [&](const std::vector<long long>& cum, long long a, long long b) {
        return cum[static_cast<std::size_t>(b - ilo + 1)] - cum[static_cast<std::size_t>(a - ilo)];
      };
      long long Nmax = std::min(-ilo, ihi + 1);
      for (long long N = 1; N <= Nmax; ++N) {
        long long hk = count(cumK, -N, N - 1);
        if (hk == 0) continue;
        Rational ratio = Rational(count(cumW, -N, N - 1), 1) / Rational(hk, 1);
        sink.feed(t.point, N, hk, abs(ratio - target));
      }
    }
    out.emplace(w, sink.verdict());
  }
  return out;
}

// Exact K-mass covered by fibers of t making at least n visits to K. A
// column's fiber visit count is the number of its levels inside K, so the
// computation is column-wise and exact.
inline MeasureValue fiber_hit_coverage(const StandardTower& t, const IntervalSet& K,
                                       long long n) {
  Rational covered = 0;
  for (std::size_t c = 0; c < t.principal_columns.size(); ++c) {
    const Column& col = t.principal_columns[c];
    long long hits = 0;
    for (const auto& level : col.level_sets) {
      if (level.is_subset_of(K)) {
        ++hits;
      } else {
        require(level.is_disjoint_from(K), ErrorKind::kTowerNotRefinedByK,
                "column " + std::to_string(c) + " has a level straddling K");
      }
    }
    if (hits >= n) covered += col.base.measure() * hits;
  }
  return MeasureValue(covered);
}

// ---- symbolic walks and cylinders ----
//
// Both a cylinder spec and a long finite read of a single sequence are carried
// as Words: the cylinder [w] is the set of bi-infinite sequences agreeing with
// w.symbols starting at coordinate w.offset.

inline bool walk_covers(const Word& walk, long long a, long long b) {
  return walk.offset <= a && b <= walk.offset + walk.length() - 1;
}

// Whether the shifted sequence S^shift x lies in [cyl], for x read from walk.
inline bool cylinder_hit(const Word& walk, const Word& cyl, long long shift) {
  long long a = cyl.offset + shift;
  require(walk_covers(walk, a, a + cyl.length() - 1), ErrorKind::kWindowOutOfRange,
          "walk does not determine the shift-" + std::to_string(shift) + " hit");
  for (long long k = 0; k < cyl.length(); ++k)
    if (walk.symbols[static_cast<std::size_t>(a + k - walk.offset)] !=
        cyl.symbols[static_cast<std::size_t>(k)])
      return false;
  return true;
}

// S_N 1_[cyl](x) = number of shifts i in [-N, N-1] with S^i x in [cyl].
inline long long cylinder_count(const Word& walk, const Word& cyl, long long N) {
  require(N >= 0, ErrorKind::kPrecondition, "negative horizon");
  long long hits = 0;
  for (long long i = -N; i <= N - 1; ++i)
    if (cylinder_hit(walk, cyl, i)) ++hits;
  return hits;
}

// Largest N such that every shift in [-N, N-1] of cyl is determined by walk.
inline long long max_cylinder_horizon(const Word& walk, const Word& cyl) {
  long long left = cyl.offset - walk.offset;                                    // max N with -N >= -left
  long long right = (walk.offset + walk.length()) - (cyl.offset + cyl.length());  // max N-1 = right
  return std::max(0LL, std::min(left, right + 1));
}

struct OrbitBoundednessVerdict {
  bool detected = false;        // counting-measure regime: K-hits stopped growing
  bool low_confidence = false;  // zero budget, or walk exhausted before the budget
  long long examined_horizon = 0;
  long long last_growth_horizon = 0;  // largest N where S_N 1_K grew; 0 if never
  long long hit_count = 0;            // S_N 1_K at the examined horizon
};

// S_N 1_K stalling for a factor-8 margin past its last growth is taken as
// evidence of a bounded orbit (the HK-style visit gaps only grow ~4x).
inline OrbitBoundednessVerdict bounded_orbit_detect(const Word& walk, const Word& K,
                                                    long long budget) {
  require(budget >= 0, ErrorKind::kPrecondition, "negative budget");
  OrbitBoundednessVerdict v;
  if (budget == 0) {
    v.detected = true;
    v.low_confidence = true;
    return v;
  }
  long long nmax = max_cylinder_horizon(walk, K);
  if (nmax < budget) v.low_confidence = true;
  v.examined_horizon = std::min(budget, nmax);
  long long count = 0;
  for (long long N = 1; N <= v.examined_horizon; ++N) {
    long long c = count + (cylinder_hit(walk, K, N - 1) ? 1 : 0) +
                  (cylinder_hit(walk, K, -N) ? 1 : 0);
    if (c > count) v.last_growth_horizon = N;
    count = c;
  }
  v.hit_count = count;
  v.detected = v.examined_horizon >= 8 * v.last_growth_horizon;
  return v;
}

struct RadonRow {
  long long horizon = 0;
  long long count_A = 0;
  long long count_K = 0;
  std::optional<Rational> ratio;  // absent while count_K == 0
};

// Ratio-limit estimator S_N 1_A / S_N 1_K along a single walk.
inline std::vector<RadonRow> radon_estimate(const Word& walk, const Word& A, const Word& K,
                                            const std::vector<long long>& horizons) {
  require(!horizons.empty(), ErrorKind::kPrecondition, "no horizons requested");
  long long top = *std::max_element(horizons.begin(), horizons.end());
  OrbitBoundednessVerdict b = bounded_orbit_detect(walk, K, top);
  if (b.detected)
    fail(ErrorKind::kBoundedOrbitDetected,
         "K-hit count stalled at " + std::to_string(b.hit_count) + " since horizon " +
             std::to_string(b.last_growth_horizon));
  std::vector<RadonRow> rows;
  for (long long N : horizons) {
    RadonRow r;
    r.horizon = N;
    r.count_A = cylinder_count(walk, A, N);
    r.count_K = cylinder_count(walk, K, N);
    if (r.count_K > 0) r.ratio = Rational(r.count_A, 1) / Rational(r.count_K, 1);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- invariant-Radon-measure criteria ----

struct CylinderCase {
  std::string label;
  Word cylinder;
  Rational exact_ratio;  // invariant-measure value mu(A)/mu(K) from the model
};

struct CriteriaWitness {
  long long start = 0;
  long long horizon = 0;
  long long hit_count = 0;
  Rational ratio;
};

struct CylinderCriteria {
  std::string label;
  Rational c_estimate;  // ratio at the widest horizon from the central start
  std::optional<long long> m_found;
  std::vector<CriteriaWitness> witnesses;
  Rational exact_ratio;
  Rational exact_gap;  // |c_estimate - exact_ratio|
  bool ratio_matches_exact = false;
  bool consistent = false;
};

struct CriteriaReport {
  std::vector<CylinderCriteria> cases;
  std::vector<long long> starts;
  bool all_consistent = true;
};

// Checks, per cylinder A: (1) ratio stability uniform over starting positions
// along the walk, via an m-threshold search against the central estimate; and
// (3) agreement of that estimate with the exact invariant-measure ratio.
inline CriteriaReport radon_criteria_check(const Word& walk, const Word& K,
                                           const std::vector<CylinderCase>& cases,
                                           const std::vector<long long>& horizons,
                                           const Rational& epsilon,
                                           std::vector<long long> m_schedule = {}) {
  require(!horizons.empty(), ErrorKind::kPrecondition, "no horizons requested");
  require(epsilon > 0, ErrorKind::kPrecondition, "epsilon must be positive");
  if (m_schedule.empty()) m_schedule = default_m_schedule();
  std::sort(m_schedule.begin(), m_schedule.end());

  std::vector<long long> sorted_h = horizons;
  std::sort(sorted_h.begin(), sorted_h.end());
  long long top = sorted_h.back();

  CriteriaReport rep;
  // starting positions: the center plus up to 4 spaced shifts each way that
  // still leave room for the smallest horizon
  long long room = max_cylinder_horizon(walk, K) - sorted_h.front();
  long long step = std::max<long long>(1, top / 2);
  for (long long s = -4 * step; s <= 4 * step; s += step)
    if (s >= -room && s <= room) rep.starts.push_back(s);
  require(!rep.starts.empty() && std::count(rep.starts.begin(), rep.starts.end(), 0) == 1,
          ErrorKind::kWindowOutOfRange, "walk too short for the requested horizons");

  for (const auto& cs : cases) {
    CylinderCriteria cc;
    cc.label = cs.label;
    cc.exact_ratio = cs.exact_ratio;

    // shift-start counting: S_N 1_A(S^s x) = count with cylinder offset moved by s
    auto counts_at = [&](const Word& cyl, long long s, long long N) {
      Word shifted = cyl;
      shifted.offset += s;
      return cylinder_count(walk, shifted, N);
    };

    std::optional<Rational> center;
    long long viol_max_hit = -1;
    for (long long s : rep.starts) {
      for (long long N : sorted_h) {
        Word kshift = K, ashift = cs.cylinder;
        kshift.offset += s;
        ashift.offset += s;
        if (max_cylinder_horizon(walk, kshift) < N ||
            max_cylinder_horizon(walk, ashift) < N)
          continue;
        long long hk = counts_at(K, s, N);
        if (hk == 0) continue;
        Rational ratio = Rational(counts_at(cs.cylinder, s, N), 1) / Rational(hk, 1);
        if (s == 0) center = ratio;  // horizons ascend, so this ends at the widest
        CriteriaWitness w{s, N, hk, ratio};
        cc.witnesses.push_back(w);
      }
    }
    require(center.has_value(), ErrorKind::kBoundedOrbitDetected,
            "no K hits at the central start");
    cc.c_estimate = *center;

    std::vector<CriteriaWitness> violations;
    for (const auto& w : cc.witnesses)
      if (abs(w.ratio - cc.c_estimate) >= epsilon) {
        viol_max_hit = std::max(viol_max_hit, w.hit_count);
        violations.push_back(w);
      }
    for (long long m : m_schedule)
      if (m > viol_max_hit) {
        cc.m_found = m;
        break;
      }
    cc.witnesses.clear();
    if (!cc.m_found) cc.witnesses = violations;

    cc.exact_gap = abs(cc.c_estimate - cc.exact_ratio);
    cc.ratio_matches_exact = cc.exact_gap < epsilon;
    cc.consistent = cc.m_found.has_value() && cc.ratio_matches_exact;
    rep.all_consistent = rep.all_consistent && cc.consistent;
    rep.cases.push_back(std::move(cc));
  }
  return rep;
}

}  // namespace towerforge
