#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "errors.hpp"
#include "measure_value.hpp"
#include "partition.hpp"
#include "rankone.hpp"
#include "rational.hpp"
#include "uniformizer.hpp"

namespace towerforge {

// Depth-bounded symbolic factor: the language truncated to words of length
// <= depth together with exact cylinder measures. The shift space itself is
// never materialized; the all-1s fixed point enters only through the stored
// convention fixed_point_mass == 0.
struct SubshiftModel {
  int alphabet_size = 0;
  long long depth = 0;
  std::vector<std::vector<Word>> words;   // words[n-1]: sorted admissible length-n words, offset 0
  std::map<Word, MeasureValue> cylinder;  // keyed at offset 0
  Rational fixed_point_mass = 0;

  static Word normalize(const Word& w) {
    Word v = w;
    v.offset = 0;
    return v;
  }

  bool admissible(const Word& w) const {
    long long len = w.length();
    require(len >= 1 && len <= depth, ErrorKind::kWordTooLong,
            "stored language covers lengths 1 to " + std::to_string(depth));
    const auto& bucket = words[static_cast<std::size_t>(len - 1)];
    return std::binary_search(bucket.begin(), bucket.end(), normalize(w));
  }

  // Exact cylinder measure; inadmissible words carry measure zero.
  MeasureValue measure(const Word& w) const {
    if (!admissible(w)) return MeasureValue(Rational(0));
    return cylinder.at(normalize(w));
  }
};

// Builds the model by enumerating the language at every length up to
// word_depth and attaching exact cylinder measures. Factor consistency and
// additivity are audited during construction: a shortfall means some
// positive-measure word is not realizable inside the stage, so the caller
// must supply a deeper stage rather than trust a silently truncated model.
inline SubshiftModel build_subshift(RankOneEngine& eng, const Partition& alpha,
                                    long long word_depth, long stage_depth) {
  require(word_depth >= 1, ErrorKind::kPrecondition, "word depth must be >= 1");
  SubshiftModel m;
  m.alphabet_size = alpha.alphabet_size();
  m.depth = word_depth;
  for (long long n = 1; n <= word_depth; ++n) {
    m.words.push_back(language(eng, alpha, n, stage_depth));
    for (const Word& w : m.words.back()) m.cylinder[w] = exact_word_measure(eng, alpha, w, stage_depth);
  }

  for (long long n = 1; n < word_depth; ++n) {
    const auto& cur = m.words[static_cast<std::size_t>(n - 1)];
    const auto& next = m.words[static_cast<std::size_t>(n)];
    // restriction: dropping either end of a longer word stays admissible
    for (const Word& v : next) {
      Word head{0, {v.symbols.begin(), v.symbols.end() - 1}};
      Word tail{0, {v.symbols.begin() + 1, v.symbols.end()}};
      require(m.admissible(head) && m.admissible(tail), ErrorKind::kNeedsDeeperStage,
              "extension " + v.str() + " restricts to a word missing at length " +
                  std::to_string(n));
    }
    // extension + additivity: finite cylinders split exactly over their
    // admissible one-symbol extensions (all-1 words stay infinite on both
    // sides, so there is nothing to compare)
    for (const Word& w : cur) {
      MeasureValue total{Rational(0)};
      bool extended = false;
      for (int a = 1; a <= m.alphabet_size; ++a) {
        Word wa = w;
        wa.symbols.push_back(a);
        if (!m.admissible(wa)) continue;
        extended = true;
        if (!w.all_ones()) total += m.cylinder.at(wa);
      }
      require(extended, ErrorKind::kNeedsDeeperStage,
              "word " + w.str() + " has no admissible extension at this depth");
      if (!w.all_ones())
        require(total == m.cylinder.at(w), ErrorKind::kNeedsDeeperStage,
                "cylinder additivity shortfall under " + w.str());
    }
  }
  return m;
}

// mu([u.v]) with u occupying coordinates [-|u|, 0) and v occupying [0, |v|).
// Shift invariance makes the anchored cylinder equal to the plain [uv] one;
// the empty cylinder is the whole space.
inline MeasureValue cylinder_measure(const SubshiftModel& m, const Word& u, const Word& v) {
  long long total = u.length() + v.length();
  require(total <= m.depth, ErrorKind::kWordTooLong,
          "cylinder needs words of length " + std::to_string(total) + " but the model stores " +
              std::to_string(m.depth));
  if (total == 0) return MeasureValue::infinite();
  Word uv;
  uv.offset = -u.length();
  uv.symbols = u.symbols;
  uv.symbols.insert(uv.symbols.end(), v.symbols.begin(), v.symbols.end());
  return m.measure(uv);
}

// Coordinate-wise symbol map between subshift alphabets, induced by atom
// containment of the underlying partitions. Total, and always fixes 1.
struct FactorMapTable {
  int domain_alphabet = 0;
  int range_alphabet = 0;
  std::vector<int> symbol_map;  // indexed 1..domain_alphabet; [0] unused

  int apply(int s) const {
    require(s >= 1 && s <= domain_alphabet, ErrorKind::kUnknownSymbol,
            "symbol " + std::to_string(s) + " outside alphabet of size " +
                std::to_string(domain_alphabet));
    return symbol_map[static_cast<std::size_t>(s)];
  }

  void validate() const {
    require(domain_alphabet >= 1 && range_alphabet >= 1 &&
                symbol_map.size() == static_cast<std::size_t>(domain_alphabet) + 1,
            ErrorKind::kPrecondition, "factor table shape mismatch");
    require(symbol_map[1] == 1, ErrorKind::kPrecondition, "factor maps must fix the symbol 1");
    for (int s = 1; s <= domain_alphabet; ++s) {
      int t = symbol_map[static_cast<std::size_t>(s)];
      require(t >= 1 && t <= range_alphabet, ErrorKind::kUnknownSymbol,
              "image of symbol " + std::to_string(s) + " leaves the range alphabet");
    }
  }

  bool operator==(const FactorMapTable&) const = default;
};

inline FactorMapTable factor_table(const Partition& alpha, const Partition& beta) {
  FactorMapTable t;
  t.domain_alphabet = alpha.alphabet_size();
  t.range_alphabet = beta.alphabet_size();
  t.symbol_map = partition_symbol_map(alpha, beta);
  t.validate();
  return t;
}

inline FactorMapTable identity_table(int alphabet) {
  require(alphabet >= 1, ErrorKind::kPrecondition, "alphabet must be >= 1");
  FactorMapTable t;
  t.domain_alphabet = alphabet;
  t.range_alphabet = alphabet;
  t.symbol_map.resize(static_cast<std::size_t>(alphabet) + 1);
  for (int s = 0; s <= alphabet; ++s) t.symbol_map[static_cast<std::size_t>(s)] = s;
  t.symbol_map[0] = 1;
  return t;
}

// outer after inner, as functions on symbols.
inline FactorMapTable compose(const FactorMapTable& outer, const FactorMapTable& inner) {
  inner.validate();
  outer.validate();
  require(inner.range_alphabet == outer.domain_alphabet, ErrorKind::kAlphabetMismatch,
          "composition needs inner range == outer domain");
  FactorMapTable t;
  t.domain_alphabet = inner.domain_alphabet;
  t.range_alphabet = outer.range_alphabet;
  t.symbol_map.assign(static_cast<std::size_t>(inner.domain_alphabet) + 1, 1);
  for (int s = 1; s <= inner.domain_alphabet; ++s)
    t.symbol_map[static_cast<std::size_t>(s)] = outer.apply(inner.apply(s));
  return t;
}

inline Word factor_word(const FactorMapTable& tbl, const Word& w) {
  Word out;
  out.offset = w.offset;
  out.symbols.reserve(w.symbols.size());
  for (int s : w.symbols) out.symbols.push_back(tbl.apply(s));
  return out;
}

// A finite chain of symbolic factors, coarsest first. connecting[i] maps the
// symbols of models[i+1] onto those of models[i].
struct InverseLimitTruncation {
  std::vector<SubshiftModel> models;
  std::vector<FactorMapTable> connecting;
};

struct InverseLimitReport {
  std::size_t levels = 0;
  long long composition_checks = 0;
  long long projection_checks = 0;
  long long pushforward_checks = 0;
};

namespace detail {

inline void inconsistent(const std::string& what, std::size_t l, std::size_t m, std::size_t n) {
  throw Error(ErrorKind::kInconsistentTower,
              what + " (levels " + std::to_string(l) + ", " + std::to_string(m) + ", " +
                  std::to_string(n) + ")");
}

}  // namespace detail

// Verifies the truncation is a genuine inverse system: connecting maps chain
// through every intermediate level, project admissible words onto admissible
// words, and push cylinder measures forward exactly. Level indices in error
// messages are 0-based positions in the chain.
inline InverseLimitReport inverse_limit_check(const InverseLimitTruncation& tr) {
  const std::size_t levels = tr.models.size();
  require(levels >= 2, ErrorKind::kPrecondition, "inverse limit needs at least two levels");
  require(tr.connecting.size() + 1 == levels, ErrorKind::kPrecondition,
          "need exactly one connecting map per consecutive pair");
  for (std::size_t i = 0; i + 1 < levels; ++i) {
    tr.connecting[i].validate();
    require(tr.connecting[i].domain_alphabet == tr.models[i + 1].alphabet_size &&
                tr.connecting[i].range_alphabet == tr.models[i].alphabet_size,
            ErrorKind::kAlphabetMismatch,
            "connecting map " + std::to_string(i) + " does not match its model alphabets");
  }

  InverseLimitReport rep;
  rep.levels = levels;

  // phi[n][m]: level-m symbols -> level-n symbols, m >= n
  std::vector<std::vector<FactorMapTable>> phi(levels, std::vector<FactorMapTable>(levels));
  for (std::size_t n = 0; n < levels; ++n) {
    phi[n][n] = identity_table(tr.models[n].alphabet_size);
    for (std::size_t m = n + 1; m < levels; ++m) phi[n][m] = compose(phi[n][m - 1], tr.connecting[m - 1]);
  }

  // composition law through every intermediate level
  for (std::size_t l = 0; l < levels; ++l)
    for (std::size_t m = l; m < levels; ++m)
      for (std::size_t n = m; n < levels; ++n) {
        if (compose(phi[l][m], phi[m][n]) != phi[l][n])
          detail::inconsistent("composition law fails", l, m, n);
        ++rep.composition_checks;
      }

  for (std::size_t n = 0; n < levels; ++n)
    for (std::size_t m = n + 1; m < levels; ++m) {
      const SubshiftModel& coarse = tr.models[n];
      const SubshiftModel& fine = tr.models[m];
      const FactorMapTable& map = phi[n][m];
      long long max_len = std::min(coarse.depth, fine.depth);

      // projection consistency: admissible words stay admissible downstairs
      for (long long len = 1; len <= max_len; ++len)
        for (const Word& w : fine.words[static_cast<std::size_t>(len - 1)]) {
          if (!coarse.admissible(factor_word(map, w)))
            detail::inconsistent("projection of " + w.str() + " is not admissible", n, n, m);
          ++rep.projection_checks;
        }

      // pushforward: each finite coarse cylinder is the exact sum of its
      // admissible preimages (inadmissible ones carry measure zero)
      for (long long len = 1; len <= max_len; ++len)
        for (const Word& v : coarse.words[static_cast<std::size_t>(len - 1)]) {
          if (v.all_ones()) continue;
          MeasureValue total{Rational(0)};
          for (const Word& w : fine.words[static_cast<std::size_t>(len - 1)])
            if (factor_word(map, w) == v) total += fine.cylinder.at(w);
          if (total != coarse.cylinder.at(v))
            detail::inconsistent("pushforward of " + v.str() + " mismatches", n, n, m);
          ++rep.pushforward_checks;
        }
    }
  return rep;
}

}  // namespace towerforge
