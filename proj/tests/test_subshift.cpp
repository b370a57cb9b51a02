#include <functional>
#include <map>
#include <vector>

#include <catch2/catch_amalgamated.hpp>
#include "towerforge/partition.hpp"
#include "towerforge/rankone.hpp"
#include "towerforge/subshift.hpp"

using namespace towerforge;

namespace {

IntervalSet iv(const Rational& a, const Rational& b) { return IntervalSet(a, b); }

Word sym_word(const std::string& s) {
  Word w;
  for (char c : s) w.symbols.push_back(c - '0');
  return w;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a towerforge::Error");
  return ErrorKind::kPrecondition;
}

}  // namespace

TEST_CASE("build_subshift stores the exact language and measures") {
  RankOneEngine eng(preset_spec("hajian-kakutani", 8), 8);
  Partition alpha({iv(0, 1)});
  SubshiftModel m = build_subshift(eng, alpha, 4, 7);

  CHECK(m.alphabet_size == 2);
  CHECK(m.depth == 4);
  CHECK(m.fixed_point_mass == 0);

  // length-1 language is {1, 2}; the K symbol has full mass, 1 is infinite
  REQUIRE(m.words[0].size() == 2);
  CHECK(m.measure(sym_word("2")) == MeasureValue(Rational(1)));
  CHECK(m.measure(sym_word("1")).is_infinite());

  // K visits come in exact pairs: 22 occurs, 222 never does
  CHECK(m.admissible(sym_word("22")));
  CHECK(!m.admissible(sym_word("222")));
  CHECK(m.measure(sym_word("222")).is_zero());
  CHECK(m.measure(sym_word("22")) == MeasureValue(Rational(1, 2)));

  // all-1 words are admissible at every stored length and stay infinite
  for (long long n = 1; n <= 4; ++n) {
    Word ones = constant_word(0, static_cast<std::size_t>(n), 1);
    CHECK(m.admissible(ones));
    CHECK(m.measure(ones).is_infinite());
  }

  // independent additivity oracle: re-sum every finite cylinder from the
  // stored map instead of trusting the constructor audit
  for (long long n = 1; n < 4; ++n)
    for (const Word& w : m.words[static_cast<std::size_t>(n - 1)]) {
      if (w.all_ones()) continue;
      Rational total = 0;
      for (int a = 1; a <= m.alphabet_size; ++a) {
        Word wa = w;
        wa.symbols.push_back(a);
        MeasureValue mv = m.measure(wa);
        REQUIRE(!mv.is_infinite());
        total += mv.value();
      }
      CHECK(total == m.measure(w).value());
    }

  // length outside the stored range is a hard error, not a silent zero
  CHECK(kind_of([&] { (void)m.admissible(sym_word("12121")); }) == ErrorKind::kWordTooLong);
  CHECK(kind_of([&] { (void)build_subshift(eng, alpha, 0, 7); }) == ErrorKind::kPrecondition);
}

TEST_CASE("language closure holds exhaustively at desk depth") {
  RankOneEngine eng(preset_spec("hajian-kakutani", 8), 8);
  Partition alpha({iv(0, Rational(1, 2)), iv(Rational(1, 2), 1)});
  SubshiftModel m = build_subshift(eng, alpha, 5, 7);

  for (long long n = 1; n <= 5; ++n)
    for (const Word& w : m.words[static_cast<std::size_t>(n - 1)])
      for (long long len = 1; len < n; ++len)
        for (long long start = 0; start + len <= n; ++start) {
          Word sub;
          sub.symbols.assign(w.symbols.begin() + start, w.symbols.begin() + start + len);
          CHECK(m.admissible(sub));
        }
}

TEST_CASE("cylinder measures are shift invariant") {
  RankOneEngine eng(preset_spec("hajian-kakutani", 8), 8);
  Partition alpha({iv(0, 1)});
  SubshiftModel m = build_subshift(eng, alpha, 4, 7);

  Word empty;
  CHECK(cylinder_measure(m, empty, sym_word("2")) == MeasureValue(Rational(1)));
  CHECK(cylinder_measure(m, empty, empty).is_infinite());

  // [u.v] only depends on the concatenation
  CHECK(cylinder_measure(m, sym_word("2"), sym_word("2")) == m.measure(sym_word("22")));
  CHECK(cylinder_measure(m, sym_word("22"), sym_word("1")) == m.measure(sym_word("221")));
  CHECK(cylinder_measure(m, sym_word("2"), sym_word("22")).is_zero());

  // the anchored reading: past coordinates carry negative offsets
  CHECK(cylinder_measure(m, sym_word("12"), sym_word("21")) ==
        cylinder_measure(m, empty, sym_word("1221")));

  CHECK(kind_of([&] { (void)cylinder_measure(m, sym_word("221"), sym_word("12")); }) ==
        ErrorKind::kWordTooLong);
}

TEST_CASE("factor tables follow containment and compose") {
  Partition gamma({iv(0, 1)});
  Partition beta({iv(0, Rational(1, 2)), iv(Rational(1, 2), 1)});
  Partition alpha({iv(0, Rational(1, 4)), iv(Rational(1, 4), Rational(1, 2)),
                   iv(Rational(1, 2), Rational(3, 4)), iv(Rational(3, 4), 1)});

  FactorMapTable ab = factor_table(alpha, beta);
  CHECK(ab.symbol_map == std::vector<int>({1, 1, 2, 2, 3, 3}));
  FactorMapTable bg = factor_table(beta, gamma);
  CHECK(bg.symbol_map == std::vector<int>({1, 1, 2, 2}));
  FactorMapTable ag = factor_table(alpha, gamma);

  // the triangle commutes as tables
  CHECK(compose(bg, ab) == ag);
  CHECK(compose(identity_table(3), ab) == ab);
  CHECK(compose(ab, identity_table(5)) == ab);

  Word w = sym_word("15243");
  w.offset = -2;
  Word img = factor_word(ab, w);
  CHECK(img.offset == -2);
  CHECK(img.symbols == std::vector<int>({1, 3, 2, 3, 2}));
  CHECK(factor_word(identity_table(5), w) == w);

  // symbols outside the domain are rejected
  CHECK(kind_of([&] { (void)factor_word(ab, sym_word("162")); }) == ErrorKind::kUnknownSymbol);
  CHECK(kind_of([&] { (void)compose(ab, bg); }) == ErrorKind::kAlphabetMismatch);

  // an atom hanging out of the coarse support maps to 1; a straddling one
  // is not a factor at all
  Partition narrow({iv(0, Rational(1, 2))});
  FactorMapTable an = factor_table(alpha, narrow);
  CHECK(an.symbol_map == std::vector<int>({1, 1, 2, 2, 1, 1}));
  Partition askew({iv(0, Rational(2, 3))});
  CHECK(kind_of([&] { (void)factor_table(askew, narrow); }) == ErrorKind::kNotRefining);
}

TEST_CASE("pushforward of cylinder measures matches preimage sums") {
  RankOneEngine eng(preset_spec("hajian-kakutani", 8), 8);
  Partition beta({iv(0, 1)});
  Partition alpha({iv(0, Rational(1, 2)), iv(Rational(1, 2), 1)});
  SubshiftModel mb = build_subshift(eng, beta, 4, 7);
  SubshiftModel ma = build_subshift(eng, alpha, 4, 7);
  FactorMapTable tbl = factor_table(alpha, beta);

  // oracle: sum the fine cylinders over each coarse word's preimage fiber
  for (long long n = 1; n <= 4; ++n)
    for (const Word& v : mb.words[static_cast<std::size_t>(n - 1)]) {
      if (v.all_ones()) continue;
      Rational total = 0;
      for (const Word& w : ma.words[static_cast<std::size_t>(n - 1)])
        if (factor_word(tbl, w) == v) total += ma.measure(w).value();
      CHECK(total == mb.measure(v).value());
    }
}

TEST_CASE("inverse_limit_check accepts a join chain and rejects corruption") {
  RankOneEngine eng(preset_spec("hajian-kakutani", 8), 8);
  Partition gamma({iv(0, 1)});
  Partition beta({iv(0, Rational(1, 2)), iv(Rational(1, 2), 1)});
  Partition alpha({iv(0, Rational(1, 4)), iv(Rational(1, 4), Rational(1, 2)),
                   iv(Rational(1, 2), Rational(3, 4)), iv(Rational(3, 4), 1)});

  InverseLimitTruncation tr;
  tr.models = {build_subshift(eng, gamma, 3, 7), build_subshift(eng, beta, 3, 7),
               build_subshift(eng, alpha, 3, 7)};
  tr.connecting = {factor_table(beta, gamma), factor_table(alpha, beta)};

  InverseLimitReport rep = inverse_limit_check(tr);
  CHECK(rep.levels == 3);
  CHECK(rep.composition_checks == 10);
  CHECK(rep.projection_checks > 0);
  CHECK(rep.pushforward_checks > 0);

  SECTION("remapping one symbol breaks the pushforward") {
    tr.connecting[1].symbol_map[2] = 1;  // in-range corruption
    CHECK(kind_of([&] { (void)inverse_limit_check(tr); }) == ErrorKind::kInconsistentTower);
  }
  SECTION("out-of-range corruption is caught by table validation") {
    tr.connecting[0].symbol_map[2] = 9;
    CHECK(kind_of([&] { (void)inverse_limit_check(tr); }) == ErrorKind::kUnknownSymbol);
  }
  SECTION("shape errors are preconditions") {
    tr.connecting.pop_back();
    CHECK(kind_of([&] { (void)inverse_limit_check(tr); }) == ErrorKind::kPrecondition);
    InverseLimitTruncation one;
    one.models = {tr.models[0]};
    CHECK(kind_of([&] { (void)inverse_limit_check(one); }) == ErrorKind::kPrecondition);
  }
  SECTION("alphabet mismatch between map and models") {
    std::swap(tr.connecting[0], tr.connecting[1]);
    CHECK(kind_of([&] { (void)inverse_limit_check(tr); }) == ErrorKind::kAlphabetMismatch);
  }
}
