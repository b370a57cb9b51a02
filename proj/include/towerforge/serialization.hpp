#pragma once

// JSON wire formats. All numbers cross the boundary as exact integer strings
// or as [num-p, den-p, num-q, den-q] quadruples; nothing is ever a float.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "towerforge/bratteli.hpp"
#include "towerforge/interval_set.hpp"
#include "towerforge/measure_value.hpp"
#include "towerforge/partition.hpp"
#include "towerforge/rational.hpp"
#include "towerforge/stats.hpp"
#include "towerforge/subshift.hpp"
#include "towerforge/tower.hpp"
#include "towerforge/uniformizer.hpp"

namespace towerforge {

using Json = nlohmann::ordered_json;  // ordered: byte-stable round trips

namespace detail {

// Integers small enough for JSON numbers stay numbers; bigger ones become
// strings. Readers accept both.
inline Json bigint_to_json(const BigInt& v) {
  if (v >= -9007199254740991LL && v <= 9007199254740991LL)
    return Json(v.convert_to<long long>());
  return Json(v.convert_to<std::string>());
}

inline BigInt bigint_from_json(const Json& j) {
  if (j.is_number_integer()) return BigInt(j.get<long long>());
  if (j.is_string()) return BigInt(j.get<std::string>());
  fail(ErrorKind::kPrecondition, "expected integer or integer string");
}

}  // namespace detail

inline Json interval_to_json(const Interval& p) {
  return Json::array({detail::bigint_to_json(num(p.lo)), detail::bigint_to_json(den(p.lo)),
                      detail::bigint_to_json(num(p.hi)), detail::bigint_to_json(den(p.hi))});
}

inline Interval interval_from_json(const Json& j) {
  require(j.is_array() && j.size() == 4, ErrorKind::kPrecondition,
          "interval must be a [num-p, den-p, num-q, den-q] quadruple");
  Rational lo = make_rational(detail::bigint_from_json(j[0]), detail::bigint_from_json(j[1]));
  Rational hi = make_rational(detail::bigint_from_json(j[2]), detail::bigint_from_json(j[3]));
  return Interval{lo, hi};
}

inline Json interval_set_to_json(const IntervalSet& s) {
  Json arr = Json::array();
  for (const auto& p : s.pieces()) arr.push_back(interval_to_json(p));
  return arr;
}

inline IntervalSet interval_set_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::kPrecondition, "interval set must be an array");
  std::vector<Interval> raw;
  raw.reserve(j.size());
  for (const auto& e : j) raw.push_back(interval_from_json(e));
  return IntervalSet::from_pieces(std::move(raw));
}

inline Json rational_to_json(const Rational& q) {
  return Json::array({detail::bigint_to_json(num(q)), detail::bigint_to_json(den(q))});
}

inline Rational rational_from_json(const Json& j) {
  require(j.is_array() && j.size() == 2, ErrorKind::kPrecondition,
          "rational must be a [num, den] pair");
  return make_rational(detail::bigint_from_json(j[0]), detail::bigint_from_json(j[1]));
}

inline Json measure_value_to_json(const MeasureValue& m) {
  if (m.is_infinite()) return Json("INFINITE");
  return rational_to_json(m.value());
}

inline MeasureValue measure_value_from_json(const Json& j) {
  if (j.is_string() && j.get<std::string>() == "INFINITE") return MeasureValue::infinite();
  return MeasureValue{rational_from_json(j)};
}

inline Json word_to_json(const Word& w) {
  return Json{{"offset", w.offset}, {"symbols", w.symbols}};
}

inline Word word_from_json(const Json& j) {
  require(j.is_object() && j.contains("offset") && j.contains("symbols"), ErrorKind::kPrecondition,
          "word must be {offset, symbols}");
  Word w;
  w.offset = j["offset"].get<long long>();
  w.symbols = j["symbols"].get<std::vector<int>>();
  return w;
}

inline Json partition_to_json(const Partition& p) {
  Json atoms = Json::array();
  for (const auto& a : p.finite_atoms()) atoms.push_back(interval_set_to_json(a));
  return Json{{"finite_atoms", atoms}};
}

inline Partition partition_from_json(const Json& j) {
  require(j.is_object() && j.contains("finite_atoms"), ErrorKind::kPrecondition,
          "partition must be {finite_atoms}");
  std::vector<IntervalSet> atoms;
  for (const auto& e : j["finite_atoms"]) atoms.push_back(interval_set_from_json(e));
  return Partition(std::move(atoms));
}

// Towers serialize with their level sets so the dump round-trips exactly
// without replaying the construction.
inline Json tower_to_json(const StandardTower& t) {
  Json cols = Json::array();
  for (const auto& c : t.principal_columns) {
    Json jc{{"base", interval_set_to_json(c.base)}, {"height", c.height}};
    Json levels = Json::array();
    for (const auto& l : c.level_sets) levels.push_back(interval_set_to_json(l));
    jc["level_sets"] = levels;
    if (!c.level_names.empty()) jc["level_names"] = c.level_names;
    cols.push_back(std::move(jc));
  }
  return Json{{"columns", cols}};
}

inline StandardTower tower_from_json(const Json& j) {
  require(j.is_object() && j.contains("columns"), ErrorKind::kPrecondition,
          "tower must be {columns}");
  StandardTower t;
  for (const auto& jc : j["columns"]) {
    Column c;
    c.base = interval_set_from_json(jc.at("base"));
    c.height = jc.at("height").get<long long>();
    for (const auto& l : jc.at("level_sets")) c.level_sets.push_back(interval_set_from_json(l));
    if (jc.contains("level_names")) c.level_names = jc["level_names"].get<std::vector<std::string>>();
    require(c.level_sets.size() == static_cast<std::size_t>(c.height), ErrorKind::kPrecondition,
            "tower column level count disagrees with height");
    t.principal_columns.push_back(std::move(c));
  }
  return t;
}


inline Json ratio_row_to_json(const RatioRow& r) {
  Json j{{"point", rational_to_json(r.point)},
         {"horizon", r.horizon},
         {"resolved", r.resolved},
         {"hits_K", r.hits_K},
         {"hits_C", r.hits_C}};
  if (r.ratio) j["ratio"] = rational_to_json(*r.ratio);
  if (r.deviation) j["deviation"] = rational_to_json(*r.deviation);
  return j;
}

inline Json ratio_report_to_json(const RatioReport& rep) {
  Json rows = Json::array();
  for (const auto& r : rep.rows) rows.push_back(ratio_row_to_json(r));
  Json points = Json::array();
  for (const auto& p : rep.points) points.push_back(rational_to_json(p));
  return Json{{"target", rational_to_json(rep.target)},
              {"points", points},
              {"horizons", rep.horizons},
              {"rows", rows}};
}

inline Json uniformity_verdict_to_json(const UniformityVerdict& v) {
  Json witnesses = Json::array();
  for (const auto& w : v.witnesses)
    witnesses.push_back(Json{{"point", rational_to_json(w.point)},
                             {"horizon", w.horizon},
                             {"hit_count", w.hit_count},
                             {"deviation", rational_to_json(w.deviation)}});
  Json j{{"epsilon", rational_to_json(v.epsilon)},
         {"max_hit_seen", v.max_hit_seen},
         {"pairs_tested", v.pairs_tested},
         {"witnesses", witnesses}};
  if (v.m_found) j["m_found"] = *v.m_found;
  return j;
}

// Keyed by the word's symbol string; offsets are part of the value so the
// map stays a plain JSON object.
inline Json verdict_map_to_json(const std::map<Word, UniformityVerdict>& m) {
  Json j = Json::object();
  for (const auto& [w, v] : m) {
    Json entry = uniformity_verdict_to_json(v);
    entry["word"] = word_to_json(w);
    j[w.str()] = std::move(entry);
  }
  return j;
}

inline Json radon_rows_to_json(const std::vector<RadonRow>& rows) {
  Json j = Json::array();
  for (const auto& r : rows) {
    Json row{{"horizon", r.horizon}, {"count_A", r.count_A}, {"count_K", r.count_K}};
    if (r.ratio) row["ratio"] = rational_to_json(*r.ratio);
    j.push_back(std::move(row));
  }
  return j;
}

inline Json orbit_verdict_to_json(const OrbitBoundednessVerdict& v) {
  return Json{{"detected", v.detected},
              {"low_confidence", v.low_confidence},
              {"examined_horizon", v.examined_horizon},
              {"last_growth_horizon", v.last_growth_horizon},
              {"hit_count", v.hit_count}};
}

inline Json criteria_report_to_json(const CriteriaReport& rep) {
  Json cases = Json::array();
  for (const auto& c : rep.cases) {
    Json witnesses = Json::array();
    for (const auto& w : c.witnesses)
      witnesses.push_back(Json{{"start", w.start},
                               {"horizon", w.horizon},
                               {"hit_count", w.hit_count},
                               {"ratio", rational_to_json(w.ratio)}});
    Json jc{{"label", c.label},
            {"c_estimate", rational_to_json(c.c_estimate)},
            {"exact_ratio", rational_to_json(c.exact_ratio)},
            {"exact_gap", rational_to_json(c.exact_gap)},
            {"ratio_matches_exact", c.ratio_matches_exact},
            {"consistent", c.consistent},
            {"witnesses", witnesses}};
    if (c.m_found) jc["m_found"] = *c.m_found;
    cases.push_back(std::move(jc));
  }
  return Json{{"cases", cases}, {"starts", rep.starts}, {"all_consistent", rep.all_consistent}};
}

inline Json step_log_to_json(const StepLog& log) {
  return Json{{"step", log.step},
              {"floor", log.floor},
              {"retries", log.retries},
              {"delta", rational_to_json(log.delta)},
              {"d_increment", rational_to_json(log.d_increment)},
              {"bad_mass", rational_to_json(log.bad_mass)},
              {"bad_columns", log.bad_columns},
              {"r_columns", log.r_columns},
              {"column_count", log.column_count},
              {"min_height", log.min_height},
              {"max_height", log.max_height},
              {"min_hits", log.min_hits},
              {"max_hits", log.max_hits},
              {"certified_threshold", detail::bigint_to_json(log.certified_threshold)}};
}

// One JSON line per step, then the final partition and the certificate: the
// whole uniformization run as a replayable record.
inline Json uniformize_result_to_json(const UniformizeResult& res) {
  Json steps = Json::array();
  for (const auto& log : res.steps) steps.push_back(step_log_to_json(log));
  return Json{{"alpha", partition_to_json(res.alpha)},
              {"steps", steps},
              {"total_increment", rational_to_json(res.total_increment)},
              {"hit_growth_ok", res.hit_growth_ok},
              {"certificate", verdict_map_to_json(res.certificate)}};
}

inline Json subshift_to_json(const SubshiftModel& m) {
  Json words = Json::array();
  for (const auto& bucket : m.words) {
    Json list = Json::array();
    for (const Word& w : bucket) {
      Json entry{{"word", w.str()}};
      const MeasureValue& mv = m.cylinder.at(w);
      entry["measure"] = measure_value_to_json(mv);
      list.push_back(std::move(entry));
    }
    words.push_back(std::move(list));
  }
  return Json{{"alphabet_size", m.alphabet_size},
              {"depth", m.depth},
              {"fixed_point_mass", rational_to_json(m.fixed_point_mass)},
              {"words_by_length", words}};
}

inline Json bratteli_to_json(const BratteliDiagram& d) {
  Json levels = Json::array();
  for (const auto& lv : d.levels) {
    Json edges = Json::array();
    for (const auto& e : lv.edges)
      edges.push_back(Json{{"source", e.source}, {"range", e.range}, {"order", e.order}});
    Json measures = Json::array();
    for (const auto& q : lv.base_measures) measures.push_back(rational_to_json(q));
    levels.push_back(Json{{"column_count", lv.column_count},
                          {"infinite_vertex", lv.infinite_vertex()},
                          {"column_heights", lv.column_heights},
                          {"base_measures", measures},
                          {"edges", edges}});
  }
  // the distinguished path is the chain of sole edges into infinite vertices
  Json path = Json::array();
  for (std::size_t k = 0; k < d.level_count(); ++k)
    path.push_back(d.incoming(k, d.levels[k].infinite_vertex()).front());
  return Json{{"levels", levels}, {"distinguished_path", path}};
}

// GraphViz rendering for documentation; vertex ids are level:index, the
// infinite chain is drawn dashed.
inline std::string bratteli_to_dot(const BratteliDiagram& d) {
  std::string out = "digraph bratteli {\n  rankdir=BT;\n  root [shape=point];\n";
  for (std::size_t k = 0; k < d.level_count(); ++k) {
    const BratteliLevel& lv = d.levels[k];
    for (std::size_t v = 0; v < lv.vertex_count(); ++v) {
      std::string id = "v" + std::to_string(k + 1) + "_" + std::to_string(v);
      std::string label = v == lv.infinite_vertex()
                              ? "inf"
                              : std::to_string(lv.column_heights[v]) + "@" +
                                    to_string(lv.base_measures[v]);
      out += "  " + id + " [label=\"" + label + "\"];\n";
    }
    for (const auto& e : lv.edges) {
      std::string src = k == 0 ? "root" : "v" + std::to_string(k) + "_" + std::to_string(e.source);
      std::string dst = "v" + std::to_string(k + 1) + "_" + std::to_string(e.range);
      bool chain = e.range == lv.infinite_vertex();
      out += "  " + src + " -> " + dst + " [label=\"" + std::to_string(e.order) + "\"" +
             (chain ? ", style=dashed" : "") + "];\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace towerforge
