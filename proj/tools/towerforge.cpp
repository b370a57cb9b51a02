// towerforge: command-line front end over the tower library. Every subcommand
// prints one JSON report (stdout or --out) that embeds the tool version, the
// canonicalized config, and an FNV-1a hash of that config, so identical
// invocations produce byte-identical reports. Numbers stay exact: rationals
// are serialized as integer pairs, decimals appear only in the plot writer
// with an explicit digit count.
//
// Exit codes: 0 success, 2 bad input or precondition violation, 3 when the
// requested work needs a deeper stage than the engine (or TOWERFORGE_MAX_DEPTH)
// allows.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "towerforge/serialization.hpp"

namespace {

using towerforge::BratteliDiagram;
using towerforge::CylinderCase;
using towerforge::ErrorKind;
using towerforge::IntervalSet;
using towerforge::Json;
using towerforge::Partition;
using towerforge::RankOneEngine;
using towerforge::Rational;
using towerforge::require;
using towerforge::StandardTower;
using towerforge::Word;

constexpr const char* kToolVersion = "0.1.0";

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// "lo:hi" pieces joined by commas, endpoints as rationals: "0/1:1/2,3/4:1".
IntervalSet parse_interval_set(const std::string& text) {
  std::vector<IntervalSet> pieces;
  for (const std::string& part : split(text, ',')) {
    auto ends = split(part, ':');
    require(ends.size() == 2, ErrorKind::kPrecondition,
            "malformed interval '" + part + "', expected lo:hi");
    pieces.push_back(
        IntervalSet(towerforge::parse_rational(ends[0]), towerforge::parse_rational(ends[1])));
  }
  return towerforge::union_all(pieces);
}

// Words are digit strings over the symbols 1..9; symbol 1 is the implicit
// complement atom.
Word parse_word(const std::string& text) {
  require(!text.empty(), ErrorKind::kPrecondition, "empty word literal");
  Word w;
  for (char c : text) {
    require(c >= '1' && c <= '9', ErrorKind::kPrecondition,
            "bad word literal '" + text + "', symbols are digits 1..9");
    w.symbols.push_back(c - '0');
  }
  return w;
}

std::vector<long long> parse_horizons(const std::string& text) {
  std::vector<long long> out;
  for (const std::string& part : split(text, ',')) {
    try {
      std::size_t used = 0;
      long long v = std::stoll(part, &used);
      require(used == part.size() && v >= 1, ErrorKind::kPrecondition,
              "bad horizon '" + part + "'");
      out.push_back(v);
    } catch (const std::logic_error&) {
      towerforge::fail(ErrorKind::kPrecondition, "bad horizon '" + part + "'");
    }
  }
  return out;
}

Partition parse_partition(const std::vector<std::string>& atom_texts) {
  std::vector<IntervalSet> atoms;
  for (const std::string& t : atom_texts) atoms.push_back(parse_interval_set(t));
  return Partition(std::move(atoms));
}

long env_depth_cap() {
  const char* raw = std::getenv("TOWERFORGE_MAX_DEPTH");
  if (raw == nullptr || *raw == '\0') return 0;
  std::string text(raw);
  try {
    std::size_t used = 0;
    long v = std::stol(text, &used);
    require(used == text.size() && v >= 1, ErrorKind::kPrecondition,
            "TOWERFORGE_MAX_DEPTH must be a positive integer, got '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    towerforge::fail(ErrorKind::kPrecondition,
                     "TOWERFORGE_MAX_DEPTH must be a positive integer, got '" + text + "'");
  }
}

// The engine cap is the smaller of --depth and the environment cap, so a
// command that asks for stages beyond the cap fails with DepthExceeded.
RankOneEngine make_engine(const std::string& preset, long depth) {
  require(depth >= 1, ErrorKind::kPrecondition, "--depth must be >= 1");
  long cap = env_depth_cap();
  long limit = (cap > 0 && cap < depth) ? cap : depth;
  return RankOneEngine(towerforge::preset_spec(preset, depth), limit);
}

std::string hash_hex(const std::string& operation, const Json& config) {
  std::uint64_t h = towerforge::fnv1a64(operation + "\n" + config.dump());
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

Json envelope(const std::string& operation, const Json& config) {
  Json j;
  j["tool"] = "towerforge";
  j["version"] = kToolVersion;
  j["operation"] = operation;
  j["config"] = config;
  j["config_hash"] = hash_hex(operation, config);
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorKind::kPrecondition, "cannot open output file '" + path + "'");
  f << text;
  f.flush();
  require(f.good(), ErrorKind::kPrecondition, "failed writing output file '" + path + "'");
}

void emit(const Json& report, const std::string& out_path) {
  std::string text = report.dump(2);
  text.push_back('\n');
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

// ---- subcommand option bags ----

struct CommonOpts {
  std::string preset = "hajian-kakutani";
  long depth = 6;
  std::string out;
};

struct TowerOpts : CommonOpts {
  std::string K = "0/1:1/1";
  long long N = 3;
  long long n = 10;  // refine-tower only
};

struct UniformityOpts : CommonOpts {
  std::string C;
  std::string K = "0/1:1/1";
  std::string eps = "1/10";
  std::size_t samples = 25;
};

struct UniformizeOpts : CommonOpts {
  std::string eps = "1/2";
  int steps = 3;
  std::string mode = "initial";
  std::vector<std::string> alpha{"0/1:1/1"};
  std::vector<std::string> beta;
  std::vector<std::string> deltas;
  long long first_floor = 8;
  int max_retries = 4;
  long long report_n_max = 1;
  std::size_t samples = 12;
};

struct SubshiftOpts : CommonOpts {
  std::vector<std::string> alpha{"0/1:1/1"};
  long long word_depth = 4;
};

struct RadonOpts : CommonOpts {
  std::vector<std::string> alpha{"0/1:1/1"};
  std::string point = "1/3";
  long long window = 512;
  std::vector<std::string> cases;
  std::string K_word = "2";
  std::string horizons = "64,128,256,512";
  std::string eps = "1/10";
  long long word_depth = 0;  // 0: longest case word
};

struct BratteliOpts : CommonOpts {
  std::string K = "0/1:1/1";
  long long N = 3;
  std::string chain;
  std::string dot;
};

struct StatsOpts : CommonOpts {
  std::string C;
  std::string K = "0/1:1/1";
  std::size_t points = 12;
  std::string horizons = "4,16,64,256";
  unsigned digits = 12;
  std::string csv;
  std::string plot;
};

// ---- handlers ----

void run_list_presets(const std::string& out_path) {
  Json report = envelope("list-presets", Json::object());
  Json arr = Json::array();
  for (const towerforge::PresetInfo& p : towerforge::list_presets()) {
    Json entry;
    entry["name"] = p.name;
    entry["description"] = p.description;
    arr.push_back(entry);
  }
  report["presets"] = arr;
  emit(report, out_path);
}

void run_build_tower(const TowerOpts& o, bool refine) {
  IntervalSet K = parse_interval_set(o.K);
  Json config;
  config["preset"] = o.preset;
  config["K"] = towerforge::interval_set_to_json(K);
  config["N"] = o.N;
  if (refine) config["n"] = o.n;
  config["depth"] = o.depth;
  RankOneEngine eng = make_engine(o.preset, o.depth);
  StandardTower base = towerforge::build_K_standard(eng, K, o.N, o.depth);
  Json report = envelope(refine ? "refine-tower" : "build-tower", config);
  if (refine) {
    StandardTower fine = towerforge::refine_K_standard(eng, base, K, o.n, o.depth);
    report["base_tower"] = towerforge::tower_to_json(base);
    report["tower"] = towerforge::tower_to_json(fine);
  } else {
    report["tower"] = towerforge::tower_to_json(base);
  }
  emit(report, o.out);
}

void run_uniformity(const UniformityOpts& o) {
  IntervalSet C = parse_interval_set(o.C);
  IntervalSet K = parse_interval_set(o.K);
  Rational eps = towerforge::parse_rational(o.eps);
  Json config;
  config["preset"] = o.preset;
  config["C"] = towerforge::interval_set_to_json(C);
  config["K"] = towerforge::interval_set_to_json(K);
  config["eps"] = towerforge::rational_to_json(eps);
  config["samples"] = o.samples;
  config["depth"] = o.depth;
  RankOneEngine eng = make_engine(o.preset, o.depth);
  std::vector<Rational> samples = towerforge::low_discrepancy_points(K, o.samples);
  towerforge::UniformityVerdict v =
      towerforge::uniformity_test(eng, C, K, eps, towerforge::default_m_schedule(), samples, o.depth);
  Json report = envelope("uniformity", config);
  report["uniform"] = v.m_found.has_value();
  report["verdict"] = towerforge::uniformity_verdict_to_json(v);
  emit(report, o.out);
}

void run_uniformize(const UniformizeOpts& o) {
  Partition alpha0 = parse_partition(o.alpha);
  Rational eps = towerforge::parse_rational(o.eps);
  require(o.mode == "initial" || o.mode == "refining", ErrorKind::kPrecondition,
          "--mode must be 'initial' or 'refining'");
  bool refining = o.mode == "refining";
  require(!refining || !o.beta.empty(), ErrorKind::kPrecondition,
          "--mode refining requires --beta atoms");
  require(refining || o.beta.empty(), ErrorKind::kPrecondition,
          "--beta is only meaningful with --mode refining");
  std::optional<Partition> beta;
  if (refining) beta = parse_partition(o.beta);

  towerforge::UniformizerParams params;
  params.first_floor = o.first_floor;
  params.max_retries = o.max_retries;
  params.report_n_max = static_cast<int>(o.report_n_max);
  params.sample_count = o.samples;
  for (const std::string& d : o.deltas) params.delta_override.push_back(towerforge::parse_rational(d));

  Json config;
  config["preset"] = o.preset;
  config["alpha"] = towerforge::partition_to_json(alpha0);
  if (beta) config["beta"] = towerforge::partition_to_json(*beta);
  config["eps"] = towerforge::rational_to_json(eps);
  config["steps"] = o.steps;
  config["mode"] = o.mode;
  config["first_floor"] = o.first_floor;
  config["max_retries"] = o.max_retries;
  config["report_n_max"] = o.report_n_max;
  config["samples"] = o.samples;
  Json deltas = Json::array();
  for (const Rational& d : params.delta_override) deltas.push_back(towerforge::rational_to_json(d));
  config["delta_override"] = deltas;
  config["depth"] = o.depth;

  RankOneEngine eng = make_engine(o.preset, o.depth);
  towerforge::UniformizeResult res = towerforge::uniformize(
      eng, alpha0, eps, o.steps,
      refining ? towerforge::UniformizeMode::kRefining : towerforge::UniformizeMode::kInitial,
      beta ? &*beta : nullptr, o.depth, params);
  Json report = envelope("uniformize", config);
  report["result"] = towerforge::uniformize_result_to_json(res);
  emit(report, o.out);
}

void run_subshift(const SubshiftOpts& o) {
  Partition alpha = parse_partition(o.alpha);
  Json config;
  config["preset"] = o.preset;
  config["alpha"] = towerforge::partition_to_json(alpha);
  config["word_depth"] = o.word_depth;
  config["depth"] = o.depth;
  RankOneEngine eng = make_engine(o.preset, o.depth);
  towerforge::SubshiftModel model = towerforge::build_subshift(eng, alpha, o.word_depth, o.depth);
  Json report = envelope("subshift", config);
  report["subshift"] = towerforge::subshift_to_json(model);
  emit(report, o.out);
}

void run_radon_check(const RadonOpts& o) {
  Partition alpha = parse_partition(o.alpha);
  Rational y = towerforge::parse_rational(o.point);
  Rational eps = towerforge::parse_rational(o.eps);
  std::vector<long long> horizons = parse_horizons(o.horizons);
  require(!o.cases.empty(), ErrorKind::kPrecondition, "at least one --A cylinder word required");
  Word K = parse_word(o.K_word);
  std::vector<Word> As;
  long long longest = static_cast<long long>(K.symbols.size());
  for (const std::string& text : o.cases) {
    As.push_back(parse_word(text));
    longest = std::max(longest, static_cast<long long>(As.back().symbols.size()));
  }
  long long word_depth = o.word_depth > 0 ? o.word_depth : longest;
  require(word_depth >= longest, ErrorKind::kPrecondition,
          "--word-depth shorter than the longest cylinder word");

  Json config;
  config["preset"] = o.preset;
  config["alpha"] = towerforge::partition_to_json(alpha);
  config["point"] = towerforge::rational_to_json(y);
  config["window"] = o.window;
  Json case_words = Json::array();
  for (const Word& A : As) case_words.push_back(A.str());
  config["A"] = case_words;
  config["K_word"] = K.str();
  config["horizons"] = horizons;
  config["eps"] = towerforge::rational_to_json(eps);
  config["word_depth"] = word_depth;
  config["depth"] = o.depth;

  RankOneEngine eng = make_engine(o.preset, o.depth);
  towerforge::SubshiftModel model = towerforge::build_subshift(eng, alpha, word_depth, o.depth);
  towerforge::MeasureValue mK = model.measure(K);
  require(!mK.is_infinite() && mK.value() > 0, ErrorKind::kPrecondition,
          "K cylinder must have finite positive measure");

  Word walk = towerforge::alpha_name(eng, alpha, y, -o.window, o.window, o.depth);
  Json report = envelope("radon-check", config);
  Json case_reports = Json::array();
  std::vector<CylinderCase> cases;
  for (const Word& A : As) {
    towerforge::MeasureValue mA = model.measure(A);
    require(!mA.is_infinite(), ErrorKind::kPrecondition,
            "cylinder " + A.str() + " has infinite measure");
    CylinderCase c;
    c.label = A.str();
    c.cylinder = A;
    c.exact_ratio = mA.value() / mK.value();
    cases.push_back(c);
    Json entry;
    entry["word"] = A.str();
    entry["exact_ratio"] = towerforge::rational_to_json(c.exact_ratio);
    entry["rows"] = towerforge::radon_rows_to_json(towerforge::radon_estimate(walk, A, K, horizons));
    case_reports.push_back(entry);
  }
  report["cases"] = case_reports;
  report["criteria"] =
      towerforge::criteria_report_to_json(towerforge::radon_criteria_check(walk, K, cases, horizons, eps));
  long long top = *std::max_element(horizons.begin(), horizons.end());
  report["orbit"] = towerforge::orbit_verdict_to_json(towerforge::bounded_orbit_detect(walk, K, top));
  emit(report, o.out);
}

void run_export_bratteli(const BratteliOpts& o) {
  IntervalSet K = parse_interval_set(o.K);
  std::vector<long long> chain;
  if (!o.chain.empty()) chain = parse_horizons(o.chain);
  Json config;
  config["preset"] = o.preset;
  config["K"] = towerforge::interval_set_to_json(K);
  config["N"] = o.N;
  config["chain"] = chain;
  config["depth"] = o.depth;
  RankOneEngine eng = make_engine(o.preset, o.depth);
  std::vector<StandardTower> towers;
  towers.push_back(towerforge::build_K_standard(eng, K, o.N, o.depth));
  for (long long n : chain)
    towers.push_back(towerforge::refine_K_standard(eng, towers.back(), K, n, o.depth));
  BratteliDiagram d = towerforge::export_bratteli(towers);
  Json report = envelope("export-bratteli", config);
  report["bratteli"] = towerforge::bratteli_to_json(d);
  if (!o.dot.empty()) {
    write_text_file(o.dot, towerforge::bratteli_to_dot(d));
    report["dot_file"] = o.dot;
  }
  emit(report, o.out);
}

void run_stats(const StatsOpts& o) {
  IntervalSet C = parse_interval_set(o.C);
  IntervalSet K = parse_interval_set(o.K);
  std::vector<long long> horizons = parse_horizons(o.horizons);
  Json config;
  config["preset"] = o.preset;
  config["C"] = towerforge::interval_set_to_json(C);
  config["K"] = towerforge::interval_set_to_json(K);
  config["points"] = o.points;
  config["horizons"] = horizons;
  config["digits"] = o.digits;
  config["depth"] = o.depth;
  RankOneEngine eng = make_engine(o.preset, o.depth);
  std::vector<Rational> samples = towerforge::sample_points(K, o.points);
  towerforge::RatioReport rep = towerforge::hopf_ratio_scan(eng, C, K, samples, horizons, o.depth);
  Json report = envelope("stats", config);
  report["report"] = towerforge::ratio_report_to_json(rep);
  if (!o.csv.empty()) {
    write_text_file(o.csv, towerforge::ratio_report_csv(rep));
    report["csv_file"] = o.csv;
  }
  if (!o.plot.empty()) {
    write_text_file(o.plot, towerforge::ratio_plot_data(rep, o.digits));
    report["plot_file"] = o.plot;
  }
  emit(report, o.out);
}

void print_error(ErrorKind kind, const std::string& message) {
  Json err;
  err["tool"] = "towerforge";
  err["version"] = kToolVersion;
  err["error"] = towerforge::error_kind_name(kind);
  err["message"] = message;
  std::cerr << err.dump() << "\n";
}

void add_common(CLI::App* sub, CommonOpts& o, long default_depth) {
  o.depth = default_depth;
  sub->add_option("--preset", o.preset, "rank-one preset name")->capture_default_str();
  sub->add_option("--depth", o.depth, "stage depth budget")->capture_default_str();
  sub->add_option("--out", o.out, "write the JSON report to this file instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"towerforge: exact rank-one tower, uniformity, and subshift toolkit"};
  app.require_subcommand(1);

  CLI::App* lp = app.add_subcommand("list-presets", "list the built-in rank-one presets");
  std::string lp_out;
  lp->add_option("--out", lp_out, "write the JSON report to this file instead of stdout");

  TowerOpts bt;
  CLI::App* build = app.add_subcommand("build-tower", "build a K-standard tower of height N/N+1");
  add_common(build, bt, 6);
  build->add_option("--K", bt.K, "anchor set, comma-joined lo:hi rationals")->capture_default_str();
  build->add_option("--N", bt.N, "height floor")->capture_default_str();

  TowerOpts rt;
  CLI::App* refine = app.add_subcommand("refine-tower", "refine a K-standard tower to floor n");
  add_common(refine, rt, 6);
  refine->add_option("--K", rt.K, "anchor set, comma-joined lo:hi rationals")->capture_default_str();
  refine->add_option("--N", rt.N, "height floor of the base tower")->capture_default_str();
  refine->add_option("--n", rt.n, "height floor of the refined tower")->capture_default_str();

  UniformityOpts un;
  CLI::App* uni = app.add_subcommand("uniformity", "test C for uniformity inside K");
  add_common(uni, un, 6);
  uni->add_option("--C", un.C, "candidate set, comma-joined lo:hi rationals")->required();
  uni->add_option("--K", un.K, "ambient set, comma-joined lo:hi rationals")->capture_default_str();
  uni->add_option("--eps", un.eps, "uniformity tolerance, rational")->capture_default_str();
  uni->add_option("--samples", un.samples, "number of witness points")->capture_default_str();

  UniformizeOpts uz;
  CLI::App* uzc = app.add_subcommand("uniformize", "run the uniformizer pipeline on a partition");
  add_common(uzc, uz, 7);
  uzc->add_option("--alpha", uz.alpha, "finite atoms of the starting partition (repeatable)")
      ->capture_default_str();
  uzc->add_option("--beta", uz.beta, "finite atoms of the target partition (refining mode)");
  uzc->add_option("--eps", uz.eps, "total movement budget, rational")->capture_default_str();
  uzc->add_option("--steps", uz.steps, "number of uniformizing steps")->capture_default_str();
  uzc->add_option("--mode", uz.mode, "'initial' or 'refining'")->capture_default_str();
  uzc->add_option("--first-floor", uz.first_floor, "height floor of the first tower")
      ->capture_default_str();
  uzc->add_option("--max-retries", uz.max_retries, "floor doublings allowed per step")
      ->capture_default_str();
  uzc->add_option("--report-n-max", uz.report_n_max, "window count of the closing certificate")
      ->capture_default_str();
  uzc->add_option("--samples", uz.samples, "sampling width of the certificate")->capture_default_str();
  uzc->add_option("--delta", uz.deltas, "per-step budget override, rational (repeatable)");

  SubshiftOpts sh;
  CLI::App* shc = app.add_subcommand("subshift", "export the symbolic model of a partition");
  add_common(shc, sh, 7);
  shc->add_option("--alpha", sh.alpha, "finite atoms of the partition (repeatable)")
      ->capture_default_str();
  shc->add_option("--word-depth", sh.word_depth, "longest word length stored")->capture_default_str();

  RadonOpts rd;
  CLI::App* rdc = app.add_subcommand("radon-check", "compare orbit ratio estimates to exact measures");
  add_common(rdc, rd, 7);
  rdc->add_option("--alpha", rd.alpha, "finite atoms of the partition (repeatable)")
      ->capture_default_str();
  rdc->add_option("--point", rd.point, "orbit base point, rational")->capture_default_str();
  rdc->add_option("--window", rd.window, "orbit window half-width")->capture_default_str();
  rdc->add_option("--A", rd.cases, "cylinder word to estimate (repeatable)")->required();
  rdc->add_option("--K-word", rd.K_word, "reference cylinder word")->capture_default_str();
  rdc->add_option("--horizons", rd.horizons, "comma-joined averaging horizons")->capture_default_str();
  rdc->add_option("--eps", rd.eps, "criteria tolerance, rational")->capture_default_str();
  rdc->add_option("--word-depth", rd.word_depth, "word length stored in the exact model")
      ->capture_default_str();

  BratteliOpts br;
  CLI::App* brc = app.add_subcommand("export-bratteli", "export a tower chain as a Bratteli diagram");
  add_common(brc, br, 5);
  brc->add_option("--K", br.K, "anchor set, comma-joined lo:hi rationals")->capture_default_str();
  brc->add_option("--N", br.N, "height floor of the first tower")->capture_default_str();
  brc->add_option("--chain", br.chain, "comma-joined refinement floors, e.g. 10,34");
  brc->add_option("--dot", br.dot, "also write a graphviz rendering to this file");

  StatsOpts st;
  CLI::App* stc = app.add_subcommand("stats", "scan Hopf ratios over sample points and horizons");
  add_common(stc, st, 8);
  stc->add_option("--C", st.C, "numerator set, comma-joined lo:hi rationals")->required();
  stc->add_option("--K", st.K, "denominator set, comma-joined lo:hi rationals")->capture_default_str();
  stc->add_option("--points", st.points, "number of sample points")->capture_default_str();
  stc->add_option("--horizons", st.horizons, "comma-joined averaging horizons")->capture_default_str();
  stc->add_option("--digits", st.digits, "decimal digits in the plot file")->capture_default_str();
  stc->add_option("--csv", st.csv, "write the ratio table as CSV to this file");
  stc->add_option("--plot", st.plot, "write decimal plot data to this file");

  try {
    app.parse(argc, argv);
    if (lp->parsed()) run_list_presets(lp_out);
    if (build->parsed()) run_build_tower(bt, false);
    if (refine->parsed()) run_build_tower(rt, true);
    if (uni->parsed()) run_uniformity(un);
    if (uzc->parsed()) run_uniformize(uz);
    if (shc->parsed()) run_subshift(sh);
    if (rdc->parsed()) run_radon_check(rd);
    if (brc->parsed()) run_export_bratteli(br);
    if (stc->parsed()) run_stats(st);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error(ErrorKind::kPrecondition, e.what());
    return 2;
  } catch (const towerforge::Error& e) {
    print_error(e.kind(), e.what());
    return (e.kind() == ErrorKind::kNeedsDeeperStage || e.kind() == ErrorKind::kDepthExceeded) ? 3
                                                                                               : 2;
  } catch (const std::exception& e) {
    print_error(ErrorKind::kPrecondition, e.what());
    return 2;
  }
  return 0;
}
