#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "overlap_sketch.hpp"

namespace overlap_sketch::cli {

using ojson = nlohmann::ordered_json;

// Bad flag values: reported like CLI11 parse errors (exit 2, usage text).
class usage_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Environment {
  std::optional<std::string> seed;  // OVERLAP_SKETCH_SEED
};

namespace detail {

// Raw flag text per subcommand; converted after parsing so scientific
// notation works for counts and every count is checked to be an integer.
struct Flags {
  std::map<std::string, std::string> values;

  bool has(const std::string& name) const { return values.count(name) != 0; }

  const std::string& text(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) throw usage_error("missing required flag --" + name);
    return it->second;
  }

  double real(const std::string& name) const {
    const std::string& s = text(name);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw usage_error("--" + name + ": not a number: " + s);
    }
    return v;
  }

  double real_or(const std::string& name, double fallback) const { return has(name) ? real(name) : fallback; }

  count_t count(const std::string& name) const {
    const double v = real(name);
    if (v != std::floor(v) || std::abs(v) >= 9.0e18) throw usage_error("--" + name + ": not an integer: " + text(name));
    return static_cast<count_t>(v);
  }

  std::uint64_t u64(const std::string& name) const {
    const std::string& s = text(name);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw usage_error("--" + name + ": not a u64: " + s);
    return v;
  }
};

inline CLI::Option* flag(CLI::App* app, Flags& flags, const std::string& name, const std::string& desc,
                         bool required = false) {
  auto* opt = app->add_option_function<std::string>(
      "--" + name, [&flags, name](const std::string& v) { flags.values[name] = v; }, desc);
  static const std::set<std::string> paths{"config", "input", "out", "p", "q"};
  opt->type_name(paths.count(name) ? "PATH" : name == "interval" ? "LO..HI" : "NUM");
  if (required) opt->required();
  return opt;
}

inline std::uint64_t parse_seed_text(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw usage_error(std::string(what) + ": not a u64: " + s);
  }
  return v;
}

// --seed flag, then OVERLAP_SKETCH_SEED, then the fallback.
inline std::uint64_t resolve_seed(const Flags& f, const Environment& env, std::uint64_t fallback) {
  if (f.has("seed")) return f.u64("seed");
  if (env.seed) return parse_seed_text(*env.seed, "OVERLAP_SKETCH_SEED");
  return fallback;
}

inline Interval parse_interval(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw usage_error("--interval expects lo..hi, got " + s);
  auto parse = [&](std::string_view part) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (part.empty() || ec != std::errc() || ptr != part.data() + part.size()) {
      throw usage_error("--interval: bad bound in " + s);
    }
    return v;
  };
  const std::string_view sv(s);
  Interval iv{parse(sv.substr(0, dots)), parse(sv.substr(dots + 2))};
  if (iv.hi < iv.lo - 1) throw domain_error("--interval: hi < lo - 1");
  if (iv.length() > (count_t{1} << 32)) throw domain_error("--interval: more than 2^32 elements");
  return iv;
}

// Newline-delimited tokens, hashed to 64 bits and deduplicated. Empty lines
// are skipped; a trailing CR is stripped.
inline std::vector<std::int64_t> read_token_elements(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path);
  std::vector<std::int64_t> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(static_cast<std::int64_t>(hash_bytes(line)));
  }
  if (in.bad()) throw io_error("read failed: " + path);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<std::int64_t> interval_elements(const Interval& iv) {
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(std::max<count_t>(0, iv.length())));
  for (count_t j = 0; j < iv.length(); ++j) out.push_back(iv.at(j));
  return out;
}

// Binary ("MHS1" ...) or JSON sketch, told apart by the first byte.
inline MinHashSketch load_sketch(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  const auto first = std::find_if(bytes.begin(), bytes.end(), [](std::uint8_t c) { return !std::isspace(c); });
  if (first != bytes.end() && *first == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      throw format_error(path + ": " + e.what(), 0);
    }
    return sketch_from_json(j);
  }
  return deserialize_sketch(bytes);
}

inline std::vector<std::uint8_t> encode_sketch(const MinHashSketch& s, const std::string& format) {
  if (format == "binary") return serialize_sketch(s);
  const std::string text = sketch_to_json(s).dump() + "\n";
  return std::vector<std::uint8_t>(text.begin(), text.end());
}

inline ojson moments_json(const Moments& m) {
  return {{"mean", m.mean}, {"variance", m.variance}, {"std", m.stddev()}, {"median", m.median}};
}

inline ojson plan_json(const SamplingPlan& p) {
  ojson j;
  j["alpha1"] = p.alpha1;
  j["alpha2"] = p.alpha2;
  j["m1"] = p.m1;
  j["m2"] = p.m2;
  j["binding"] = std::string(to_string(p.binding));
  ojson cond = ojson::object();
  for (const auto& [k, v] : p.condition_values) cond[k] = v;
  j["conditions"] = cond;
  return j;
}

// Three significant digits, the precision used when quoting sampling rates.
inline std::string three_digits(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace detail

// Runs one command line (args excludes the program name). Output goes to
// `out` only when the command succeeds; diagnostics go to `err`.
// Exit codes: 0 success, 1 domain error, 2 usage, I/O or format error.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                    const Environment& env = {}) {
  CLI::App app{"Set overlap estimation from samples and MinHash sketches", "overlap_sketch"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::map<std::string, detail::Flags> flags;
  auto& f_plan = flags["plan"];
  auto& f_pmf = flags["pmf"];
  auto& f_est = flags["estimate"];
  auto& f_build = flags["sketch build"];
  auto& f_merge = flags["sketch merge"];
  auto& f_sim = flags["simulate"];
  auto& f_bphi = flags["batch-phi"];
  auto& f_bj = flags["batch-j"];
  auto& f_cj = flags["correct-j"];
  auto& f_cost = flags["cost"];
  using detail::flag;

  auto* plan = app.add_subcommand("plan", "Sampling rates for a target accuracy");
  flag(plan, f_plan, "delta", "Target standard error (containment) or fractional error (Jaccard)", true);
  flag(plan, f_plan, "epsilon", "Allowed failure probability", true);
  flag(plan, f_plan, "phi", "Expected containment I/N1 (containment plan)");
  flag(plan, f_plan, "n1", "|A|", true);
  flag(plan, f_plan, "n2", "|B|", true);
  flag(plan, f_plan, "alpha1", "Fix alpha1 and solve for alpha2");
  flag(plan, f_plan, "intersection", "Expected |A n B| (adds the Jaccard plan)");
  std::string plan_mode = "valid-case";
  plan->add_option("--mode", plan_mode, "valid-case or posterior-only")
      ->check(CLI::IsMember({"valid-case", "posterior-only"}));

  auto* pmf = app.add_subcommand("pmf", "Overlap-count likelihoods, moments and TV distances");
  for (const char* n : {"n1", "n2", "intersection", "m1", "m2"}) flag(pmf, f_pmf, n, "", true);
  flag(pmf, f_pmf, "budget", "Term budget for the exact model (default 1e8)");
  std::string pmf_model = "all";
  pmf->add_option("--model", pmf_model, "binomial, union, exact or all")
      ->check(CLI::IsMember({"binomial", "union", "exact", "all"}));
  bool pmf_points = false;
  pmf->add_flag("--points", pmf_points, "Include the probability of every support point");

  auto* est = app.add_subcommand("estimate", "Intersection, containment and Jaccard from an overlap count");
  for (const char* n : {"x", "n1", "n2", "m1", "m2"}) flag(est, f_est, n, "", true);
  bool est_no_union = false;
  est->add_flag("--no-union-mle", est_no_union, "Skip the union-model MLE");

  auto* sketch = app.add_subcommand("sketch", "MinHash sketch files");
  sketch->require_subcommand(1);
  auto* build = sketch->add_subcommand("build", "Sketch a token file or an integer interval");
  flag(build, f_build, "input", "Newline-delimited tokens");
  flag(build, f_build, "interval", "Integer interval lo..hi");
  flag(build, f_build, "k", "Number of hash functions", true);
  flag(build, f_build, "seed", "Hash family seed (default OVERLAP_SKETCH_SEED, else 0)");
  flag(build, f_build, "out", "Output file", true);
  flag(build, f_build, "batches", "Write a batch container with this many stratified batches");
  flag(build, f_build, "partition-seed", "Batch partition seed");
  std::string build_format = "binary";
  build->add_option("--format", build_format, "binary or json (single sketches)")
      ->check(CLI::IsMember({"binary", "json"}));

  auto* merge = sketch->add_subcommand("merge", "Position-wise minimum of sketches");
  std::vector<std::string> merge_inputs;
  merge->add_option("inputs", merge_inputs, "Sketch files")->required()->expected(1, -1);
  flag(merge, f_merge, "out", "Output file", true);
  std::string merge_format = "binary";
  merge->add_option("--format", merge_format, "binary or json")->check(CLI::IsMember({"binary", "json"}));

  auto* jac = sketch->add_subcommand("jaccard", "Jaccard estimate from two sketches");
  std::vector<std::string> jac_inputs;
  jac->add_option("inputs", jac_inputs, "Two sketch files")->required()->expected(2);

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo experiments");
  std::string sim_mode;
  sim->add_option("mode", sim_mode, "overlap-dist (overlap), containment, batch-phi, jaccard-z (jaccard)")
      ->required();
  for (const char* n : {"config", "n1", "n2", "intersection", "m1", "m2", "trials", "seed", "a", "b", "k",
                        "threads", "out"}) {
    flag(sim, f_sim, n, "");
  }
  std::string sim_format = "json";
  sim->add_option("--format", sim_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  bool sim_no_models = false;
  sim->add_flag("--no-model-comparison", sim_no_models, "overlap-dist: skip union and exact models");

  auto* bphi = app.add_subcommand("batch-phi", "Containment from two batch sketch containers");
  flag(bphi, f_bphi, "p", "Batch container of P", true);
  flag(bphi, f_bphi, "q", "Batch container of Q", true);
  flag(bphi, f_bphi, "n2", "|B|", true);
  flag(bphi, f_bphi, "m1", "|P| (default: container total)");
  flag(bphi, f_bphi, "m2", "|Q| (default: container total)");

  auto* bj = app.add_subcommand("batch-j", "Jaccard from two batch sketch containers");
  flag(bj, f_bj, "p", "Batch container of P", true);
  flag(bj, f_bj, "q", "Batch container of Q", true);
  flag(bj, f_bj, "n1", "|A|", true);
  flag(bj, f_bj, "n2", "|B|", true);
  std::string bj_rule = "batch-error-worse";
  bj->add_option("--fallback-rule", bj_rule, "batch-error-worse or pseudocode-literal")
      ->check(CLI::IsMember({"batch-error-worse", "pseudocode-literal"}));

  auto* cj = app.add_subcommand("correct-j", "Full-set Jaccard from a sample-level Jaccard");
  for (const char* n : {"j-prime", "n1", "n2", "m1", "m2"}) flag(cj, f_cj, n, "", true);
  flag(cj, f_cj, "k", "Hash functions behind j-prime (adds the error model)");

  auto* cost = app.add_subcommand("cost", "Runtime model for plain and batched sketching");
  for (const char* n : {"n1", "m1", "a", "b", "k", "batch-size"}) flag(cost, f_cost, n, "", true);
  for (const char* n : {"fetch", "hash", "disk", "c1", "c2"}) flag(cost, f_cost, n, "");

  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  auto usage = [&]() -> std::string {
    const CLI::App* deepest = &app;
    for (;;) {
      const auto subs = deepest->get_subcommands();
      if (subs.empty()) break;
      deepest = subs.front();
    }
    return deepest->help();
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (plan->parsed()) {
      const auto& f = f_plan;
      const AccuracySpec spec(f.real("delta"), f.real("epsilon"));
      const count_t n1 = f.count("n1"), n2 = f.count("n2");
      std::optional<double> alpha1;
      if (f.has("alpha1")) alpha1 = f.real("alpha1");
      if (!f.has("phi") && !f.has("intersection")) throw usage_error("plan needs --phi and/or --intersection");
      ojson j;
      if (f.has("phi")) {
        const double phi = f.real("phi");
        const auto v = validity_condition(phi, spec.epsilon(), static_cast<double>(n1));
        const double accuracy = 1.0 / (spec.delta() * spec.delta() * static_cast<double>(n1));
        ojson c;
        c["accuracy_product"] = accuracy;
        c["accuracy_alpha"] = std::sqrt(accuracy);
        c["validity_product"] = v.chernoff;
        c["validity_alpha"] = std::sqrt(v.chernoff);
        c["validity_alpha_display"] = detail::three_digits(std::sqrt(v.chernoff));
        c["validity_simplified_product"] = v.simplified;
        c["validity_simplified_alpha"] = std::sqrt(v.simplified);
        j["conditions"] = c;
        const PlanMode mode = plan_mode == "valid-case" ? PlanMode::valid_case : PlanMode::posterior_only;
        j["mode"] = std::string(to_string(mode));
        j["containment_plan"] = detail::plan_json(plan_containment(spec, phi, n1, n2, mode, alpha1));
      }
      if (f.has("intersection")) {
        const double i = f.real("intersection");
        const auto cond = plan_jaccard(spec, i);
        j["jaccard_condition"] = {{"exact_product", cond.exact},
                                  {"lower_root_product", cond.lower_root},
                                  {"simplified_product", cond.simplified}};
        j["jaccard_plan"] = detail::plan_json(plan_jaccard_rates(spec, i, n1, n2, alpha1));
      }
      buf << j.dump(2) << '\n';
    } else if (pmf->parsed()) {
      const auto& f = f_pmf;
      const PopulationPair pop(f.count("n1"), f.count("n2"), f.count("intersection"));
      const SampleDesign design(f.count("m1"), f.count("m2"));
      design.check_against(pop);
      const count_t budget = f.has("budget") ? f.count("budget") : default_exact_term_budget;
      std::map<std::string, OverlapPmf> models;
      ojson j;
      j["models"] = ojson::object();
      auto add = [&](const std::string& name, const OverlapPmf& p) {
        ojson m;
        m["support_min"] = p.support_min();
        m["support_max"] = p.support_max();
        m["moments"] = detail::moments_json(pmf_moments(p));
        if (p.untruncated_moments()) m["untruncated_moments"] = detail::moments_json(*p.untruncated_moments());
        if (pmf_points) {
          ojson pts = ojson::array();
          for (count_t x = p.support_min(); x <= p.support_max(); ++x) pts.push_back({x, p.prob(x)});
          m["points"] = pts;
        }
        j["models"][name] = m;
        models.emplace(name, p);
      };
      if (pmf_model == "binomial" || pmf_model == "all") add("binomial", binomial_pmf(pop, design));
      if (pmf_model == "union" || pmf_model == "all") add("union", union_pmf(pop, design));
      if (pmf_model == "exact" || pmf_model == "all") {
        const double grid = exact_grid_size(design, pop.intersection());
        if (pmf_model == "exact" || grid <= static_cast<double>(budget)) {
          add("exact", exact_pmf(pop, design, budget));
        } else {
          j["exact_skipped"] = "grid of " + detail::three_digits(grid) + " terms exceeds the budget";
        }
      }
      ojson tv = ojson::object();
      for (auto a = models.begin(); a != models.end(); ++a) {
        for (auto b = std::next(a); b != models.end(); ++b) {
          tv[a->first + "_" + b->first] = total_variation(a->second, b->second);
        }
      }
      j["total_variation"] = tv;
      buf << j.dump(2) << '\n';
    } else if (est->parsed()) {
      const auto& f = f_est;
      const count_t x = f.count("x"), n1 = f.count("n1"), n2 = f.count("n2");
      const SampleDesign design(f.count("m1"), f.count("m2"));
      design.check_against(n1, n2);
      const auto e = estimate_binomial(x, n1, n2, design);
      const auto post = posterior_summary(x, n1, n2, design);
      ojson j;
      j["i_hat"] = e.i_hat;
      j["phi1_hat"] = e.phi1_hat;
      j["phi2_hat"] = e.phi2_hat;
      j["j_hat"] = e.j_hat;
      j["j_clamped"] = e.j_clamped;
      j["valid"] = e.valid;
      j["posterior"] = {{"alpha", post.alpha},
                        {"beta", post.beta},
                        {"beta_variance", post.beta_variance},
                        {"mse_bound_i", post.mse_bound_i},
                        {"mse_bound_i_loose", post.mse_bound_i_loose},
                        {"mse_bound_phi1", post.mse_bound_phi1},
                        {"mse_bound_phi2", post.mse_bound_phi2}};
      if (x >= 1) {
        const auto b = fractional_jaccard_error_bound(x, static_cast<double>(n1), static_cast<double>(n2));
        j["jaccard_fractional_error"] = {{"tight", b.tight}, {"loose", b.loose}};
      }
      if (!est_no_union) j["i_union_mle"] = estimate_union_mle(x, n1, n2, design);
      buf << j.dump(2) << '\n';
    } else if (build->parsed()) {
      const auto& f = f_build;
      if (f.has("input") == f.has("interval")) throw usage_error("sketch build needs exactly one of --input, --interval");
      const count_t k = f.count("k");
      if (k < 1 || k > (count_t{1} << 24)) throw domain_error("k must lie in [1, 2^24]");
      const std::uint64_t seed = detail::resolve_seed(f, env, 0);
      const auto elements = f.has("input") ? detail::read_token_elements(f.text("input"))
                                           : detail::interval_elements(detail::parse_interval(f.text("interval")));
      const auto family = HashFamily::random(static_cast<std::size_t>(k), seed);
      ojson j;
      std::vector<std::uint8_t> bytes;
      if (f.has("batches")) {
        const count_t batches = f.count("batches");
        if (batches < 1 || batches > (count_t{1} << 20)) throw domain_error("batches must lie in [1, 2^20]");
        if (build_format != "binary") throw usage_error("batch containers are binary only");
        const std::uint64_t pseed = f.has("partition-seed") ? f.u64("partition-seed") : derive_seed(seed, 1);
        const auto set = build_batch_sketches(elements, static_cast<std::size_t>(batches), pseed, family);
        bytes = serialize_batch_set(set);
        j["batches"] = batches;
        j["partition_seed"] = pseed;
      } else {
        bytes = detail::encode_sketch(build_sketch(elements, family), build_format);
      }
      write_file_bytes(f.text("out"), bytes);
      j["k"] = k;
      j["seed"] = seed;
      j["family_id"] = family->digest();
      j["source_size"] = elements.size();
      j["out"] = f.text("out");
      buf << j.dump(2) << '\n';
    } else if (merge->parsed()) {
      auto merged = detail::load_sketch(merge_inputs.front());
      for (std::size_t i = 1; i < merge_inputs.size(); ++i) {
        merged = merge_sketches(merged, detail::load_sketch(merge_inputs[i]));
      }
      write_file_bytes(f_merge.text("out"), detail::encode_sketch(merged, merge_format));
      buf << ojson{{"k", merged.k()}, {"source_size", merged.source_size()}, {"out", f_merge.text("out")}}.dump(2)
          << '\n';
    } else if (jac->parsed()) {
      const auto a = detail::load_sketch(jac_inputs[0]);
      const auto b = detail::load_sketch(jac_inputs[1]);
      buf << ojson{{"j_prime", estimate_sample_jaccard(a, b)}, {"k", a.k()}}.dump(2) << '\n';
    } else if (sim->parsed()) {
      const auto& f = f_sim;
      nlohmann::json doc = nlohmann::json::object();
      if (f.has("config")) {
        const auto bytes = read_file_bytes(f.text("config"));
        try {
          doc = nlohmann::json::parse(bytes.begin(), bytes.end());
        } catch (const nlohmann::json::exception& e) {
          throw format_error(f.text("config") + ": " + e.what(), 0);
        }
        if (!doc.is_object()) throw format_error(f.text("config") + ": config must be a JSON object", 0);
      }
      doc["mode"] = std::string(to_string(parse_mode(sim_mode)));
      for (const char* n : {"n1", "n2", "intersection", "m1", "m2", "trials", "a", "b", "k", "threads"}) {
        if (f.has(n)) doc[n] = f.count(n);
      }
      if (f.has("seed")) {
        doc["master_seed"] = f.u64("seed");
      } else if (env.seed) {
        doc["master_seed"] = detail::parse_seed_text(*env.seed, "OVERLAP_SKETCH_SEED");
      }
      if (sim_no_models) doc["model_comparison"] = false;
      for (const char* n : {"n1", "n2", "intersection", "m1", "m2", "trials"}) {
        if (!doc.contains(n)) throw usage_error(std::string("simulate: missing --") + n + " (flag or config)");
      }
      const auto cfg = config_from_json(doc);
      const auto report = run_experiment(cfg);
      std::ostringstream rendered;
      rendered.imbue(std::locale::classic());
      if (sim_format == "json") {
        rendered << report_to_json(report).dump(2) << '\n';
      } else {
        write_report_csv(report, rendered);
      }
      if (f.has("out")) {
        const std::string text = rendered.str();
        write_file_bytes(f.text("out"), std::vector<std::uint8_t>(text.begin(), text.end()));
        ojson j;
        j["out"] = f.text("out");
        j["summary"] = summary_to_json(report.summary);
        buf << j.dump(2) << '\n';
      } else {
        buf << rendered.str();
      }
    } else if (bphi->parsed()) {
      const auto& f = f_bphi;
      const auto p = deserialize_batch_set(read_file_bytes(f.text("p")));
      const auto q = deserialize_batch_set(read_file_bytes(f.text("q")));
      const count_t n2 = f.count("n2");
      const count_t m1 = f.has("m1") ? f.count("m1") : p.total_size();
      const count_t m2 = f.has("m2") ? f.count("m2") : q.total_size();
      const auto res = batch_containment(p, q, n2, m1, m2);
      BatchErrorInputs in{res.phi_hat,
                          p.k(),
                          static_cast<double>(p.max_batch_size()),
                          static_cast<double>(q.max_batch_size()),
                          static_cast<double>(m1),
                          static_cast<double>(m2),
                          static_cast<double>(n2)};
      ojson j;
      j["phi_hat"] = res.phi_hat;
      j["x_hat"] = res.x_hat;
      j["pairs"] = res.rows * res.cols;
      j["error_bounds"] = {{"binomial", batch_containment_error(in, BatchErrorMode::binomial)},
                           {"fallback", batch_containment_error(in, BatchErrorMode::fallback)},
                           {"unequal", batch_containment_error(in, BatchErrorMode::unequal)}};
      buf << j.dump(2) << '\n';
    } else if (bj->parsed()) {
      const auto& f = f_bj;
      const auto p = deserialize_batch_set(read_file_bytes(f.text("p")));
      const auto q = deserialize_batch_set(read_file_bytes(f.text("q")));
      BatchSimilarityOptions opts;
      opts.fallback = bj_rule == "batch-error-worse" ? FallbackRule::batch_error_worse : FallbackRule::pseudocode_literal;
      const auto res = batch_similarity(p, q, f.count("n1"), f.count("n2"), opts);
      ojson j;
      j["j_hat"] = res.j_hat;
      j["j_full_merge"] = res.j_fm;
      j["j_prime_full_merge"] = res.j_prime_fm;
      j["used_full_merge"] = res.used_full_merge;
      j["reason"] = res.reason;
      j["valid_pairs"] = res.state.v.size();
      j["removed_pairs"] = res.removed.size();
      j["error_m_sq"] = res.state.cal_m_sq;
      j["error_s_sq"] = res.state.cal_s_sq;
      buf << j.dump(2) << '\n';
    } else if (cj->parsed()) {
      const auto& f = f_cj;
      const double jp = f.real("j-prime");
      const auto ratio = correction_ratio(f.real("n1"), f.real("n2"), f.real("m1"), f.real("m2"));
      const auto jh = correct_jaccard(jp, ratio);
      ojson j;
      j["j_hat"] = jh.value;
      j["clamped"] = jh.clamped;
      j["r"] = ratio.r;
      j["denominator"] = correction_denominator(jp, ratio.r);
      if (f.has("k")) {
        const count_t k = f.count("k");
        if (k < 1) throw domain_error("k must be >= 1");
        const auto e = jaccard_error_model(jp, ratio, f.real("m1"), f.real("m2"), static_cast<std::size_t>(k));
        j["error_model"] = {{"delta_s", e.delta_s}, {"delta_m", e.delta_m}, {"delta", e.delta_total}};
      }
      buf << j.dump(2) << '\n';
    } else if (cost->parsed()) {
      const auto& f = f_cost;
      CostModel costs;
      costs.fetch = f.real_or("fetch", 0.0);
      costs.hash = f.real_or("hash", 0.0);
      costs.disk = f.real_or("disk", 0.0);
      costs.c1 = f.real_or("c1", costs.c1);
      costs.c2 = f.real_or("c2", costs.c2);
      RuntimeInputs in{f.real("n1"), f.real("m1"), f.real("a"), f.real("b"), f.real("k"), f.real("batch-size")};
      const auto r = runtime_estimate(costs, in);
      ojson j;
      j["t1"] = r.t1;
      j["t2"] = r.t2;
      j["t1_batched"] = r.t1_batched;
      j["t2_batched"] = r.t2_batched;
      j["batched_build_cheaper"] = r.t1_batched < r.t1;
      buf << j.dump(2) << '\n';
    }
  } catch (const CLI::ParseError& e) {
    std::ostringstream help_out;
    const int code = app.exit(e, help_out, err);
    if (code == 0) {
      out << help_out.str();
      return 0;
    }
    err << usage();
    return 2;
  } catch (const usage_error& e) {
    err << "error: " << e.what() << '\n' << usage();
    return 2;
  } catch (const format_error& e) {
    err << "format error at byte " << e.position() << ": " << e.what() << '\n';
    return 2;
  } catch (const io_error& e) {
    err << "io error: " << e.what() << '\n';
    return 2;
  } catch (const domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "format error: " << e.what() << '\n';
    return 2;
  }
  out << buf.str();
  return 0;
}

}  // namespace overlap_sketch::cli
