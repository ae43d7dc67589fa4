#include "rcmlab/harness.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rcmlab/estimators.hpp"
#include "rcmlab/events.hpp"
#include "rcmlab/graph.hpp"

namespace rcmlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCsvHeader = "replicate,lambda,s,L1_frac,L2_frac,status,cluster_size,seed";
constexpr std::string_view kNA = "NA";

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return std::string(kNA);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string hex(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(x));
  return buf;
}

/// JSON has no infinities; they are written as null.
json jnum(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json estimate_json(const EstimateWithCI& e) {
  return {{"value", jnum(e.value)}, {"half_width", jnum(e.half_width)}, {"replicates", e.replicates}};
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string tag_of(double x) { return num(x); }

class Runner {
 public:
  Runner(const ExperimentConfig& c, std::ostream& log) : c_(c), log_(log), dir_(c.out) {
    run_.workers = resolve_workers(c.workers);
    run_.memory_limit_bytes = static_cast<std::size_t>(c.memory_limit_mb) << 20;
  }

  void run() {
    fs::create_directories(dir_);
    started_ = std::chrono::steady_clock::now();
    manifest_ = {{"artifact", "rcmlab"},
                 {"version", std::string(kVersion)},
                 {"config", json::parse(to_json_text(c_))},
                 {"started_utc", utc_now()},
                 {"status", "running"},
                 {"outputs", json::object()},
                 {"task_seeds",
                  {{"rule", "task seed of replicate r = derive_key(family, r); family = stream_seed(seed, tag)"},
                   {"families", json::object()}}}};
    write_manifest();

    json results;
    const std::string& sub = c_.subcommand;
    if (sub == "sample") results = sample();
    else if (sub == "giant") results = giant();
    else if (sub == "theta") results = theta();
    else if (sub == "lambda-c") results = lambda_c();
    else if (sub == "events") results = events();
    else if (sub == "block-field") results = block_field();
    else if (sub == "mecke") results = mecke();
    else if (sub == "fkg") results = fkg();

    const json summary = {{"subcommand", sub},
                          {"version", std::string(kVersion)},
                          {"seed", c_.seed},
                          {"phi", json::parse(phi_to_json_text(c_.phi))},
                          {"results", results}};
    write_text("summary.json", summary.dump(2) + "\n");

    for (const std::string& f : files_) manifest_["outputs"][f] = file_checksum(dir_ / f);
    manifest_["status"] = "complete";
    manifest_["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    write_manifest();
    log_ << "wrote " << files_.size() << " output files to " << dir_.string() << '\n';
  }

 private:
  void write_manifest() {
    std::ofstream os(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    os << manifest_.dump(2) << '\n';
    if (!os) throw std::runtime_error("cannot write " + (dir_ / "manifest.json").string());
  }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
    os << text;
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
  }

  void family(const std::string& name, std::uint64_t key) {
    manifest_["task_seeds"]["families"][name] = hex(key);
  }

  std::ostringstream csv() {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    return os;
  }

  json sample() {
    const std::uint64_t fam = stream_seed(c_.seed, "sample");
    family("sample", fam);
    std::ostringstream pts_csv;
    pts_csv << "lambda,s,replicate,x,y,id\n";
    json out = json::array();
    for (double lambda : c_.lambda) {
      for (double s : c_.s) {
        std::vector<double> counts;
        for (std::uint64_t r = 0; r < c_.replicates; ++r) {
          const PointSet p = sample_points(lambda, BoxSpec(s), fam, r, c_.phi.range());
          counts.push_back(static_cast<double>(p.size()));
          for (const Site& site : p.sites) {
            pts_csv << num(lambda) << ',' << num(s) << ',' << r << ',' << num(site.pos.x) << ','
                    << num(site.pos.y) << ',' << site.id << '\n';
          }
          if (c_.dump_edges && r == 0) dump_edges(p, "edges_lambda" + tag_of(lambda) + "_s" + tag_of(s) + ".txt");
        }
        out.push_back({{"lambda", lambda},
                       {"s", s},
                       {"expected_count", lambda * s * s},
                       {"count", estimate_json(mean_estimate(counts))}});
      }
    }
    write_text("points.csv", pts_csv.str());
    return out;
  }

  void dump_edges(const PointSet& p, const std::string& name) {
    std::ostringstream os;
    write_edge_list(os, build_edges(p, c_.phi));
    write_text(name, os.str());
  }

  json giant() {
    std::ostringstream rows = csv();
    json out = json::array();
    for (double lambda : c_.lambda) {
      for (double s : c_.s) {
        family("giant/s=" + tag_of(s), giant_stream(c_.seed, s));
        log_ << "giant: lambda=" << lambda << " s=" << s << " replicates=" << c_.replicates << '\n';
        const GiantStatistics g = giant_statistics(c_.phi, lambda, s, c_.replicates, c_.seed, run_);
        for (const GiantRow& row : g.rows) {
          rows << row.replicate << ',' << num(lambda) << ',' << num(s) << ',' << num(row.L1_frac) << ','
               << num(row.L2_frac) << ',' << kNA << ',' << kNA << ',' << hex(row.task_seed) << '\n';
        }
        out.push_back({{"lambda", lambda},
                       {"s", s},
                       {"L1_frac", estimate_json(g.L1)},
                       {"L2_frac", estimate_json(g.L2)},
                       {"median_L1_frac", g.median_L1},
                       {"median_L2_frac", g.median_L2}});
        if (c_.dump_edges) {
          dump_edges(sample_points(lambda, BoxSpec(s), giant_stream(c_.seed, s), 0, c_.phi.range()),
                     "edges_lambda" + tag_of(lambda) + "_s" + tag_of(s) + ".txt");
        }
      }
    }
    write_text("results.csv", rows.str());
    return out;
  }

  json theta() {
    family("theta", stream_seed(c_.seed, tags::theta));
    std::ostringstream rows = csv();
    json out = json::array();
    ThetaOptions opt;
    opt.k_report = c_.k_report;
    opt.run = run_;
    for (double lambda : c_.lambda) {
      log_ << "theta: lambda=" << lambda << " replicates=" << c_.replicates << '\n';
      const ThetaEstimate t = estimate_theta(c_.phi, lambda, c_.rule, c_.replicates, c_.seed, opt);
      for (const ClusterOutcome& o : t.outcomes) {
        rows << o.replicate << ',' << num(lambda) << ',' << kNA << ',' << kNA << ',' << kNA << ','
             << to_string(o.status) << ',' << o.size << ',' << hex(o.task_seed) << '\n';
      }
      json pi = json::object();
      for (const auto& [k, v] : t.pi_hat) pi[std::to_string(k)] = v;
      out.push_back({{"lambda", lambda},
                     {"theta_hat", estimate_json(t.theta_hat)},
                     {"escaped_fraction", t.escaped_fraction},
                     {"capped_fraction", t.capped_fraction},
                     {"residual", t.residual},
                     {"k_report", t.k_report},
                     {"pi_hat", pi},
                     {"rule", {{"k_max", t.rule.max_size}, {"R_max", t.rule.escape_radius}}}});
      if (c_.dump_trace) dump_trace(lambda);
    }
    write_text("results.csv", rows.str());
    return out;
  }

  void dump_trace(double lambda) {
    const ReplicateStreams st(stream_seed(c_.seed, tags::theta), 0);
    std::ostringstream os;
    os << "# replicate 0: finished_id candidate_id distance mark\n";
    const RevealTrace trace = [&](VertexId a, VertexId b, double d, bool edge) {
      os << a << ' ' << b << ' ' << num(d) << ' ' << (edge ? 1 : 0) << '\n';
    };
    GrowthOptions g;
    g.memory_limit_bytes = run_.memory_limit_bytes;
    g.trace = &trace;
    grow_cluster(SeedRegion::point({0.0, 0.0}), PoissonPlane(lambda, c_.phi.range(), st.points), st.edges,
                 c_.phi, c_.rule, g);
    write_text("trace_lambda" + tag_of(lambda) + ".txt", os.str());
  }

  json lambda_c() {
    family("lambda-c", stream_seed(c_.seed, tags::lambda_c));
    LambdaCCriterion crit;
    crit.kind = c_.lambda_c.criterion == "theta" ? LambdaCCriterion::Kind::theta_threshold
                                                 : LambdaCCriterion::Kind::spanning;
    crit.level = c_.lambda_c.level;
    crit.tau = c_.lambda_c.tau;
    crit.width = c_.lambda_c.width;
    crit.max_iterations = c_.lambda_c.max_iterations;
    crit.replicates = c_.replicates;
    log_ << "lambda-c: " << crit.describe() << '\n';
    const LambdaCBracket b = estimate_lambda_c(c_.phi, c_.s, crit, c_.seed, run_);

    std::ostringstream rows;
    rows << "s,replicate,threshold\n";
    json per_s = json::array();
    for (const CrossingStats& cs : b.per_s) {
      for (std::size_t r = 0; r < cs.thresholds.size(); ++r) {
        rows << num(cs.s) << ',' << r << ',' << num(cs.thresholds[r]) << '\n';
      }
      json evals = json::array();
      for (const auto& [lambda, e] : cs.evaluations) evals.push_back({{"lambda", lambda}, {"criterion", estimate_json(e)}});
      per_s.push_back({{"s", cs.s},
                       {"lower", cs.lower},
                       {"upper", cs.upper},
                       {"iterations", cs.iterations},
                       {"monotone", cs.monotone},
                       {"evaluations", evals}});
    }
    write_text("lambda_c.csv", rows.str());
    return {{"lower", b.lower},   {"upper", b.upper}, {"criterion", b.criterion},
            {"agree", b.agree},   {"monotone", b.monotone}, {"per_s", per_s}};
  }

  json events() {
    family("event-U", stream_seed(c_.seed, tags::event_u));
    family("event-F", stream_seed(c_.seed, tags::event_f));
    std::ostringstream rows;
    rows << "event,K,parameter,lambda,estimate,half_width,replicates\n";
    json out = json::array();
    for (double lambda : c_.lambda) {
      log_ << "events: lambda=" << lambda << " K=" << c_.events.K << '\n';
      json u = json::array();
      json f = json::array();
      for (const auto& [L, e] : grid_search_U(c_.phi, c_.events.K, lambda, c_.events.L, c_.replicates, c_.seed, run_)) {
        rows << "U," << num(c_.events.K) << ',' << num(L) << ',' << num(lambda) << ',' << num(e.value) << ','
             << num(e.half_width) << ',' << e.replicates << '\n';
        u.push_back({{"L", L}, {"estimate", estimate_json(e)}});
      }
      for (const auto& [M, e] : grid_search_F(c_.phi, c_.events.K, lambda, c_.events.M, c_.replicates, c_.seed, run_)) {
        rows << "F," << num(c_.events.K) << ',' << num(M) << ',' << num(lambda) << ',' << num(e.value) << ','
             << num(e.half_width) << ',' << e.replicates << '\n';
        f.push_back({{"M", M}, {"estimate", estimate_json(e)}});
      }
      out.push_back({{"lambda", lambda}, {"K", c_.events.K}, {"U", u}, {"F", f}});
    }
    write_text("events.csv", rows.str());
    return out;
  }

  json block_field() {
    family("block-field", stream_seed(c_.seed, tags::block_field));
    const BlockParams p{c_.events.K, c_.events.M.front(), c_.lambda.front()};
    std::vector<BlockFieldSample> samples;
    std::ostringstream dump;
    json fractions = json::array();
    for (std::uint64_t j = 0; j < c_.events.samples; ++j) {
      log_ << "block-field: sample " << j << '\n';
      samples.push_back(block_field_sample(c_.phi, p, c_.events.nx, c_.events.ny, c_.seed, j, run_));
      write_block_field(dump, samples.back());
      fractions.push_back(samples.back().fraction());
    }
    write_text("block_field.txt", dump.str());
    double mean = 0.0;
    for (const BlockFieldSample& s : samples) mean += s.fraction();
    mean /= static_cast<double>(samples.size());
    const DependenceReport d = dependence_check(samples, c_.events.distance);
    const HomogeneityReport h = homogeneity_check(samples);
    return {{"K", p.K},
            {"M", p.M},
            {"lambda", p.lambda},
            {"nx", c_.events.nx},
            {"ny", c_.events.ny},
            {"fractions", fractions},
            {"mean_fraction", mean},
            {"dependence",
             {{"distance", d.distance},
              {"pairs_per_sample", d.pairs_per_sample},
              {"covariance", d.covariance},
              {"sigma", d.sigma},
              {"correlation", d.correlation},
              {"min_center_distance", jnum(d.min_center_distance)},
              {"structural_disjoint", d.structural_disjoint},
              {"within_3_sigma", d.within_3_sigma},
              {"adjacent_correlation", d.adjacent_correlation}}},
            {"homogeneity", {{"chi_square", h.chi_square}, {"dof", h.dof}, {"p_value", h.p_value}, {"ok", h.ok}}}};
  }

  json mecke() {
    family("mecke-lhs", stream_seed(c_.seed, tags::mecke_lhs));
    family("mecke-rhs", stream_seed(c_.seed, tags::mecke_rhs));
    family("mecke-theta", stream_seed(c_.seed, tags::mecke_theta));
    json out = json::array();
    for (double lambda : c_.lambda) {
      for (double s : c_.s) {
        log_ << "mecke: lambda=" << lambda << " s=" << s << '\n';
        const MeckeReport a = mecke_check_Ns(c_.phi, lambda, c_.mecke_K, s, c_.replicates, c_.seed, run_);
        const MeckeSecondReport b = mecke_check_second(c_.phi, lambda, s, c_.replicates, c_.seed, run_);
        out.push_back({{"lambda", lambda},
                       {"s", s},
                       {"K", c_.mecke_K},
                       {"first_order",
                        {{"lhs", estimate_json(a.lhs)},
                         {"rhs", estimate_json(a.rhs)},
                         {"sigma", a.sigma},
                         {"compatible", a.compatible}}},
                       {"second_order",
                        {{"lhs", estimate_json(b.lhs)},
                         {"rhs", estimate_json(b.rhs)},
                         {"sigma", b.sigma},
                         {"compatible", b.compatible},
                         {"both_fraction", estimate_json(b.both_fraction)},
                         {"theta_s", estimate_json(b.theta_s)},
                         {"theta_s_squared", b.theta_s_squared},
                         {"allowance", b.allowance},
                         {"factorization_ok", b.factorization_ok}}}});
      }
    }
    return out;
  }

  json fkg() {
    family("fkg", stream_seed(c_.seed, tags::fkg));
    json out = json::array();
    for (double lambda : c_.lambda) {
      for (double s : c_.s) {
        log_ << "fkg: lambda=" << lambda << " s=" << s << '\n';
        const std::vector<std::pair<IncreasingEvent, IncreasingEvent>> pairs{
            {event_nonempty(), event_nonempty()},
            {event_L1_at_least(c_.fkg_l1_fraction * lambda * s * s), event_disk_to_boundary(c_.fkg_K)}};
        const FkgReport r = fkg_sanity(c_.phi, lambda, s, pairs, c_.replicates, c_.seed, run_);
        json items = json::array();
        for (const CovarianceReport& cr : r.pairs) {
          items.push_back({{"first", cr.first},
                           {"second", cr.second},
                           {"p_first", cr.p_first},
                           {"p_second", cr.p_second},
                           {"covariance", cr.covariance},
                           {"sigma", cr.sigma},
                           {"ok", cr.ok}});
        }
        out.push_back({{"lambda", lambda}, {"s", s}, {"pairs", items}, {"ok", r.ok}});
      }
    }
    return out;
  }

  const ExperimentConfig& c_;
  std::ostream& log_;
  fs::path dir_;
  RunOptions run_;
  json manifest_;
  std::vector<std::string> files_;
  std::chrono::steady_clock::time_point started_;
};

// --- report -------------------------------------------------------------------

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& text, const fs::path& file) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ReportError("malformed number '" + text + "' in " + file.string());
  }
}

json read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot read manifest " + path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception&) {
    throw ReportError("corrupt manifest " + path.string());
  }
  if (!m.is_object() || !m.contains("config") || !m["config"].contains("subcommand") ||
      !m.contains("outputs") || !m["outputs"].is_object() || m.value("status", "") != "complete") {
    throw ReportError("corrupt or incomplete manifest " + path.string());
  }
  for (const auto& [name, sum] : m["outputs"].items()) {
    const fs::path f = path.parent_path() / name;
    if (!fs::exists(f)) throw ReportError("missing output " + f.string() + " listed in " + path.string());
    if (!sum.is_string() || file_checksum(f) != sum.get<std::string>()) {
      throw ReportError("checksum mismatch for " + f.string() + " (manifest " + path.string() + ")");
    }
  }
  return m;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate(config);
    Runner(config, out).run();
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ResourceError& e) {
    err << "resource error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int emit_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  try {
    std::vector<fs::path> manifests;
    if (fs::is_directory(dir)) {
      if (fs::exists(dir / "manifest.json")) manifests.push_back(dir / "manifest.json");
      std::vector<fs::path> subdirs;
      for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) subdirs.push_back(entry.path());
      }
      std::sort(subdirs.begin(), subdirs.end());
      for (const fs::path& d : subdirs) manifests.push_back(d / "manifest.json");
    }
    if (manifests.empty()) throw ReportError("no manifest.json found in " + dir.string());

    // (lambda, s) -> per-replicate L1 and L2 fractions; lambda -> theta estimate.
    std::map<std::pair<double, double>, std::pair<std::vector<double>, std::vector<double>>> giant;
    std::map<double, double> theta;
    for (const fs::path& mpath : manifests) {
      const json m = read_manifest(mpath);
      const std::string sub = m["config"]["subcommand"].get<std::string>();
      const fs::path run_dir = mpath.parent_path();
      if (sub == "giant") {
        const fs::path csv = run_dir / "results.csv";
        std::ifstream in(csv);
        std::string line;
        if (!std::getline(in, line) || line != kCsvHeader) throw ReportError("bad CSV header in " + csv.string());
        while (std::getline(in, line)) {
          const auto cells = split(line);
          if (cells.size() != 8) throw ReportError("malformed row in " + csv.string());
          auto& slot = giant[{parse_double(cells[1], csv), parse_double(cells[2], csv)}];
          slot.first.push_back(parse_double(cells[3], csv));
          slot.second.push_back(parse_double(cells[4], csv));
        }
      } else if (sub == "theta") {
        const fs::path spath = run_dir / "summary.json";
        std::ifstream in(spath);
        json s;
        try {
          s = json::parse(in);
          for (const json& r : s.at("results")) {
            theta[r.at("lambda").get<double>()] = r.at("theta_hat").at("value").get<double>();
          }
        } catch (const json::exception&) {
          throw ReportError("corrupt summary " + spath.string());
        }
      }
    }

    out << "lambda\ts\treplicates\tmean_L1_frac\thw_L1_frac\tmean_L2_frac\thw_L2_frac\tlambda_theta\tabs_gap\n";
    auto cell = [](const EstimateWithCI& e, bool hw) {
      const double v = hw ? e.half_width : e.value;
      return (hw && !e.has_ci()) ? std::string(kNA) : num(v);
    };
    for (const auto& [key, vals] : giant) {
      const auto [lambda, s] = key;
      const EstimateWithCI l1 = mean_estimate(vals.first);
      const EstimateWithCI l2 = mean_estimate(vals.second);
      const auto it = theta.find(lambda);
      const std::string ref = it == theta.end() ? std::string(kNA) : num(lambda * it->second);
      const std::string gap = it == theta.end() ? std::string(kNA) : num(std::abs(l1.value - lambda * it->second));
      out << num(lambda) << '\t' << num(s) << '\t' << vals.first.size() << '\t' << cell(l1, false) << '\t'
          << cell(l1, true) << '\t' << cell(l2, false) << '\t' << cell(l2, true) << '\t' << ref << '\t' << gap
          << '\n';
    }
    return 0;
  } catch (const ReportError& e) {
    err << "report error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "report error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace rcmlab
