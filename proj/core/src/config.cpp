#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rcmlab/harness.hpp"
#include "rcmlab/rng.hpp"

namespace rcmlab {

using nlohmann::json;

namespace {

// --- reading ------------------------------------------------------------------

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(std::string_view k) const { return path_.empty() ? std::string(k) : path_ + "." + std::string(k); }
  bool has(std::string_view k) const { return j_.contains(std::string(k)); }
  const json& at(std::string_view k) const { return j_.at(std::string(k)); }

  void reject_unknown(std::initializer_list<std::string_view> known) const {
    for (const auto& item : j_.items()) {
      if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
        throw ConfigError(key(item.key()), "unknown key");
      }
    }
  }

  void number(std::string_view k, double& out) const {
    if (!has(k)) return;
    const json& v = at(k);
    if (!v.is_number()) throw ConfigError(key(k), "expected a number");
    out = v.get<double>();
  }

  template <class Int>
  void integer(std::string_view k, Int& out) const {
    if (!has(k)) return;
    const json& v = at(k);
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
      if (static_cast<std::uint64_t>(out) != v.get<std::uint64_t>()) throw ConfigError(key(k), "out of range");
      return;
    }
    if (v.is_number_integer()) throw ConfigError(key(k), "must be nonnegative");
    throw ConfigError(key(k), "expected a nonnegative integer");
  }

  void signed_integer(std::string_view k, int& out) const {
    if (!has(k)) return;
    const json& v = at(k);
    if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < -1'000'000'000 || x > 1'000'000'000) throw ConfigError(key(k), "out of range");
    out = static_cast<int>(x);
  }

  void boolean(std::string_view k, bool& out) const {
    if (!has(k)) return;
    if (!at(k).is_boolean()) throw ConfigError(key(k), "expected true or false");
    out = at(k).get<bool>();
  }

  void string(std::string_view k, std::string& out) const {
    if (!has(k)) return;
    if (!at(k).is_string()) throw ConfigError(key(k), "expected a string");
    out = at(k).get<std::string>();
  }

  /// A number or a list of numbers.
  void grid(std::string_view k, std::vector<double>& out) const {
    if (!has(k)) return;
    const json& v = at(k);
    if (v.is_number()) {
      out = {v.get<double>()};
      return;
    }
    if (!v.is_array()) throw ConfigError(key(k), "expected a number or a list of numbers");
    out.clear();
    for (const json& x : v) {
      if (!x.is_number()) throw ConfigError(key(k), "expected a list of numbers");
      out.push_back(x.get<double>());
    }
  }

  Reader child(std::string_view k) const { return Reader(at(k), key(k)); }

 private:
  const json& j_;
  std::string path_;
};

ConnectionFunction phi_from_json(const json& j, const std::string& field) {
  const Reader r(j, field);
  std::string kind;
  r.string("kind", kind);
  if (kind.empty()) throw ConfigError(r.key("kind"), "missing connection function kind");
  try {
    double range = 1.0;
    r.number("range", range);
    if (kind == "hard-disk") {
      r.reject_unknown({"kind", "range"});
      return ConnectionFunction::hard_disk(range);
    }
    if (kind == "linear-ramp") {
      r.reject_unknown({"kind", "range"});
      return ConnectionFunction::linear_ramp(range);
    }
    if (kind == "truncated-exponential") {
      r.reject_unknown({"kind", "range", "amplitude", "length"});
      double amplitude = 1.0;
      double length = 0.5;
      r.number("amplitude", amplitude);
      r.number("length", length);
      return ConnectionFunction::truncated_exponential(amplitude, length, range);
    }
    if (kind == "step-table") {
      r.reject_unknown({"kind", "steps"});
      if (!r.has("steps") || !r.at("steps").is_array()) {
        throw ConfigError(r.key("steps"), "expected a list of [breakpoint, value] pairs");
      }
      std::vector<Step> steps;
      for (const json& p : r.at("steps")) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
          throw ConfigError(r.key("steps"), "expected a list of [breakpoint, value] pairs");
        }
        steps.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      return ConnectionFunction::step_table(std::move(steps));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
  throw ConfigError(r.key("kind"), "unknown connection function kind '" + kind +
                                       "' (hard-disk, linear-ramp, truncated-exponential, step-table)");
}

json phi_to_json(const ConnectionFunction& phi) {
  json j;
  j["kind"] = std::string(phi.kind_name());
  switch (phi.kind()) {
    case ConnectionFunction::Kind::truncated_exponential:
      j["amplitude"] = phi.amplitude();
      j["length"] = phi.length();
      [[fallthrough]];
    case ConnectionFunction::Kind::hard_disk:
    case ConnectionFunction::Kind::linear_ramp:
      j["range"] = phi.range();
      break;
    case ConnectionFunction::Kind::step_table: {
      json steps = json::array();
      for (const Step& s : phi.steps()) steps.push_back({s.breakpoint, s.value});
      j["steps"] = steps;
      break;
    }
  }
  return j;
}

std::string slurp(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(field, "cannot read file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text, const std::string& field) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, std::string("malformed JSON: ") + e.what());
  }
}

// --- validation ---------------------------------------------------------------

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

void check_grid(const std::vector<double>& g, const std::string& field, bool positive) {
  require(!g.empty(), field, "must not be empty");
  for (double x : g) {
    require(std::isfinite(x), field, "values must be finite");
    require(positive ? x > 0.0 : x >= 0.0, field, positive ? "values must be > 0" : "values must be >= 0");
  }
  require(std::is_sorted(g.begin(), g.end()), field, "must be sorted ascending");
}

}  // namespace

const std::vector<std::string>& experiment_subcommands() {
  static const std::vector<std::string> names{"sample", "giant",       "theta", "lambda-c",
                                              "events", "block-field", "mecke", "fkg"};
  return names;
}

std::string phi_to_json_text(const ConnectionFunction& phi) { return phi_to_json(phi).dump(); }

ConnectionFunction parse_phi(std::string_view text) {
  const std::string field = "phi";
  if (text.empty()) throw ConfigError(field, "empty connection function");
  if (text.front() == '{') return phi_from_json(parse_json(text, field), field);
  if (text == "hard-disk") return ConnectionFunction::hard_disk();
  if (text == "linear-ramp") return ConnectionFunction::linear_ramp();
  if (text == "truncated-exponential") return ConnectionFunction::truncated_exponential(1.0, 0.5, 1.0);
  const std::filesystem::path path{std::string(text)};
  if (std::filesystem::exists(path)) return phi_from_json(parse_json(slurp(path, field), field), field);
  throw ConfigError(field, "'" + std::string(text) +
                               "' is not a kind name, a JSON object, or an existing file");
}

std::string to_json_text(const ExperimentConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["phi"] = phi_to_json(c.phi);
  j["lambda"] = c.lambda;
  j["s"] = c.s;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["rule"] = {{"k_max", c.rule.max_size}, {"R_max", c.rule.escape_radius}};
  j["k_report"] = c.k_report;
  j["mecke"] = {{"K", c.mecke_K}};
  j["fkg"] = {{"K", c.fkg_K}, {"l1_fraction", c.fkg_l1_fraction}};
  j["events"] = {{"K", c.events.K},         {"L", c.events.L},   {"M", c.events.M},
                 {"nx", c.events.nx},       {"ny", c.events.ny}, {"samples", c.events.samples},
                 {"distance", c.events.distance}};
  j["lambda_c"] = {{"criterion", c.lambda_c.criterion},
                   {"level", c.lambda_c.level},
                   {"tau", c.lambda_c.tau},
                   {"width", c.lambda_c.width},
                   {"max_iterations", c.lambda_c.max_iterations}};
  j["out"] = c.out;
  j["workers"] = c.workers;
  j["memory_limit_mb"] = c.memory_limit_mb;
  j["dump"] = {{"edges", c.dump_edges}, {"trace", c.dump_trace}};
  return j.dump(2) + "\n";
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c) {
  const json j = parse_json(text, "<config>");
  const Reader r(j, "");
  r.reject_unknown({"subcommand", "phi", "lambda", "s", "replicates", "seed", "rule", "k_report", "mecke",
                    "fkg", "events", "lambda_c", "out", "workers", "memory_limit_mb", "dump"});
  r.string("subcommand", c.subcommand);
  if (r.has("phi")) {
    const json& p = r.at("phi");
    c.phi = p.is_string() ? parse_phi(p.get<std::string>()) : phi_from_json(p, "phi");
  }
  r.grid("lambda", c.lambda);
  r.grid("s", c.s);
  r.integer("replicates", c.replicates);
  r.integer("seed", c.seed);
  if (r.has("rule")) {
    const Reader rr = r.child("rule");
    rr.reject_unknown({"k_max", "R_max"});
    rr.integer("k_max", c.rule.max_size);
    rr.number("R_max", c.rule.escape_radius);
  }
  r.integer("k_report", c.k_report);
  if (r.has("mecke")) {
    const Reader m = r.child("mecke");
    m.reject_unknown({"K"});
    m.number("K", c.mecke_K);
  }
  if (r.has("fkg")) {
    const Reader f = r.child("fkg");
    f.reject_unknown({"K", "l1_fraction"});
    f.number("K", c.fkg_K);
    f.number("l1_fraction", c.fkg_l1_fraction);
  }
  if (r.has("events")) {
    const Reader e = r.child("events");
    e.reject_unknown({"K", "L", "M", "nx", "ny", "samples", "distance"});
    e.number("K", c.events.K);
    e.grid("L", c.events.L);
    e.grid("M", c.events.M);
    e.signed_integer("nx", c.events.nx);
    e.signed_integer("ny", c.events.ny);
    e.integer("samples", c.events.samples);
    e.signed_integer("distance", c.events.distance);
  }
  if (r.has("lambda_c")) {
    const Reader l = r.child("lambda_c");
    l.reject_unknown({"criterion", "level", "tau", "width", "max_iterations"});
    l.string("criterion", c.lambda_c.criterion);
    l.number("level", c.lambda_c.level);
    l.number("tau", c.lambda_c.tau);
    l.number("width", c.lambda_c.width);
    l.signed_integer("max_iterations", c.lambda_c.max_iterations);
  }
  r.string("out", c.out);
  r.integer("workers", c.workers);
  r.integer("memory_limit_mb", c.memory_limit_mb);
  if (r.has("dump")) {
    const Reader d = r.child("dump");
    d.reject_unknown({"edges", "trace"});
    d.boolean("edges", c.dump_edges);
    d.boolean("trace", c.dump_trace);
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  return parse_config(slurp(path, "config"), std::move(base));
}

void validate(const ExperimentConfig& c) {
  const auto& subs = experiment_subcommands();
  require(std::find(subs.begin(), subs.end(), c.subcommand) != subs.end(), "subcommand",
          "unknown subcommand '" + c.subcommand + "'");
  check_grid(c.lambda, "lambda", false);
  const double r2 = c.phi.range() * c.phi.range();
  require(c.lambda.back() * r2 <= 255.0, "lambda", "lambda * range^2 must be <= 255");
  check_grid(c.s, "s", true);
  require(c.replicates >= 1, "replicates", "must be >= 1");
  if (c.subcommand == "theta") require(c.replicates >= 100, "replicates", "theta needs >= 100 replicates");
  if (c.subcommand == "mecke" || c.subcommand == "fkg" || c.subcommand == "events" ||
      c.subcommand == "lambda-c") {
    require(c.replicates >= 2, "replicates", "must be >= 2");
  }
  require(c.rule.max_size >= 1, "rule.k_max", "must be >= 1");
  require(std::isfinite(c.rule.escape_radius) && c.rule.escape_radius > 0.0, "rule.R_max",
          "must be positive and finite");
  require(c.memory_limit_mb >= 1, "memory_limit_mb", "must be >= 1");
  require(!c.out.empty(), "out", "must not be empty");

  if (c.subcommand == "mecke") {
    require(std::isfinite(c.mecke_K) && c.mecke_K > 0.0, "mecke.K", "must be positive");
    require(c.mecke_K < 0.5 * c.s.front(), "mecke.K", "must be < s/2 for every s");
  }
  if (c.subcommand == "fkg") {
    require(std::isfinite(c.fkg_K) && c.fkg_K > 0.0, "fkg.K", "must be positive");
    require(c.fkg_K < 0.5 * c.s.front(), "fkg.K", "must be < s/2 for every s");
    require(std::isfinite(c.fkg_l1_fraction) && c.fkg_l1_fraction >= 0.0, "fkg.l1_fraction", "must be >= 0");
  }
  if (c.subcommand == "lambda-c") {
    require(c.s.size() >= 2, "s", "lambda-c needs at least two box sizes");
    require(c.lambda_c.criterion == "spanning" || c.lambda_c.criterion == "theta", "lambda_c.criterion",
            "must be 'spanning' or 'theta'");
    require(c.lambda_c.level > 0.0 && c.lambda_c.level < 1.0, "lambda_c.level", "must be in (0, 1)");
    require(c.lambda_c.tau > 0.0 && c.lambda_c.tau < 1.0, "lambda_c.tau", "must be in (0, 1)");
    require(std::isfinite(c.lambda_c.width) && c.lambda_c.width > 0.0, "lambda_c.width", "must be positive");
    require(c.lambda_c.max_iterations >= 1, "lambda_c.max_iterations", "must be >= 1");
  }
  if (c.subcommand == "events" || c.subcommand == "block-field") {
    const EventsConfig& e = c.events;
    require(std::isfinite(e.K) && e.K > 0.0, "events.K", "must be positive");
    check_grid(e.M, "events.M", true);
    if (c.subcommand == "events") {
      check_grid(e.L, "events.L", true);
      require(e.L.front() > e.K, "events.L", "every L must exceed K");
      require(e.M.front() > 2.0 * e.K, "events.M", "every M must exceed 2K");
    } else {
      require(e.M.front() > 3.0 * e.K, "events.M", "block field needs M > 3K");
      require(e.nx >= 1 && e.nx <= 10000, "events.nx", "must be in [1, 10000]");
      require(e.ny >= 1 && e.ny <= 10000, "events.ny", "must be in [1, 10000]");
      require(e.samples >= 1, "events.samples", "must be >= 1");
      require(e.distance >= 0, "events.distance", "must be >= 0");
    }
  }
}

unsigned resolve_workers(unsigned requested) {
  if (const char* env = std::getenv("RCMLAB_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<unsigned>(v);
  }
  return requested;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace rcmlab
