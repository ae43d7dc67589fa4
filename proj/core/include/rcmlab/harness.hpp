#pragma once

// Experiment configuration, dispatch and report emission behind the CLI.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rcmlab/connection.hpp"
#include "rcmlab/growth.hpp"

namespace rcmlab {

inline constexpr std::string_view kVersion = "0.3.0";

/// Invalid configuration; `field` is the offending key (dotted path).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct EventsConfig {
  double K = 2.0;
  std::vector<double> L{6.0, 10.0, 14.0};
  std::vector<double> M{6.0, 10.0, 14.0};
  int nx = 10;
  int ny = 10;
  std::uint64_t samples = 1;
  int distance = 8;

  friend bool operator==(const EventsConfig&, const EventsConfig&) = default;
};

struct LambdaCConfig {
  std::string criterion = "spanning";  // or "theta"
  double level = 0.5;
  double tau = 0.05;
  double width = 0.05;
  int max_iterations = 12;

  friend bool operator==(const LambdaCConfig&, const LambdaCConfig&) = default;
};

struct ExperimentConfig {
  std::string subcommand = "giant";
  ConnectionFunction phi = ConnectionFunction::hard_disk();
  std::vector<double> lambda{2.0};
  std::vector<double> s{32.0, 64.0, 128.0};
  std::uint64_t replicates = 200;
  std::uint64_t seed = 1;
  StoppingRule rule{};
  std::uint64_t k_report = 100;
  double mecke_K = 1.0;
  double fkg_K = 1.0;
  double fkg_l1_fraction = 0.5;  // event L1 >= fraction * lambda * s^2
  EventsConfig events;
  LambdaCConfig lambda_c;
  std::string out = "rcmlab-out";
  unsigned workers = 0;
  std::uint64_t memory_limit_mb = 1024;
  bool dump_edges = false;
  bool dump_trace = false;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Subcommands that run an experiment (excludes report and print-config).
const std::vector<std::string>& experiment_subcommands();

/// Pretty-printed JSON; parse_config(to_json_text(c)) == c.
std::string to_json_text(const ExperimentConfig& config);

/// Overlays the keys present in `text` onto `base`. Unknown keys and type
/// errors raise ConfigError naming the key.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Range and consistency checks; raises ConfigError naming the field.
void validate(const ExperimentConfig& config);

/// A bare kind name (built-in defaults), a JSON object, or a path to a JSON file.
ConnectionFunction parse_phi(std::string_view text);
std::string phi_to_json_text(const ConnectionFunction& phi);

/// `requested` unless RCMLAB_WORKERS is set to a positive integer.
unsigned resolve_workers(unsigned requested);

/// FNV-1a 64 of the file bytes as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

/// Runs the configured experiment, writing into config.out. Returns the
/// process exit status: 0 success, 1 resource or runtime failure, 2 config error.
int run_experiment(const ExperimentConfig& config, std::ostream& out, std::ostream& err);

/// Per-s table (tab-separated) aggregated over every run directory at or one
/// level below `dir`. Returns 1 when no manifest is found or one is corrupt.
int emit_report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace rcmlab
