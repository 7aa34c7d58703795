#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualbench/model.hpp"
#include "dualbench/parsers.hpp"
#include "dualbench/verdict.hpp"

namespace dualbench::harness {

struct HarnessError : std::runtime_error {
  enum class Kind {
    ParseError,       // malformed plan or manifest
    ValidationError,  // well-formed but inconsistent
    Io,
    ManifestLocked,
    UnsupportedBenchmark,
  };

  HarnessError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind(kind) {}

  Kind kind;
};

/// Workload parameter as a function of the node count: either a constant or
/// "c*N" scaling linearly with nodes.
struct WorkloadRule {
  enum class Kind { Constant, LinearInNodes };
  Kind kind = Kind::Constant;
  double coeff = 0.0;

  double resolve(int nodes) const {
    return kind == Kind::Constant ? coeff : coeff * nodes;
  }

  bool operator==(const WorkloadRule&) const = default;
};

struct LaunchConfig {
  std::string account;
  std::string partition;
  std::string container_image;
  std::vector<std::string> extra_srun_flags;
  std::vector<std::string> modules;  // native runs only

  bool operator==(const LaunchConfig&) const = default;
};

struct PlanSystem {
  model::SystemDescriptor descriptor;
  LaunchConfig launch;

  bool operator==(const PlanSystem&) const = default;
};

/// Launchable application; the command may reference workload parameters as
/// {name} placeholders.
struct Application {
  std::string name;
  std::string command;

  bool operator==(const Application&) const = default;
};

struct BenchmarkEntry {
  model::BenchmarkKind kind;
  std::vector<std::string> systems;  // empty means every declared system
  std::vector<int> nodes;            // strictly increasing
  int tasks_per_node = 1;
  int gpus_per_node = 0;
  int repetitions = 1;
  std::map<std::string, WorkloadRule> workload;  // app benchmarks only

  bool operator==(const BenchmarkEntry&) const = default;
};

struct Tracing {
  bool ucx = false;
  bool nccl = false;

  bool operator==(const Tracing&) const = default;
};

struct Plan {
  std::vector<PlanSystem> systems;
  std::vector<Application> applications;
  std::vector<BenchmarkEntry> benchmarks;
  std::vector<model::EnvironmentKind::Kind> environments;  // native first
  Tracing tracing;
  verdict::ExpectationProfile profile;  // from the verify section
  std::string digest;                   // fnv-1a over the plan file bytes

  const PlanSystem* find_system(const std::string& name) const;
  const Application* find_application(const std::string& name) const;
};

// Strict load: unknown keys anywhere are rejected, references must resolve,
// and the expanded result paths must be unique.
Plan load_plan(const std::filesystem::path& path);

std::string fnv1a_hex(const std::string& bytes);

/// One concrete run: a cell of the plan matrix.
struct JobSpec {
  std::string system;
  model::EnvironmentKind environment;
  model::BenchmarkKind benchmark;
  int nodes = 1;
  int tasks_per_node = 1;
  int gpus_per_node = 0;
  int repetition = 0;  // 0-based
  std::map<std::string, double> workload;
  std::string output_path;  // <system>/<env>/<benchmark>/<N>n_r<R>.log

  bool operator==(const JobSpec&) const = default;
};

// Deterministic expansion order: benchmarks as declared, then systems,
// nodes ascending, native before container, repetitions ascending.
std::vector<JobSpec> expand_matrix(const Plan& plan);

std::string job_script_name(const JobSpec& spec);

// Complete sbatch script for one run. Application runs are wrapped to emit
// PARAM lines and a wall-clock SIMTIME line into the result log.
std::string render_job_script(const Plan& plan, const JobSpec& spec);

// Writes every job script under out_dir; returns the number written.
int write_job_scripts(const Plan& plan, const std::filesystem::path& out_dir);

struct IngestIssue {
  std::string path;
  std::string detail;

  bool operator==(const IngestIssue&) const = default;
};

struct IngestReport {
  std::vector<model::RunRecord> records;
  std::vector<std::string> missing;    // planned but absent result files
  std::vector<std::string> unmatched;  // present but not planned
  std::vector<IngestIssue> errors;     // unparseable result files
  std::vector<IngestIssue> violations; // parsed but invariant-breaking records
};

// Reads every planned result under results_dir; sibling .trace files are run
// through the transport ruleset. Unreadable or unparseable files become
// errors, not exceptions.
IngestReport scan_results(const Plan& plan, const std::filesystem::path& results_dir,
                          const parsers::TransportRuleset& ruleset);

// Line-delimited JSON, first record {"version": 1}. The write is atomic:
// staged to a temp file and renamed, guarded by a .lock file so concurrent
// ingests cannot interleave.
void write_manifest(const IngestReport& report, const std::filesystem::path& path);

IngestReport load_manifest(const std::filesystem::path& path);

// scan_results + write_manifest under <out_dir>/manifest.jsonl.
IngestReport ingest(const Plan& plan, const std::filesystem::path& results_dir,
                    const std::filesystem::path& out_dir,
                    const parsers::TransportRuleset& ruleset);

}  // namespace dualbench::harness
