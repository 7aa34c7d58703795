#include "dualbench/harness.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dualbench/model_json.hpp"

namespace dualbench::harness {

namespace fs = std::filesystem;
using Kind = HarnessError::Kind;
using Variant = model::BenchmarkKind::Variant;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError(Kind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_keys(const nlohmann::json& obj,
                std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&key](const char* a) { return key == a; }) == allowed.end())
      throw HarnessError(Kind::ParseError,
                         "unknown key '" + key + "' in " + where);
  }
}

model::BenchmarkKind benchmark_from_plan_name(const std::string& name) {
  if (name == "osu_init") return {Variant::OsuInit, {}};
  if (name == "osu_latency_intra") return {Variant::OsuLatencyIntra, {}};
  if (name == "osu_latency_inter") return {Variant::OsuLatencyInter, {}};
  if (name == "nccl_allreduce_single") return {Variant::NcclAllReduceSingleNode, {}};
  if (name == "nccl_allreduce_multi") return {Variant::NcclAllReduceMultiNode, {}};
  const auto strip = [&name](const char* suffix) -> std::string {
    const std::string s(suffix);
    if (name.size() > s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0)
      return name.substr(0, name.size() - s.size());
    return {};
  };
  if (auto app = strip("_strong"); !app.empty())
    return {Variant::AppStrongScaling, app};
  if (auto app = strip("_weak"); !app.empty()) return {Variant::AppWeakScaling, app};
  throw HarnessError(Kind::ParseError, "unknown benchmark '" + name + "'");
}

WorkloadRule workload_rule(const nlohmann::json& value, const std::string& name) {
  if (value.is_number()) return {WorkloadRule::Kind::Constant, value.get<double>()};
  if (value.is_string()) {
    static const std::regex linear(R"(^([0-9]+(?:\.[0-9]+)?)\s*\*\s*N$)");
    std::smatch m;
    const std::string s = value.get<std::string>();
    if (std::regex_match(s, m, linear))
      return {WorkloadRule::Kind::LinearInNodes, std::stod(m[1].str())};
  }
  throw HarnessError(Kind::ParseError, "workload parameter '" + name +
                                           "' must be a number or \"<c>*N\"");
}

std::set<std::string> command_placeholders(const std::string& command) {
  std::set<std::string> names;
  static const std::regex placeholder(R"(\{(\w+)\})");
  for (auto it = std::sregex_iterator(command.begin(), command.end(), placeholder);
       it != std::sregex_iterator(); ++it)
    names.insert((*it)[1].str());
  return names;
}

model::SystemDescriptor descriptor_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"name", "cores_per_node", "gpus_per_node", "nics_per_node",
              "gpu_interconnect", "nic_gpu_affinity", "launch"},
             "system");
  model::SystemDescriptor d;
  d.name = j.at("name").get<std::string>();
  d.cores_per_node = j.at("cores_per_node").get<int>();
  d.gpus_per_node = j.value("gpus_per_node", 0);
  d.nics_per_node = j.at("nics_per_node").get<int>();
  if (j.contains("gpu_interconnect")) {
    const auto& ic = j.at("gpu_interconnect");
    check_keys(ic, {"kind", "nvlink_width"}, "gpu_interconnect");
    const std::string kind = ic.at("kind").get<std::string>();
    if (kind == "none")
      d.gpu_interconnect.kind = model::GpuInterconnect::Kind::None;
    else if (kind == "pcie_only")
      d.gpu_interconnect.kind = model::GpuInterconnect::Kind::PcieOnly;
    else if (kind == "nvlink_bond")
      d.gpu_interconnect.kind = model::GpuInterconnect::Kind::NvlinkBond;
    else
      throw HarnessError(Kind::ParseError, "unknown gpu interconnect '" + kind + "'");
    d.gpu_interconnect.nvlink_width = ic.value("nvlink_width", 0);
  }
  if (j.contains("nic_gpu_affinity")) {
    for (const auto& a : j.at("nic_gpu_affinity")) {
      check_keys(a, {"gpu", "nic", "proximity"}, "nic_gpu_affinity");
      model::NicGpuAffinity aff;
      aff.gpu_index = a.at("gpu").get<int>();
      aff.nic_index = a.at("nic").get<int>();
      const std::string prox = a.at("proximity").get<std::string>();
      if (prox == "pix")
        aff.proximity = model::Proximity::Pix;
      else if (prox == "pxb")
        aff.proximity = model::Proximity::Pxb;
      else if (prox == "node")
        aff.proximity = model::Proximity::Node;
      else if (prox == "sys")
        aff.proximity = model::Proximity::Sys;
      else
        throw HarnessError(Kind::ParseError, "unknown proximity '" + prox + "'");
      d.nic_gpu_affinity.push_back(aff);
    }
  }
  return d;
}

LaunchConfig launch_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"account", "partition", "container_image", "extra_srun_flags",
              "modules"},
             "launch");
  LaunchConfig launch;
  launch.account = j.value("account", "");
  launch.partition = j.value("partition", "");
  launch.container_image = j.value("container_image", "");
  if (j.contains("extra_srun_flags"))
    for (const auto& f : j.at("extra_srun_flags"))
      launch.extra_srun_flags.push_back(f.get<std::string>());
  if (j.contains("modules"))
    for (const auto& m : j.at("modules")) launch.modules.push_back(m.get<std::string>());
  return launch;
}

void validate_entry_for_system(const BenchmarkEntry& entry,
                               const model::SystemDescriptor& system) {
  if (entry.tasks_per_node > system.cores_per_node)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + model::benchmark_dir_name(entry.kind) +
                           ": tasks_per_node exceeds cores on " + system.name);
  if (entry.gpus_per_node > system.gpus_per_node)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + model::benchmark_dir_name(entry.kind) +
                           ": gpus_per_node exceeds gpus on " + system.name);
}

void validate_entry_shape(const BenchmarkEntry& entry) {
  const std::string name = model::benchmark_dir_name(entry.kind);
  if (entry.nodes.empty())
    throw HarnessError(Kind::ValidationError, "benchmark " + name + ": no node counts");
  for (std::size_t i = 0; i < entry.nodes.size(); ++i) {
    if (entry.nodes[i] < 1)
      throw HarnessError(Kind::ValidationError,
                         "benchmark " + name + ": node counts must be >= 1");
    if (i > 0 && entry.nodes[i] <= entry.nodes[i - 1])
      throw HarnessError(Kind::ValidationError,
                         "benchmark " + name + ": node counts must be strictly increasing");
  }
  if (entry.tasks_per_node < 1)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + ": tasks_per_node must be >= 1");
  if (entry.gpus_per_node < 0)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + ": gpus_per_node must be >= 0");
  if (entry.repetitions < 1)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + ": repetitions must be >= 1");

  const Variant v = entry.kind.variant;
  const bool single_node =
      v == Variant::OsuLatencyIntra || v == Variant::NcclAllReduceSingleNode;
  const bool multi_node =
      v == Variant::OsuLatencyInter || v == Variant::NcclAllReduceMultiNode;
  if (single_node && (entry.nodes.size() != 1 || entry.nodes[0] != 1))
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + " runs on exactly one node");
  if (multi_node && entry.nodes.front() < 2)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + " needs at least two nodes");
  // osu_latency is a two-rank benchmark however it is spread.
  if (v == Variant::OsuLatencyIntra && entry.tasks_per_node != 2)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + " needs tasks_per_node == 2");
  if (v == Variant::OsuLatencyInter && entry.tasks_per_node != 1)
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + " needs tasks_per_node == 1");
  if (v == Variant::NcclAllReduceSingleNode || v == Variant::NcclAllReduceMultiNode) {
    if (entry.gpus_per_node < 1)
      throw HarnessError(Kind::ValidationError,
                         "benchmark " + name + " needs gpus_per_node >= 1");
    // A bandwidth table is one topology step; scan node counts as separate entries.
    if (entry.nodes.size() != 1)
      throw HarnessError(Kind::ValidationError,
                         "benchmark " + name + " takes exactly one node count");
  }
  if (!entry.kind.is_app() && !entry.workload.empty())
    throw HarnessError(Kind::ValidationError,
                       "benchmark " + name + " does not take workload parameters");
}

}  // namespace

const PlanSystem* Plan::find_system(const std::string& name) const {
  for (const auto& s : systems)
    if (s.descriptor.name == name) return &s;
  return nullptr;
}

const Application* Plan::find_application(const std::string& name) const {
  for (const auto& a : applications)
    if (a.name == name) return &a;
  return nullptr;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Plan load_plan(const fs::path& path) {
  const std::string bytes = read_file(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw HarnessError(Kind::ParseError,
                       "plan is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object())
    throw HarnessError(Kind::ParseError, "plan must be a JSON object");

  Plan plan;
  plan.digest = fnv1a_hex(bytes);
  try {
    check_keys(doc,
               {"systems", "applications", "benchmarks", "environments", "tracing",
                "verify"},
               "plan");

    for (const auto& js : doc.at("systems")) {
      PlanSystem ps;
      ps.descriptor = descriptor_from_json(js);
      if (js.contains("launch")) ps.launch = launch_from_json(js.at("launch"));
      if (plan.find_system(ps.descriptor.name))
        throw HarnessError(Kind::ValidationError,
                           "duplicate system '" + ps.descriptor.name + "'");
      const auto problems = model::validate_system(ps.descriptor);
      if (!problems.empty())
        throw HarnessError(Kind::ValidationError,
                           "system '" + ps.descriptor.name + "': " + problems.front());
      plan.systems.push_back(std::move(ps));
    }

    if (doc.contains("applications")) {
      for (const auto& ja : doc.at("applications")) {
        check_keys(ja, {"name", "command"}, "application");
        Application app{ja.at("name").get<std::string>(),
                        ja.at("command").get<std::string>()};
        if (app.name.empty() || app.command.empty())
          throw HarnessError(Kind::ValidationError,
                             "applications need a name and a command");
        if (plan.find_application(app.name))
          throw HarnessError(Kind::ValidationError,
                             "duplicate application '" + app.name + "'");
        plan.applications.push_back(std::move(app));
      }
    }

    for (const auto& jb : doc.at("benchmarks")) {
      check_keys(jb,
                 {"benchmark", "systems", "nodes", "tasks_per_node", "gpus_per_node",
                  "repetitions", "workload"},
                 "benchmark");
      BenchmarkEntry entry;
      entry.kind = benchmark_from_plan_name(jb.at("benchmark").get<std::string>());
      if (jb.contains("systems")) {
        for (const auto& s : jb.at("systems")) {
          const std::string name = s.get<std::string>();
          if (!plan.find_system(name))
            throw HarnessError(Kind::ValidationError,
                               "benchmark references unknown system '" + name + "'");
          entry.systems.push_back(name);
        }
        if (entry.systems.empty())
          throw HarnessError(Kind::ValidationError,
                             "benchmark systems list must not be empty");
      }
      for (const auto& n : jb.at("nodes")) entry.nodes.push_back(n.get<int>());
      entry.tasks_per_node = jb.at("tasks_per_node").get<int>();
      entry.gpus_per_node = jb.value("gpus_per_node", 0);
      entry.repetitions = jb.at("repetitions").get<int>();
      if (jb.contains("workload"))
        for (const auto& [name, value] : jb.at("workload").items())
          entry.workload[name] = workload_rule(value, name);

      validate_entry_shape(entry);
      if (entry.kind.is_app()) {
        const Application* app = plan.find_application(entry.kind.app);
        if (!app)
          throw HarnessError(Kind::ValidationError,
                             "benchmark references undeclared application '" +
                                 entry.kind.app + "'");
        for (const auto& ph : command_placeholders(app->command))
          if (!entry.workload.count(ph))
            throw HarnessError(Kind::ValidationError,
                               "command placeholder {" + ph +
                                   "} has no workload rule in benchmark " +
                                   model::benchmark_dir_name(entry.kind));
      }
      const std::vector<std::string>* targets = &entry.systems;
      std::vector<std::string> all;
      if (targets->empty()) {
        for (const auto& s : plan.systems) all.push_back(s.descriptor.name);
        targets = &all;
      }
      for (const auto& name : *targets)
        validate_entry_for_system(entry, plan.find_system(name)->descriptor);
      plan.benchmarks.push_back(std::move(entry));
    }

    std::set<model::EnvironmentKind::Kind> seen;
    for (const auto& je : doc.at("environments")) {
      const std::string name = je.get<std::string>();
      model::EnvironmentKind::Kind kind;
      if (name == "native")
        kind = model::EnvironmentKind::Kind::Native;
      else if (name == "container")
        kind = model::EnvironmentKind::Kind::Container;
      else
        throw HarnessError(Kind::ParseError, "unknown environment '" + name + "'");
      if (!seen.insert(kind).second)
        throw HarnessError(Kind::ValidationError, "duplicate environment '" + name + "'");
    }
    if (seen.empty())
      throw HarnessError(Kind::ValidationError, "plan declares no environments");
    // Native sorts first so comparisons always have their baseline leading.
    for (const auto kind : seen) plan.environments.push_back(kind);

    if (doc.contains("tracing")) {
      const auto& jt = doc.at("tracing");
      check_keys(jt, {"ucx", "nccl"}, "tracing");
      plan.tracing.ucx = jt.value("ucx", false);
      plan.tracing.nccl = jt.value("nccl", false);
    }
    if (doc.contains("verify"))
      plan.profile = verdict::profile_from_plan_section(doc.at("verify"));
  } catch (const nlohmann::json::exception& e) {
    throw HarnessError(Kind::ParseError,
                       "bad plan structure: " + std::string(e.what()));
  } catch (const parsers::ParseError& e) {
    throw HarnessError(Kind::ParseError, "bad verify section: " + std::string(e.what()));
  }

  if (std::count(plan.environments.begin(), plan.environments.end(),
                 model::EnvironmentKind::Kind::Container)) {
    for (const auto& entry : plan.benchmarks) {
      std::vector<std::string> targets = entry.systems;
      if (targets.empty())
        for (const auto& s : plan.systems) targets.push_back(s.descriptor.name);
      for (const auto& name : targets)
        if (plan.find_system(name)->launch.container_image.empty())
          throw HarnessError(Kind::ValidationError,
                             "system '" + name +
                                 "' has no container_image but containers are planned");
    }
  }

  const auto specs = expand_matrix(plan);
  std::set<std::string> paths;
  for (const auto& spec : specs)
    if (!paths.insert(spec.output_path).second)
      throw HarnessError(Kind::ValidationError,
                         "plan expands to duplicate result path " + spec.output_path);
  return plan;
}

std::vector<JobSpec> expand_matrix(const Plan& plan) {
  std::vector<JobSpec> specs;
  for (const auto& entry : plan.benchmarks) {
    std::vector<std::string> targets = entry.systems;
    if (targets.empty())
      for (const auto& s : plan.systems) targets.push_back(s.descriptor.name);
    for (const auto& system : targets) {
      const PlanSystem* ps = plan.find_system(system);
      for (const int nodes : entry.nodes) {
        for (const auto env_kind : plan.environments) {
          for (int rep = 0; rep < entry.repetitions; ++rep) {
            JobSpec spec;
            spec.system = system;
            spec.environment =
                env_kind == model::EnvironmentKind::Kind::Native
                    ? model::EnvironmentKind::native()
                    : model::EnvironmentKind::container(ps->launch.container_image);
            spec.benchmark = entry.kind;
            spec.nodes = nodes;
            spec.tasks_per_node = entry.tasks_per_node;
            spec.gpus_per_node = entry.gpus_per_node;
            spec.repetition = rep;
            for (const auto& [name, rule] : entry.workload)
              spec.workload[name] = rule.resolve(nodes);
            spec.output_path = system + "/" + model::environment_dir_name(env_kind) +
                               "/" + model::benchmark_dir_name(entry.kind) + "/" +
                               std::to_string(nodes) + "n_r" + std::to_string(rep) +
                               ".log";
            specs.push_back(std::move(spec));
          }
        }
      }
    }
  }
  return specs;
}

std::string job_script_name(const JobSpec& spec) {
  return spec.system + "_" + model::environment_dir_name(spec.environment) + "_" +
         model::benchmark_dir_name(spec.benchmark) + "_" +
         std::to_string(spec.nodes) + "n_r" + std::to_string(spec.repetition) +
         ".job";
}

namespace {

std::string format_workload_value(double v) {
  if (v == std::floor(v) && std::fabs(v) < 1e15)
    return std::to_string(static_cast<long long>(v));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string benchmark_command(const Plan& plan, const JobSpec& spec) {
  switch (spec.benchmark.variant) {
    case Variant::OsuInit: return "osu_init";
    case Variant::OsuLatencyIntra:
    case Variant::OsuLatencyInter: return "osu_latency";
    case Variant::NcclAllReduceSingleNode:
    case Variant::NcclAllReduceMultiNode: return "all_reduce_perf";
    case Variant::AppStrongScaling:
    case Variant::AppWeakScaling: break;
  }
  const Application* app = plan.find_application(spec.benchmark.app);
  if (!app)
    throw HarnessError(Kind::UnsupportedBenchmark,
                       "application '" + spec.benchmark.app + "' is not declared");
  std::string command = app->command;
  for (const auto& ph : command_placeholders(app->command)) {
    auto it = spec.workload.find(ph);
    if (it == spec.workload.end())
      throw HarnessError(Kind::ValidationError,
                         "placeholder {" + ph + "} has no value");
    const std::string needle = "{" + ph + "}";
    const std::string value = format_workload_value(it->second);
    for (std::size_t pos = command.find(needle); pos != std::string::npos;
         pos = command.find(needle, pos + value.size()))
      command.replace(pos, needle.size(), value);
  }
  return command;
}

}  // namespace

std::string render_job_script(const Plan& plan, const JobSpec& spec) {
  const PlanSystem* ps = plan.find_system(spec.system);
  if (!ps)
    throw HarnessError(Kind::ValidationError,
                       "job references unknown system '" + spec.system + "'");
  const bool container =
      spec.environment.kind == model::EnvironmentKind::Kind::Container;
  const bool nccl_bench =
      spec.benchmark.variant == Variant::NcclAllReduceSingleNode ||
      spec.benchmark.variant == Variant::NcclAllReduceMultiNode;
  const bool trace_nccl =
      plan.tracing.nccl &&
      (nccl_bench || (spec.benchmark.is_app() && spec.gpus_per_node > 0));
  const bool trace_ucx = plan.tracing.ucx && !nccl_bench;
  const bool traced = trace_nccl || trace_ucx;

  std::string base = job_script_name(spec);
  base.erase(base.size() - 4);  // drop ".job"
  std::string trace_path = spec.output_path;
  trace_path.replace(trace_path.size() - 4, 4, ".trace");

  std::ostringstream out;
  out << "#!/bin/bash\n";
  out << "#SBATCH --job-name=" << base << "\n";
  if (!ps->launch.account.empty())
    out << "#SBATCH --account=" << ps->launch.account << "\n";
  if (!ps->launch.partition.empty())
    out << "#SBATCH --partition=" << ps->launch.partition << "\n";
  out << "#SBATCH --nodes=" << spec.nodes << "\n";
  out << "#SBATCH --ntasks-per-node=" << spec.tasks_per_node << "\n";
  if (spec.gpus_per_node > 0)
    out << "#SBATCH --gpus-per-node=" << spec.gpus_per_node << "\n";
  out << "#SBATCH --output=results/" << spec.output_path << "\n";
  if (traced) out << "#SBATCH --error=results/" << trace_path << "\n";
  out << "set -euo pipefail\n\n";

  if (!container)
    for (const auto& m : ps->launch.modules) out << "module load " << m << "\n";
  if (trace_ucx) out << "export UCX_LOG_LEVEL=info\n";
  if (trace_nccl) out << "export NCCL_DEBUG=INFO\n";

  std::string launch = "srun --mpi=pmix";
  for (const auto& flag : ps->launch.extra_srun_flags) launch += " " + flag;
  if (container) {
    launch += " apptainer exec";
    if (spec.gpus_per_node > 0) launch += " --nv";
    launch += " " + ps->launch.container_image;
  }
  launch += " " + benchmark_command(plan, spec);

  if (spec.benchmark.is_app()) {
    for (const auto& [name, value] : spec.workload)
      out << "echo \"PARAM " << name << " " << format_workload_value(value) << "\"\n";
    out << "a=$(date +%s.%N)\n";
    out << launch << "\n";
    out << "b=$(date +%s.%N)\n";
    out << "awk -v a=\"$a\" -v b=\"$b\" 'BEGIN { printf \"SIMTIME %.3f\\n\", b - a }'\n";
  } else {
    out << launch << "\n";
  }
  return out.str();
}

int write_job_scripts(const Plan& plan, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw HarnessError(Kind::Io, "cannot create " + out_dir.string() + ": " +
                                     ec.message());
  int written = 0;
  for (const auto& spec : expand_matrix(plan)) {
    const fs::path path = out_dir / job_script_name(spec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw HarnessError(Kind::Io, "cannot write " + path.string());
    out << render_job_script(plan, spec);
    out.flush();
    if (!out) throw HarnessError(Kind::Io, "short write on " + path.string());
    ++written;
  }
  return written;
}

namespace {

model::Payload parse_payload(const JobSpec& spec, const std::string& text) {
  switch (spec.benchmark.variant) {
    case Variant::OsuInit: return parsers::parse_osu_init(text);
    case Variant::OsuLatencyIntra:
    case Variant::OsuLatencyInter: return parsers::parse_osu_latency(text);
    case Variant::NcclAllReduceSingleNode:
    case Variant::NcclAllReduceMultiNode: return parsers::parse_nccl_allreduce(text);
    case Variant::AppStrongScaling:
    case Variant::AppWeakScaling:
      return parsers::parse_app_timing(text, spec.benchmark.app);
  }
  throw HarnessError(Kind::UnsupportedBenchmark, "unhandled benchmark variant");
}

bool read_file_soft(const fs::path& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

}  // namespace

IngestReport scan_results(const Plan& plan, const fs::path& results_dir,
                          const parsers::TransportRuleset& ruleset) {
  IngestReport report;
  std::set<std::string> expected;
  for (const auto& spec : expand_matrix(plan)) {
    expected.insert(spec.output_path);
    const fs::path path = results_dir / spec.output_path;
    if (!fs::exists(path)) {
      report.missing.push_back(spec.output_path);
      continue;
    }
    std::string text;
    if (!read_file_soft(path, text)) {
      report.errors.push_back({spec.output_path, "unreadable"});
      continue;
    }
    model::RunRecord record;
    try {
      record.payload = parse_payload(spec, text);
    } catch (const parsers::ParseError& e) {
      report.errors.push_back({spec.output_path, e.what()});
      continue;
    }
    record.benchmark = spec.benchmark;
    record.environment = spec.environment;
    record.system = spec.system;
    record.nodes = spec.nodes;
    record.tasks_per_node = spec.tasks_per_node;
    record.gpus_per_node_used = spec.gpus_per_node;
    record.repetition = spec.repetition;
    record.source_path = spec.output_path;

    fs::path trace = path;
    trace.replace_extension(".trace");
    std::string trace_text;
    if (fs::exists(trace) && read_file_soft(trace, trace_text))
      record.transport_log = parsers::parse_transport_log(trace_text, ruleset);

    const PlanSystem* ps = plan.find_system(spec.system);
    for (const auto& violation : model::validate_run(record, ps->descriptor))
      report.violations.push_back({spec.output_path, violation});
    report.records.push_back(std::move(record));
  }

  if (fs::exists(results_dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(results_dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".log") continue;
      const std::string rel =
          fs::relative(entry.path(), results_dir).generic_string();
      if (!expected.count(rel)) report.unmatched.push_back(rel);
    }
  }
  std::sort(report.unmatched.begin(), report.unmatched.end());

  std::sort(report.records.begin(), report.records.end(),
            [](const model::RunRecord& a, const model::RunRecord& b) {
              return std::tuple(a.system, model::environment_dir_name(a.environment),
                                model::benchmark_dir_name(a.benchmark), a.nodes,
                                a.repetition) <
                     std::tuple(b.system, model::environment_dir_name(b.environment),
                                model::benchmark_dir_name(b.benchmark), b.nodes,
                                b.repetition);
            });
  return report;
}

namespace {

struct LockGuard {
  std::string path;
  ~LockGuard() {
    if (!path.empty()) ::unlink(path.c_str());
  }
};

}  // namespace

void write_manifest(const IngestReport& report, const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      throw HarnessError(Kind::Io, "cannot create " + path.parent_path().string());
  }
  const std::string lock = path.string() + ".lock";
  const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw HarnessError(Kind::ManifestLocked,
                         "manifest is locked by another ingest: " + lock);
    throw HarnessError(Kind::Io,
                       "cannot create lock " + lock + ": " + std::strerror(errno));
  }
  ::close(fd);
  LockGuard guard{lock};

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw HarnessError(Kind::Io, "cannot write " + tmp.string());
    out << nlohmann::ordered_json{{"version", 1}}.dump() << "\n";
    for (const auto& record : report.records) {
      nlohmann::ordered_json line;
      line["type"] = "run";
      line["record"] = model::encode(record);
      out << line.dump() << "\n";
    }
    for (const auto& p : report.missing)
      out << nlohmann::ordered_json{{"type", "missing"}, {"path", p}}.dump() << "\n";
    for (const auto& p : report.unmatched)
      out << nlohmann::ordered_json{{"type", "unmatched"}, {"path", p}}.dump() << "\n";
    for (const auto& issue : report.errors)
      out << nlohmann::ordered_json{{"type", "error"},
                                    {"path", issue.path},
                                    {"detail", issue.detail}}
                 .dump()
          << "\n";
    for (const auto& issue : report.violations)
      out << nlohmann::ordered_json{{"type", "violation"},
                                    {"path", issue.path},
                                    {"detail", issue.detail}}
                 .dump()
          << "\n";
    out.flush();
    if (!out) throw HarnessError(Kind::Io, "short write on " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec)
    throw HarnessError(Kind::Io, "cannot move manifest into place: " + ec.message());
}

IngestReport load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw HarnessError(Kind::Io, "cannot open " + path.string());
  IngestReport report;
  std::string line;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw HarnessError(Kind::ParseError, "manifest line " + std::to_string(line_no) +
                                               ": " + e.what());
    }
    try {
      if (first) {
        if (!j.is_object() || j.value("version", 0) != 1)
          throw HarnessError(Kind::ParseError, "unsupported manifest version");
        first = false;
        continue;
      }
      const std::string type = j.at("type").get<std::string>();
      if (type == "run")
        report.records.push_back(model::decode_run(j.at("record")));
      else if (type == "missing")
        report.missing.push_back(j.at("path").get<std::string>());
      else if (type == "unmatched")
        report.unmatched.push_back(j.at("path").get<std::string>());
      else if (type == "error")
        report.errors.push_back(
            {j.at("path").get<std::string>(), j.at("detail").get<std::string>()});
      else if (type == "violation")
        report.violations.push_back(
            {j.at("path").get<std::string>(), j.at("detail").get<std::string>()});
      else
        throw HarnessError(Kind::ParseError, "unknown manifest record type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
      throw HarnessError(Kind::ParseError, "manifest line " + std::to_string(line_no) +
                                               ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw HarnessError(Kind::ParseError, "manifest line " + std::to_string(line_no) +
                                               ": " + e.what());
    }
  }
  if (first)
    throw HarnessError(Kind::ParseError, "manifest is empty");
  return report;
}

IngestReport ingest(const Plan& plan, const fs::path& results_dir,
                    const fs::path& out_dir, const parsers::TransportRuleset& ruleset) {
  IngestReport report = scan_results(plan, results_dir, ruleset);
  write_manifest(report, out_dir / "manifest.jsonl");
  return report;
}

}  // namespace dualbench::harness
