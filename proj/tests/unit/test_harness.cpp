// Plan loading, matrix expansion, script rendering, ingest, manifest I/O.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualbench/harness.hpp"
#include "dualbench/model.hpp"
#include "support/helpers.hpp"
#include "support/pipeline_fixtures.hpp"

using namespace dualbench;
namespace fs = std::filesystem;
using testsupport::TempDir;
using testsupport::write_file;
using HK = harness::HarnessError::Kind;
using Variant = model::BenchmarkKind::Variant;

namespace {

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

void replace_all(std::string& text, const std::string& from, const std::string& to) {
  for (auto pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size()))
    text.replace(pos, from.size(), to);
}

fs::path write_plan(const TempDir& tmp, const std::string& text) {
  const fs::path path = tmp.path / "plan.json";
  write_file(path, text);
  return path;
}

harness::Plan load(const TempDir& tmp, const nlohmann::json& doc) {
  return harness::load_plan(write_plan(tmp, doc.dump()));
}

harness::HarnessError load_error(const nlohmann::json& doc) {
  TempDir tmp;
  try {
    harness::load_plan(write_plan(tmp, doc.dump()));
  } catch (const harness::HarnessError& e) {
    return e;
  }
  FAIL("expected HarnessError");
  return harness::HarnessError(HK::Io, "unreachable");
}

nlohmann::json base_plan() {
  return nlohmann::json::parse(testsupport::pipeline_plan_json());
}

}  // namespace

TEST_CASE("fnv1a_hex matches the published 64-bit vectors") {
  CHECK(harness::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(harness::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(harness::fnv1a_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("workload rules resolve per node count") {
  const harness::WorkloadRule fixed{harness::WorkloadRule::Kind::Constant, 4000000.0};
  CHECK(fixed.resolve(1) == 4000000.0);
  CHECK(fixed.resolve(64) == 4000000.0);

  const harness::WorkloadRule per_ring{harness::WorkloadRule::Kind::LinearInNodes,
                               128.0};
  CHECK(per_ring.resolve(64) == 8192.0);

  const harness::WorkloadRule per_node{harness::WorkloadRule::Kind::LinearInNodes,
                               31250.0};
  CHECK(per_node.resolve(4) == 125000.0);
}

TEST_CASE("load_plan parses the full fixture plan") {
  TempDir tmp;
  const fs::path path = write_plan(tmp, testsupport::pipeline_plan_json());
  const harness::Plan plan = harness::load_plan(path);

  CHECK(plan.digest == harness::fnv1a_hex(testsupport::read_file(path)));

  REQUIRE(plan.systems.size() == 1);
  const auto& sys = plan.systems[0];
  CHECK(sys.descriptor.name == "testbox");
  CHECK(sys.descriptor.cores_per_node == 8);
  CHECK(sys.descriptor.gpus_per_node == 2);
  CHECK(sys.descriptor.nics_per_node == 1);
  CHECK(sys.descriptor.gpu_interconnect.kind == model::GpuInterconnect::Kind::NvlinkBond);
  CHECK(sys.descriptor.gpu_interconnect.nvlink_width == 4);
  REQUIRE(sys.descriptor.nic_gpu_affinity.size() == 2);
  CHECK(sys.descriptor.nic_gpu_affinity[1].proximity == model::Proximity::Pxb);
  CHECK(sys.launch.partition == "batch");
  CHECK(sys.launch.container_image == "img.sif");
  CHECK(sys.launch.modules == std::vector<std::string>{"toolchain/1.0"});

  REQUIRE(plan.applications.size() == 1);
  CHECK(plan.applications[0].name == "sim");
  CHECK(plan.applications[0].command == "simulate --cells {cells}");

  REQUIRE(plan.benchmarks.size() == 5);
  CHECK(plan.benchmarks[0].kind.variant == Variant::OsuInit);
  CHECK(plan.benchmarks[0].nodes == std::vector<int>{1, 2});
  const auto& app_entry = plan.benchmarks[4];
  CHECK(app_entry.kind.variant == Variant::AppStrongScaling);
  CHECK(app_entry.kind.app == "sim");
  REQUIRE(app_entry.workload.count("cells") == 1);
  CHECK(app_entry.workload.at("cells") ==
        harness::WorkloadRule{harness::WorkloadRule::Kind::Constant, 50000.0});

  REQUIRE(plan.environments.size() == 2);
  CHECK(plan.environments[0] == model::EnvironmentKind::Kind::Native);
  CHECK(plan.environments[1] == model::EnvironmentKind::Kind::Container);
  CHECK(plan.tracing.ucx);
  CHECK(plan.tracing.nccl);
}

TEST_CASE("load_plan accepts a minimal plan and keeps native first") {
  TempDir tmp;
  nlohmann::json doc = {
      {"systems",
       {{{"name", "box"}, {"cores_per_node", 4}, {"nics_per_node", 1}}}},
      {"benchmarks",
       {{{"benchmark", "osu_init"},
         {"nodes", {1}},
         {"tasks_per_node", 1},
         {"repetitions", 1}}}},
      {"environments", {"native"}}};
  const harness::Plan plan = load(tmp, doc);
  CHECK(plan.systems.size() == 1);
  CHECK(plan.benchmarks.size() == 1);
  CHECK(plan.environments == std::vector{model::EnvironmentKind::Kind::Native});

  // Declaration order does not decide environment order; the baseline does.
  doc["environments"] = {"container", "native"};
  doc["systems"][0]["launch"] = {{"container_image", "img.sif"}};
  TempDir tmp2;
  const harness::Plan swapped = load(tmp2, doc);
  REQUIRE(swapped.environments.size() == 2);
  CHECK(swapped.environments[0] == model::EnvironmentKind::Kind::Native);
}

TEST_CASE("load_plan workload rule forms") {
  nlohmann::json doc = base_plan();
  doc["benchmarks"] = {{{"benchmark", "sim_weak"},
                        {"nodes", {2, 64}},
                        {"tasks_per_node", 4},
                        {"repetitions", 1},
                        {"workload", {{"cells", "128 * N"}}}}};

  TempDir tmp;
  const harness::Plan plan = load(tmp, doc);
  const auto& rule = plan.benchmarks[0].workload.at("cells");
  CHECK(rule.kind == harness::WorkloadRule::Kind::LinearInNodes);
  CHECK(rule.coeff == 128.0);

  const auto specs = harness::expand_matrix(plan);
  bool saw_64 = false;
  for (const auto& spec : specs)
    if (spec.nodes == 64) {
      CHECK(spec.workload.at("cells") == 8192.0);
      saw_64 = true;
    }
  CHECK(saw_64);

  SUBCASE("compact form without spaces") {
    doc["benchmarks"][0]["workload"]["cells"] = "31250*N";
    TempDir t;
    const auto& r = load(t, doc).benchmarks[0].workload.at("cells");
    CHECK(r.kind == harness::WorkloadRule::Kind::LinearInNodes);
    CHECK(r.coeff == 31250.0);
  }
  SUBCASE("arbitrary expressions are rejected") {
    doc["benchmarks"][0]["workload"]["cells"] = "N * 128";
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ParseError);
    CHECK(contains(err.what(), "must be a number or"));
  }
}

TEST_CASE("load_plan rejects structural problems") {
  nlohmann::json doc = base_plan();

  SUBCASE("missing file is an io error") {
    try {
      harness::load_plan("/nonexistent/plan.json");
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::Io);
    }
  }
  SUBCASE("invalid json") {
    TempDir tmp;
    try {
      harness::load_plan(write_plan(tmp, "{ not json"));
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::ParseError);
      CHECK(contains(e.what(), "not valid JSON"));
    }
  }
  SUBCASE("non-object document") {
    TempDir tmp;
    try {
      harness::load_plan(write_plan(tmp, "[]"));
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::ParseError);
      CHECK(contains(e.what(), "must be a JSON object"));
    }
  }
  SUBCASE("unknown top-level key") {
    doc["extras"] = 1;
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ParseError);
    CHECK(contains(err.what(), "unknown key 'extras' in plan"));
  }
  SUBCASE("unknown system key") {
    doc["systems"][0]["color"] = "blue";
    CHECK(load_error(doc).kind == HK::ParseError);
  }
  SUBCASE("unknown benchmark key") {
    doc["benchmarks"][0]["threads"] = 2;
    CHECK(load_error(doc).kind == HK::ParseError);
  }
  SUBCASE("missing required section") {
    doc.erase("benchmarks");
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ParseError);
    CHECK(contains(err.what(), "bad plan structure"));
  }
  SUBCASE("unknown benchmark name") {
    doc["benchmarks"][0]["benchmark"] = "osu_warmup";
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ParseError);
    CHECK(contains(err.what(), "unknown benchmark 'osu_warmup'"));
  }
  SUBCASE("unknown environment") {
    doc["environments"] = {"native", "cloud"};
    CHECK(load_error(doc).kind == HK::ParseError);
  }
}

TEST_CASE("load_plan rejects inconsistent plans") {
  nlohmann::json doc = base_plan();

  SUBCASE("duplicate system") {
    doc["systems"].push_back(doc["systems"][0]);
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "duplicate system 'testbox'"));
  }
  SUBCASE("descriptor fails model validation") {
    doc["systems"][0]["cores_per_node"] = 0;
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "system 'testbox'"));
  }
  SUBCASE("benchmark references unknown system") {
    doc["benchmarks"][0]["systems"] = {"ghost"};
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "unknown system 'ghost'"));
  }
  SUBCASE("explicit empty systems list") {
    doc["benchmarks"][0]["systems"] = nlohmann::json::array();
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("duplicate node count") {
    doc["benchmarks"][0]["nodes"] = {2, 2};
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "strictly increasing"));
  }
  SUBCASE("descending node counts") {
    doc["benchmarks"][0]["nodes"] = {2, 1};
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("empty node list") {
    doc["benchmarks"][0]["nodes"] = nlohmann::json::array();
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("zero tasks per node") {
    doc["benchmarks"][0]["tasks_per_node"] = 0;
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("tasks exceed cores") {
    doc["benchmarks"][0]["tasks_per_node"] = 9;
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "exceeds cores on testbox"));
  }
  SUBCASE("gpus exceed system gpus") {
    doc["benchmarks"][3]["gpus_per_node"] = 3;
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "exceeds gpus on testbox"));
  }
  SUBCASE("zero repetitions") {
    doc["benchmarks"][0]["repetitions"] = 0;
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("intra-node latency on two nodes") {
    doc["benchmarks"][1]["nodes"] = {1, 2};
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "exactly one node"));
  }
  SUBCASE("inter-node latency on one node") {
    doc["benchmarks"][2]["nodes"] = {1};
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "at least two nodes"));
  }
  SUBCASE("latency rank layout is pinned") {
    doc["benchmarks"][1]["tasks_per_node"] = 4;
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("nccl needs gpus") {
    doc["benchmarks"][3]["gpus_per_node"] = 0;
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "gpus_per_node >= 1"));
  }
  SUBCASE("nccl takes one node count per entry") {
    doc["benchmarks"][3]["nodes"] = {1, 2};
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("workload on a fixed benchmark") {
    doc["benchmarks"][0]["workload"] = {{"cells", 1}};
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "does not take workload parameters"));
  }
  SUBCASE("app benchmark without declared application") {
    doc["benchmarks"][4]["benchmark"] = "ghost_strong";
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "undeclared application 'ghost'"));
  }
  SUBCASE("placeholder without workload rule") {
    doc["benchmarks"][4].erase("workload");
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "command placeholder {cells} has no workload rule"));
  }
  SUBCASE("duplicate application") {
    doc["applications"].push_back(doc["applications"][0]);
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "duplicate application 'sim'"));
  }
  SUBCASE("application without command") {
    doc["applications"][0]["command"] = "";
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("no environments") {
    doc["environments"] = nlohmann::json::array();
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "no environments"));
  }
  SUBCASE("duplicate environment") {
    doc["environments"] = {"native", "native"};
    CHECK(load_error(doc).kind == HK::ValidationError);
  }
  SUBCASE("container planned but image missing") {
    doc["systems"][0]["launch"].erase("container_image");
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "no container_image"));
  }
  SUBCASE("two entries expanding to the same result path") {
    doc["benchmarks"].push_back(doc["benchmarks"][0]);
    const auto err = load_error(doc);
    CHECK(err.kind == HK::ValidationError);
    CHECK(contains(err.what(), "duplicate result path"));
  }
}

TEST_CASE("expand_matrix order, paths and cardinality on the fixture plan") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const auto specs = harness::expand_matrix(plan);

  // 8 init + 4 intra + 4 inter + 2 nccl + 8 app.
  REQUIRE(specs.size() == 26);

  CHECK(specs[0].output_path == "testbox/native/osu_init/1n_r0.log");
  CHECK(specs[1].output_path == "testbox/native/osu_init/1n_r1.log");
  CHECK(specs[2].output_path == "testbox/container/osu_init/1n_r0.log");
  CHECK(specs[3].output_path == "testbox/container/osu_init/1n_r1.log");
  CHECK(specs[4].output_path == "testbox/native/osu_init/2n_r0.log");
  CHECK(specs.back().output_path == "testbox/container/sim_strong/4n_r1.log");

  std::set<std::string> paths;
  for (const auto& spec : specs) paths.insert(spec.output_path);
  CHECK(paths.size() == specs.size());

  const auto& nccl = specs[16];
  CHECK(nccl.benchmark.variant == Variant::NcclAllReduceSingleNode);
  CHECK(nccl.gpus_per_node == 2);
  CHECK(nccl.tasks_per_node == 1);
  CHECK(nccl.environment.kind == model::EnvironmentKind::Kind::Native);
  CHECK(nccl.environment.image_id.empty());

  const auto& app = specs.back();
  CHECK(app.benchmark.variant == Variant::AppStrongScaling);
  CHECK(app.environment.image_id == "img.sif");
  CHECK(app.workload.at("cells") == 50000.0);

  CHECK(harness::job_script_name(specs[0]) == "testbox_native_osu_init_1n_r0.job");
  CHECK(harness::job_script_name(app) == "testbox_container_sim_strong_4n_r1.job");
}

TEST_CASE("expand_matrix cardinality and ordering over random plans") {
  testsupport::Rng rng(0xabcdef12);
  for (int iter = 0; iter < 100; ++iter) {
    harness::Plan plan;
    const int nsys = 1 + rng.below(3);
    for (int s = 0; s < nsys; ++s) {
      harness::PlanSystem ps;
      ps.descriptor.name = "sys" + std::to_string(s);
      ps.descriptor.cores_per_node = 64;
      ps.descriptor.gpus_per_node = 4;
      ps.descriptor.nics_per_node = 1;
      ps.launch.container_image = "img.sif";
      plan.systems.push_back(std::move(ps));
    }
    plan.environments.push_back(model::EnvironmentKind::Kind::Native);
    if (rng.coin())
      plan.environments.push_back(model::EnvironmentKind::Kind::Container);

    std::size_t want = 0;
    const int nbench = 1 + rng.below(4);
    for (int b = 0; b < nbench; ++b) {
      harness::BenchmarkEntry entry;
      entry.kind = {Variant::AppStrongScaling, "app" + std::to_string(b)};
      for (int s = 0; s < nsys; ++s)
        if (rng.coin()) entry.systems.push_back("sys" + std::to_string(s));
      int node = 0;
      const int nnodes = 1 + rng.below(4);
      for (int k = 0; k < nnodes; ++k) entry.nodes.push_back(node += 1 + rng.below(4));
      entry.tasks_per_node = 1 + rng.below(8);
      entry.repetitions = 1 + rng.below(3);
      entry.workload["cells"] = {harness::WorkloadRule::Kind::LinearInNodes, 100.0};

      const std::size_t targets =
          entry.systems.empty() ? plan.systems.size() : entry.systems.size();
      want += targets * entry.nodes.size() * plan.environments.size() *
              static_cast<std::size_t>(entry.repetitions);
      plan.benchmarks.push_back(std::move(entry));
    }

    const auto specs = harness::expand_matrix(plan);
    REQUIRE(specs.size() == want);

    // Reconstruct the documented nesting; paths must match exactly.
    std::vector<std::string> expected;
    for (const auto& entry : plan.benchmarks) {
      std::vector<std::string> targets = entry.systems;
      if (targets.empty())
        for (const auto& s : plan.systems) targets.push_back(s.descriptor.name);
      for (const auto& system : targets)
        for (const int nodes : entry.nodes)
          for (const auto env : plan.environments)
            for (int rep = 0; rep < entry.repetitions; ++rep)
              expected.push_back(system + "/" + model::environment_dir_name(env) +
                                 "/" + model::benchmark_dir_name(entry.kind) + "/" +
                                 std::to_string(nodes) + "n_r" +
                                 std::to_string(rep) + ".log");
    }
    std::vector<std::string> got;
    for (const auto& spec : specs) got.push_back(spec.output_path);
    REQUIRE(got == expected);

    std::set<std::string> unique(got.begin(), got.end());
    REQUIRE(unique.size() == got.size());

    for (const auto& spec : specs)
      REQUIRE(spec.workload.at("cells") == 100.0 * spec.nodes);
  }
}

TEST_CASE("render_job_script emits the launch contract") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const auto specs = harness::expand_matrix(plan);
  const auto find_spec = [&](Variant v, model::EnvironmentKind::Kind env,
                             int nodes) -> const harness::JobSpec& {
    for (const auto& spec : specs)
      if (spec.benchmark.variant == v && spec.environment.kind == env &&
          spec.nodes == nodes && spec.repetition == 0)
        return spec;
    FAIL("spec not found");
    return specs[0];
  };

  SUBCASE("container gpu job uses pmix and apptainer with --nv") {
    const auto& spec = find_spec(Variant::NcclAllReduceSingleNode,
                                 model::EnvironmentKind::Kind::Container, 1);
    const std::string script = harness::render_job_script(plan, spec);
    CHECK(contains(script, "--mpi=pmix"));
    CHECK(contains(script, "apptainer exec --nv img.sif all_reduce_perf"));
    CHECK(contains(script, "#SBATCH --gpus-per-node=2"));
    CHECK(contains(script, "#SBATCH --partition=batch"));
    CHECK(contains(script,
                   "#SBATCH --output=results/testbox/container/"
                   "nccl_allreduce_single/1n_r0.log"));
    CHECK(contains(script, "export NCCL_DEBUG=INFO"));
    CHECK(contains(script,
                   "#SBATCH --error=results/testbox/container/"
                   "nccl_allreduce_single/1n_r0.trace"));
    CHECK_FALSE(contains(script, "module load"));
    CHECK_FALSE(contains(script, "UCX_LOG_LEVEL"));
    CHECK(script == harness::render_job_script(plan, spec));
  }
  SUBCASE("native cpu job loads modules and runs bare srun") {
    const auto& spec = find_spec(Variant::OsuLatencyInter,
                                 model::EnvironmentKind::Kind::Native, 2);
    const std::string script = harness::render_job_script(plan, spec);
    CHECK(contains(script, "module load toolchain/1.0"));
    CHECK(contains(script, "srun --mpi=pmix osu_latency"));
    CHECK(contains(script, "#SBATCH --nodes=2"));
    CHECK(contains(script, "#SBATCH --ntasks-per-node=1"));
    CHECK(contains(script, "export UCX_LOG_LEVEL=info"));
    CHECK_FALSE(contains(script, "apptainer"));
    CHECK_FALSE(contains(script, "--nv"));
    CHECK_FALSE(contains(script, "--gpus-per-node"));
    CHECK_FALSE(contains(script, "--account"));
  }
  SUBCASE("container cpu job has no --nv") {
    const auto& spec = find_spec(Variant::OsuInit,
                                 model::EnvironmentKind::Kind::Container, 1);
    const std::string script = harness::render_job_script(plan, spec);
    CHECK(contains(script, "apptainer exec img.sif osu_init"));
    CHECK_FALSE(contains(script, "--nv"));
    CHECK_FALSE(contains(script, "module load"));
  }
  SUBCASE("application run is wrapped with PARAM and SIMTIME") {
    const auto& spec = find_spec(Variant::AppStrongScaling,
                                 model::EnvironmentKind::Kind::Native, 4);
    const std::string script = harness::render_job_script(plan, spec);
    CHECK(contains(script, "echo \"PARAM cells 50000\""));
    CHECK(contains(script, "srun --mpi=pmix simulate --cells 50000"));
    CHECK(contains(script, "SIMTIME %.3f"));
    CHECK_FALSE(contains(script, "{cells}"));
    // The timing brackets the launch line.
    const auto a = script.find("a=$(date +%s.%N)");
    const auto run = script.find("srun --mpi=pmix simulate");
    const auto b = script.find("b=$(date +%s.%N)");
    REQUIRE(a != std::string::npos);
    REQUIRE(b != std::string::npos);
    CHECK(a < run);
    CHECK(run < b);
  }
  SUBCASE("fixed benchmarks are not wrapped") {
    const auto& spec = find_spec(Variant::OsuInit,
                                 model::EnvironmentKind::Kind::Native, 1);
    const std::string script = harness::render_job_script(plan, spec);
    CHECK_FALSE(contains(script, "SIMTIME"));
    CHECK_FALSE(contains(script, "PARAM"));
  }
}

TEST_CASE("render_job_script options and errors") {
  nlohmann::json doc = base_plan();

  SUBCASE("tracing off drops exports and the error sink") {
    doc.erase("tracing");
    TempDir tmp;
    const harness::Plan plan = load(tmp, doc);
    for (const auto& spec : harness::expand_matrix(plan)) {
      const std::string script = harness::render_job_script(plan, spec);
      CHECK_FALSE(contains(script, "UCX_LOG_LEVEL"));
      CHECK_FALSE(contains(script, "NCCL_DEBUG"));
      CHECK_FALSE(contains(script, "--error"));
    }
  }
  SUBCASE("extra srun flags and account directive") {
    doc["systems"][0]["launch"]["extra_srun_flags"] = {"--exclusive"};
    doc["systems"][0]["launch"]["account"] = "proj42";
    TempDir tmp;
    const harness::Plan plan = load(tmp, doc);
    const auto specs = harness::expand_matrix(plan);
    const std::string script = harness::render_job_script(plan, specs[0]);
    CHECK(contains(script, "srun --mpi=pmix --exclusive"));
    CHECK(contains(script, "#SBATCH --account=proj42"));
  }
  SUBCASE("app without a command template") {
    harness::Plan plan;
    harness::PlanSystem ps;
    ps.descriptor.name = "box";
    ps.descriptor.cores_per_node = 4;
    ps.descriptor.nics_per_node = 1;
    plan.systems.push_back(ps);
    harness::JobSpec spec;
    spec.system = "box";
    spec.environment = model::EnvironmentKind::native();
    spec.benchmark = {Variant::AppStrongScaling, "ghost"};
    spec.output_path = "box/native/ghost_strong/1n_r0.log";
    try {
      harness::render_job_script(plan, spec);
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::UnsupportedBenchmark);
    }
  }
}

TEST_CASE("environment scripts differ only in module and container blocks") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));

  const auto normalized = [](std::string text) {
    replace_all(text, " apptainer exec --nv img.sif", "");
    replace_all(text, " apptainer exec img.sif", "");
    std::istringstream in(text);
    std::string line, kept;
    while (std::getline(in, line)) {
      if (line.rfind("module load ", 0) == 0) continue;
      kept += line;
      kept += '\n';
    }
    replace_all(kept, "/container/", "/native/");
    replace_all(kept, "_container_", "_native_");
    return kept;
  };

  std::map<std::string, std::map<std::string, std::string>> cells;
  for (const auto& spec : harness::expand_matrix(plan)) {
    const std::string cell = spec.system + "|" +
                             model::benchmark_dir_name(spec.benchmark) + "|" +
                             std::to_string(spec.nodes) + "|" +
                             std::to_string(spec.repetition);
    cells[cell][model::environment_dir_name(spec.environment)] =
        harness::render_job_script(plan, spec);
  }
  REQUIRE(cells.size() == 13);
  for (auto& [cell, by_env] : cells) {
    REQUIRE(by_env.size() == 2);
    CHECK(normalized(by_env.at("native")) == normalized(by_env.at("container")));
  }
}

TEST_CASE("write_job_scripts emits one file per spec") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const fs::path out = tmp.path / "jobs";
  CHECK(harness::write_job_scripts(plan, out) == 26);

  const auto specs = harness::expand_matrix(plan);
  for (const auto& spec : specs) {
    const fs::path script = out / harness::job_script_name(spec);
    REQUIRE(fs::exists(script));
    CHECK(testsupport::read_file(script) == harness::render_job_script(plan, spec));
  }

  SUBCASE("target occupied by a file") {
    write_file(tmp.path / "occupied", "x");
    try {
      harness::write_job_scripts(plan, tmp.path / "occupied");
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::Io);
    }
  }
}

TEST_CASE("scan_results buckets every outcome") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const fs::path results = tmp.path / "results";
  const auto ruleset = parsers::default_ruleset();

  SUBCASE("complete tree parses clean") {
    testsupport::write_pipeline_tree(results);
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 26);
    CHECK(report.missing.empty());
    CHECK(report.unmatched.empty());  // .trace siblings are not stray
    CHECK(report.errors.empty());
    CHECK(report.violations.empty());

    CHECK(std::is_sorted(
        report.records.begin(), report.records.end(),
        [](const model::RunRecord& a, const model::RunRecord& b) {
          return std::tuple(a.system, model::environment_dir_name(a.environment),
                            model::benchmark_dir_name(a.benchmark), a.nodes,
                            a.repetition) <
                 std::tuple(b.system, model::environment_dir_name(b.environment),
                            model::benchmark_dir_name(b.benchmark), b.nodes,
                            b.repetition);
        }));

    int traced = 0;
    for (const auto& record : report.records) {
      CHECK(record.system == "testbox");
      if (record.source_path == "testbox/native/osu_init/1n_r0.log") {
        const auto& init = std::get<model::InitTiming>(record.payload);
        CHECK(init.nprocs == 8);
        CHECK(init.avg_ms == 500.0);
        CHECK(init.min_ms == 480.0);
        CHECK(init.max_ms == 520.0);
        CHECK(record.nodes == 1);
        CHECK(record.tasks_per_node == 8);
        CHECK(record.gpus_per_node_used == 0);
        CHECK(record.repetition == 0);
      }
      if (record.source_path == "testbox/native/nccl_allreduce_single/1n_r0.log") {
        CHECK(record.gpus_per_node_used == 2);
        REQUIRE(record.transport_log.size() == 1);
        CHECK(record.transport_log[0].mechanism ==
              model::TransportMechanism::NvlinkP2P);
      }
      traced += record.transport_log.empty() ? 0 : 1;
    }
    // r0 traces exist for intra, inter and nccl in both environments.
    CHECK(traced == 6);
  }
  SUBCASE("missing expected file") {
    testsupport::write_pipeline_tree(results);
    fs::remove(results / "testbox/native/osu_init/2n_r1.log");
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 25);
    REQUIRE(report.missing.size() == 1);
    CHECK(report.missing[0] == "testbox/native/osu_init/2n_r1.log");
  }
  SUBCASE("stray log is unmatched, stray text ignored") {
    testsupport::write_pipeline_tree(results);
    write_file(results / "testbox/native/osu_init/9n_r9.log", "x\n");
    write_file(results / "testbox/notes.txt", "x\n");
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 26);
    REQUIRE(report.unmatched.size() == 1);
    CHECK(report.unmatched[0] == "testbox/native/osu_init/9n_r9.log");
  }
  SUBCASE("unparseable file becomes an error, not a record") {
    testsupport::write_pipeline_tree(results);
    write_file(results / "testbox/native/osu_init/1n_r0.log", "garbage\n");
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 25);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].path == "testbox/native/osu_init/1n_r0.log");
  }
  SUBCASE("unreadable path becomes an error") {
    testsupport::write_pipeline_tree(results);
    const fs::path victim = results / "testbox/native/osu_init/1n_r0.log";
    fs::remove(victim);
    fs::create_directories(victim);
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 25);
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].path == "testbox/native/osu_init/1n_r0.log");
  }
  SUBCASE("invariant-breaking record is kept and flagged") {
    testsupport::write_pipeline_tree(results);
    write_file(results / "testbox/native/nccl_allreduce_single/1n_r0.log",
               "#       size count type redop root time algbw busbw #wrong time "
               "algbw busbw #wrong\n"
               "1048576 262144 float sum -1 50.0 21.0 50.0 3 50.0 21.0 50.0 0\n"
               "16777216 4194304 float sum -1 400.0 42.0 100.0 0 400.0 42.0 100.0 "
               "0\n"
               "# Avg bus bandwidth    : 75.00\n");
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.size() == 26);
    REQUIRE(report.violations.size() == 1);
    CHECK(report.violations[0].path ==
          "testbox/native/nccl_allreduce_single/1n_r0.log");
    CHECK(report.violations[0].detail == "nccl table reports 3 wrong results");
  }
  SUBCASE("absent results directory reports everything missing") {
    const auto report = harness::scan_results(plan, results, ruleset);
    CHECK(report.records.empty());
    CHECK(report.missing.size() == 26);
    CHECK(report.unmatched.empty());
  }
}

TEST_CASE("manifest write, load and locking") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const fs::path results = tmp.path / "results";
  testsupport::write_pipeline_tree(results);

  // Cover every bucket in one report before round-tripping.
  fs::remove(results / "testbox/native/osu_init/2n_r1.log");
  write_file(results / "testbox/native/osu_init/9n_r9.log", "x\n");
  write_file(results / "testbox/container/osu_init/1n_r0.log", "garbage\n");
  write_file(results / "testbox/native/nccl_allreduce_single/1n_r0.log",
             "#       size count type redop root time algbw busbw #wrong time "
             "algbw busbw #wrong\n"
             "1048576 262144 float sum -1 50.0 21.0 50.0 3 50.0 21.0 50.0 0\n"
             "# Avg bus bandwidth    : 50.00\n");
  const auto report =
      harness::scan_results(plan, results, parsers::default_ruleset());
  REQUIRE_FALSE(report.records.empty());
  REQUIRE_FALSE(report.missing.empty());
  REQUIRE_FALSE(report.unmatched.empty());
  REQUIRE_FALSE(report.errors.empty());
  REQUIRE_FALSE(report.violations.empty());

  const fs::path manifest = tmp.path / "out" / "manifest.jsonl";

  SUBCASE("round-trip preserves every bucket") {
    harness::write_manifest(report, manifest);
    const auto loaded = harness::load_manifest(manifest);
    CHECK(loaded.records == report.records);
    CHECK(loaded.missing == report.missing);
    CHECK(loaded.unmatched == report.unmatched);
    CHECK(loaded.errors == report.errors);
    CHECK(loaded.violations == report.violations);
  }
  SUBCASE("version header leads and staging files are cleaned") {
    harness::write_manifest(report, manifest);
    std::istringstream in(testsupport::read_file(manifest));
    std::string first;
    std::getline(in, first);
    CHECK(first == "{\"version\":1}");
    CHECK_FALSE(fs::exists(manifest.string() + ".tmp"));
    CHECK_FALSE(fs::exists(manifest.string() + ".lock"));
  }
  SUBCASE("held lock refuses the write, released lock allows it") {
    fs::create_directories(manifest.parent_path());
    write_file(manifest.string() + ".lock", "");
    try {
      harness::write_manifest(report, manifest);
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::ManifestLocked);
    }
    fs::remove(manifest.string() + ".lock");
    harness::write_manifest(report, manifest);
    // A successful write releases its own lock.
    harness::write_manifest(report, manifest);
    CHECK(fs::exists(manifest));
  }
  SUBCASE("load rejects damaged manifests") {
    try {
      harness::load_manifest(tmp.path / "nope.jsonl");
      FAIL("expected HarnessError");
    } catch (const harness::HarnessError& e) {
      CHECK(e.kind == HK::Io);
    }
    const auto reject = [&](const std::string& text, const std::string& needle) {
      const fs::path path = tmp.path / "bad.jsonl";
      write_file(path, text);
      try {
        harness::load_manifest(path);
        FAIL("expected HarnessError");
      } catch (const harness::HarnessError& e) {
        CHECK(e.kind == HK::ParseError);
        CHECK(contains(e.what(), needle));
      }
    };
    reject("", "manifest is empty");
    reject("{\"version\":2}\n", "unsupported manifest version");
    reject("{\"version\":1}\n{\"type\":\"party\"}\n", "unknown manifest record type");
    reject("{\"version\":1}\nnot json\n", "manifest line 2");
    reject("{\"version\":1}\n{\"type\":\"missing\"}\n", "manifest line 2");
  }
}

TEST_CASE("ingest writes idempotent manifests") {
  TempDir tmp;
  const harness::Plan plan =
      harness::load_plan(write_plan(tmp, testsupport::pipeline_plan_json()));
  const fs::path results = tmp.path / "results";
  testsupport::write_pipeline_tree(results);
  const auto ruleset = parsers::default_ruleset();

  const fs::path out = tmp.path / "out";
  const auto first = harness::ingest(plan, results, out, ruleset);
  CHECK(first.records.size() == 26);
  REQUIRE(fs::exists(out / "manifest.jsonl"));
  const std::string bytes1 = testsupport::read_file(out / "manifest.jsonl");

  const auto second = harness::ingest(plan, results, out, ruleset);
  const std::string bytes2 = testsupport::read_file(out / "manifest.jsonl");
  CHECK(bytes1 == bytes2);
  CHECK(first.records == second.records);

  // What was written is what a reader sees.
  const auto loaded = harness::load_manifest(out / "manifest.jsonl");
  CHECK(loaded.records == first.records);
}
