#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "dualbench/harness.hpp"
#include "dualbench/parsers.hpp"
#include "dualbench/report.hpp"
#include "dualbench/verdict.hpp"

namespace fs = std::filesystem;
using namespace dualbench;

namespace {

// Exit contract: 0 pass, 1 fail findings, 2 usage/parse/validation, 3 I/O.
constexpr int kExitFail = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitIo = 3;

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const harness::HarnessError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return (e.kind == harness::HarnessError::Kind::Io ||
            e.kind == harness::HarnessError::Kind::ManifestLocked)
               ? kExitIo
               : kExitBadInput;
  } catch (const parsers::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadInput;
  }
}

verdict::ExpectationProfile resolve_profile(const harness::Plan& plan,
                                            const std::string& flag) {
  if (flag.empty()) return plan.profile;
  if (flag != "default" && flag != "permissive" && !fs::exists(flag))
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "profile file not found: " + flag);
  return verdict::load_profile(flag);
}

harness::IngestReport load_manifest_for(const std::string& results) {
  return harness::load_manifest(fs::path(results) / "manifest.jsonl");
}

int exit_for(verdict::Verdict v, bool strict) {
  switch (v) {
    case verdict::Verdict::Pass: return 0;
    case verdict::Verdict::PassWithWarnings: return strict ? kExitFail : 0;
    case verdict::Verdict::Fail: return kExitFail;
  }
  return kExitFail;
}

int cmd_plan_validate(const std::string& plan_path) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const auto specs = harness::expand_matrix(plan);
  std::cout << "plan ok: digest " << plan.digest << ", " << plan.systems.size()
            << " system(s), " << plan.benchmarks.size() << " benchmark(s), "
            << specs.size() << " run(s)\n";
  return 0;
}

int cmd_jobs_gen(const std::string& plan_path, const std::string& out_dir) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const int count = harness::write_job_scripts(plan, out_dir);
  std::cout << count << " job script(s) written to " << out_dir << "\n";
  return 0;
}

int cmd_ingest(const std::string& plan_path, const std::string& results,
               const std::string& ruleset_path) {
  const harness::Plan plan = harness::load_plan(plan_path);
  if (!ruleset_path.empty() && !fs::exists(ruleset_path))
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "ruleset file not found: " + ruleset_path);
  const parsers::TransportRuleset ruleset = ruleset_path.empty()
                                                ? parsers::default_ruleset()
                                                : parsers::load_ruleset(ruleset_path);
  const harness::IngestReport report = harness::ingest(plan, results, results, ruleset);
  std::cout << "ingested " << report.records.size() << " record(s): "
            << report.missing.size() << " missing, " << report.unmatched.size()
            << " unmatched, " << report.errors.size() << " unparseable, "
            << report.violations.size() << " invariant violation(s)\n";
  std::cout << "manifest: " << (fs::path(results) / "manifest.jsonl").string()
            << "\n";
  return 0;
}

int cmd_analyze(const std::string& plan_path, const std::string& results,
                const std::string& profile_flag) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const harness::IngestReport manifest = load_manifest_for(results);
  const auto profile = resolve_profile(plan, profile_flag);
  const report::ReportDocument doc = report::build_document(manifest, plan, profile);
  std::cout << report::render_analysis_text(doc);
  return 0;
}

int cmd_verify(const std::string& plan_path, const std::string& results,
               const std::string& profile_flag, bool strict) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const harness::IngestReport manifest = load_manifest_for(results);
  const auto profile = resolve_profile(plan, profile_flag);
  const report::ReportDocument doc = report::build_document(manifest, plan, profile);
  for (const auto& f : doc.findings) {
    std::cout << "[" << verdict::severity_name(f.severity) << "] " << f.id << ": "
              << f.evidence;
    if (!f.hint.empty()) std::cout << " (" << f.hint << ")";
    std::cout << "\n";
  }
  std::cout << "verdict: " << verdict::verdict_name(doc.overall) << "\n";
  return exit_for(doc.overall, strict);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "cannot write " + path.string());
  out << content;
  out.flush();
  if (!out)
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "short write on " + path.string());
}

int cmd_report(const std::string& plan_path, const std::string& results,
               const std::string& out_dir, const std::string& format,
               const std::string& profile_flag) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const harness::IngestReport manifest = load_manifest_for(results);
  const auto profile = resolve_profile(plan, profile_flag);
  const report::ReportDocument doc = report::build_document(manifest, plan, profile);

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec)
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "cannot create " + out_dir);
  const bool all = format == "all";
  if (all || format == "json") {
    write_text_file(fs::path(out_dir) / "report.json", report::emit_json(doc));
    std::cout << "wrote report.json\n";
  }
  if (all || format == "md") {
    write_text_file(fs::path(out_dir) / "report.md", report::emit_markdown(doc));
    std::cout << "wrote report.md\n";
  }
  if (all || format == "csv") {
    for (const auto& name : report::emit_plot_csv(doc, out_dir))
      std::cout << "wrote " << name << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-environment (native vs container) HPC benchmark harness"};
  app.require_subcommand(1);

  std::string plan_path, results, out_dir, profile, ruleset;
  std::string format = "all";
  bool strict = false;
  int rc = 0;

  const auto plan_opt = [&](CLI::App* cmd) {
    cmd->add_option("--plan", plan_path, "benchmark plan file")->required();
  };
  const auto results_opt = [&](CLI::App* cmd) {
    cmd->add_option("--results", results, "results tree root")->required();
  };
  const auto profile_opt = [&](CLI::App* cmd) {
    cmd->add_option("--profile", profile,
                    "expectation profile: default, permissive, or overrides file");
  };

  CLI::App* plan_cmd = app.add_subcommand("plan", "plan file operations");
  plan_cmd->require_subcommand(1);
  CLI::App* validate = plan_cmd->add_subcommand("validate", "load and check a plan");
  plan_opt(validate);
  validate->callback(
      [&] { rc = dispatch([&] { return cmd_plan_validate(plan_path); }); });

  CLI::App* jobs_cmd = app.add_subcommand("jobs", "job script operations");
  jobs_cmd->require_subcommand(1);
  CLI::App* gen = jobs_cmd->add_subcommand("gen", "render one sbatch script per run");
  plan_opt(gen);
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->callback(
      [&] { rc = dispatch([&] { return cmd_jobs_gen(plan_path, out_dir); }); });

  CLI::App* ingest = app.add_subcommand("ingest", "parse results into a manifest");
  plan_opt(ingest);
  results_opt(ingest);
  ingest->add_option("--ruleset", ruleset, "transport detection ruleset file");
  ingest->callback(
      [&] { rc = dispatch([&] { return cmd_ingest(plan_path, results, ruleset); }); });

  CLI::App* analyze = app.add_subcommand("analyze", "print comparison metrics");
  plan_opt(analyze);
  results_opt(analyze);
  profile_opt(analyze);
  analyze->callback(
      [&] { rc = dispatch([&] { return cmd_analyze(plan_path, results, profile); }); });

  CLI::App* verify = app.add_subcommand("verify", "judge results against expectations");
  plan_opt(verify);
  results_opt(verify);
  profile_opt(verify);
  verify->add_flag("--strict", strict, "treat warnings as failures");
  verify->callback([&] {
    rc = dispatch([&] { return cmd_verify(plan_path, results, profile, strict); });
  });

  CLI::App* report_cmd = app.add_subcommand("report", "write report artifacts");
  plan_opt(report_cmd);
  results_opt(report_cmd);
  report_cmd->add_option("--out", out_dir, "output directory")->required();
  report_cmd->add_option("--format", format, "json, md, csv, or all")
      ->check(CLI::IsMember({"json", "md", "csv", "all"}));
  profile_opt(report_cmd);
  report_cmd->callback([&] {
    rc = dispatch(
        [&] { return cmd_report(plan_path, results, out_dir, format, profile); });
  });

  CLI::App* run_all = app.add_subcommand("run-all", "ingest, analyze, verify, report");
  plan_opt(run_all);
  results_opt(run_all);
  run_all->add_option("--out", out_dir, "report output directory")->required();
  run_all->add_option("--ruleset", ruleset, "transport detection ruleset file");
  profile_opt(run_all);
  run_all->add_flag("--strict", strict, "treat warnings as failures");
  run_all->callback([&] {
    rc = dispatch([&] {
      if (const int r = cmd_ingest(plan_path, results, ruleset)) return r;
      if (const int r = cmd_analyze(plan_path, results, profile)) return r;
      const int verdict_rc = cmd_verify(plan_path, results, profile, strict);
      if (const int r = cmd_report(plan_path, results, out_dir, format, profile))
        return r;
      return verdict_rc;
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }
  return rc;
}
