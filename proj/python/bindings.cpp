#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dualbench/analytics.hpp"
#include "dualbench/harness.hpp"
#include "dualbench/parsers.hpp"
#include "dualbench/report.hpp"
#include "dualbench/verdict.hpp"

namespace py = pybind11;
using namespace dualbench;

namespace {

analytics::ScalingSeries to_series(
    const std::vector<std::tuple<int, double, double>>& points) {
  analytics::ScalingSeries series;
  for (const auto& [nodes, mean, stddev] : points) {
    analytics::Stats s;
    s.mean = mean;
    s.stddev = stddev;
    s.min = mean;
    s.max = mean;
    s.n = 1;
    series.points.push_back({nodes, s});
  }
  if (!series.points.empty()) series.baseline_nodes = series.points.front().nodes;
  return series;
}

py::dict observation_dict(const model::TransportObservation& obs) {
  py::dict d;
  d["scope"] = model::transport_scope_name(obs.scope);
  d["mechanism"] = model::transport_mechanism_name(obs.mechanism);
  d["raw_token"] = obs.raw_token;
  d["raw_line"] = obs.raw_line;
  d["source"] =
      obs.source == model::TransportObservation::Source::NcclLog ? "nccl" : "ucx";
  return d;
}

py::dict finding_dict(const verdict::Finding& f) {
  py::dict d;
  d["id"] = f.id;
  d["severity"] = verdict::severity_name(f.severity);
  d["system"] = f.subject.system;
  d["benchmark"] = f.subject.benchmark;
  d["environment"] = f.subject.environment;
  d["nodes"] = f.subject.nodes;
  d["evidence"] = f.evidence;
  d["hint"] = f.hint;
  return d;
}

report::ReportDocument document_for(const std::filesystem::path& plan_path,
                                    const std::filesystem::path& results,
                                    const std::string& profile_flag) {
  const harness::Plan plan = harness::load_plan(plan_path);
  const harness::IngestReport scanned =
      harness::scan_results(plan, results, parsers::default_ruleset());
  const verdict::ExpectationProfile profile =
      profile_flag.empty() ? plan.profile : verdict::load_profile(profile_flag);
  return report::build_document(scanned, plan, profile);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "native vs container HPC benchmark comparison core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const harness::HarnessError& e) {
      if (e.kind == harness::HarnessError::Kind::Io ||
          e.kind == harness::HarnessError::Kind::ManifestLocked)
        PyErr_SetString(PyExc_OSError, e.what());
      else
        PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const parsers::ParseError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const analytics::AnalyticsError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  // scalar metrics
  m.def("strong_efficiency", &analytics::strong_efficiency, py::arg("t_base"),
        py::arg("t_n"), py::arg("n"), py::arg("n_base"));
  m.def(
      "speedup",
      [](double t_base, double t_n, int n, int n_base) {
        const auto s = analytics::speedup(t_base, t_n, n, n_base);
        return py::make_tuple(s.ratio, s.superlinear);
      },
      py::arg("t_base"), py::arg("t_n"), py::arg("n"), py::arg("n_base"),
      "Returns (ratio, superlinear).");
  m.def("relative_overhead", &analytics::relative_overhead, py::arg("t_container"),
        py::arg("t_native"));
  m.def("absolute_overhead", &analytics::absolute_overhead, py::arg("t_container"),
        py::arg("t_native"));
  m.def("parity_deviation", &analytics::parity_deviation, py::arg("native"),
        py::arg("container"));
  m.def("bandwidth_reduction", &analytics::bandwidth_reduction, py::arg("intra_gbs"),
        py::arg("inter_gbs"));

  m.def(
      "classify_overhead",
      [](const std::vector<std::tuple<int, double, double>>& native,
         const std::vector<std::tuple<int, double, double>>& container,
         double noise_floor, double cv_cutoff, double growth_rise) {
        const auto pattern = analytics::classify_overhead_pattern(
            to_series(native), to_series(container),
            {noise_floor, cv_cutoff, growth_rise});
        py::dict d;
        d["class"] = analytics::overhead_class_name(pattern.cls);
        d["relative_level"] = pattern.relative_level;
        d["absolute_level_seconds"] = pattern.absolute_level;
        py::list evidence;
        for (const auto& e : pattern.evidence)
          evidence.append(py::make_tuple(e.nodes, e.relative, e.absolute_seconds));
        d["evidence"] = evidence;
        return d;
      },
      py::arg("native"), py::arg("container"), py::arg("noise_floor") = 0.02,
      py::arg("cv_cutoff") = 0.25, py::arg("growth_rise") = 0.05,
      "Points are (nodes, mean_seconds, stddev) tuples.");
  m.def(
      "detect_outliers",
      [](const std::vector<std::tuple<int, double, double>>& points, double k) {
        return analytics::detect_outliers(to_series(points), k);
      },
      py::arg("points"), py::arg("k") = 3.0);

  // result parsers
  m.def("parse_osu_latency", [](const std::string& text) {
    py::list rows;
    for (const auto& p : parsers::parse_osu_latency(text))
      rows.append(py::make_tuple(p.size_bytes, p.latency_us));
    return rows;
  });
  m.def("parse_osu_init", [](const std::string& text) {
    const auto t = parsers::parse_osu_init(text);
    py::dict d;
    d["nprocs"] = t.nprocs;
    d["min_ms"] = t.min_ms;
    d["max_ms"] = t.max_ms;
    d["avg_ms"] = t.avg_ms;
    return d;
  });
  m.def("parse_nccl_allreduce", [](const std::string& text) {
    const auto table = parsers::parse_nccl_allreduce(text);
    py::list rows;
    for (const auto& r : table.rows) {
      py::dict d;
      d["size_bytes"] = r.size_bytes;
      d["count"] = r.count;
      d["dtype"] = r.dtype;
      d["redop"] = r.redop;
      d["oop_time_us"] = r.oop_time_us;
      d["oop_algbw_gbs"] = r.oop_algbw_gbs;
      d["oop_busbw_gbs"] = r.oop_busbw_gbs;
      d["oop_wrong"] = r.oop_wrong;
      d["ip_time_us"] = r.ip_time_us;
      d["ip_algbw_gbs"] = r.ip_algbw_gbs;
      d["ip_busbw_gbs"] = r.ip_busbw_gbs;
      d["ip_wrong"] = r.ip_wrong;
      rows.append(d);
    }
    py::dict out;
    out["rows"] = rows;
    out["avg_busbw_gbs"] = table.avg_busbw_gbs;
    return out;
  });
  m.def(
      "parse_app_timing",
      [](const std::string& text, const std::string& app) {
        const auto t = parsers::parse_app_timing(text, app);
        py::dict d;
        d["app"] = t.app;
        d["sim_seconds"] = t.sim_seconds;
        d["workload"] = t.workload;
        return d;
      },
      py::arg("text"), py::arg("app"));
  m.def(
      "parse_transport_log",
      [](const std::string& text, const std::string& ruleset_path) {
        const auto ruleset = ruleset_path.empty() ? parsers::default_ruleset()
                                                  : parsers::load_ruleset(ruleset_path);
        py::list out;
        for (const auto& obs : parsers::parse_transport_log(text, ruleset))
          out.append(observation_dict(obs));
        return out;
      },
      py::arg("text"), py::arg("ruleset_path") = std::string());
  m.def("detect_format", [](const std::string& text) {
    return parsers::detected_format_name(parsers::detect_format(text));
  });

  // plan and pipeline, path-based
  m.def(
      "validate_plan",
      [](const std::filesystem::path& path) {
        const auto plan = harness::load_plan(path);
        py::dict d;
        d["digest"] = plan.digest;
        d["systems"] = plan.systems.size();
        d["benchmarks"] = plan.benchmarks.size();
        d["runs"] = harness::expand_matrix(plan).size();
        return d;
      },
      py::arg("plan_path"));
  m.def(
      "expand_plan",
      [](const std::filesystem::path& path) {
        const auto plan = harness::load_plan(path);
        py::list out;
        for (const auto& spec : harness::expand_matrix(plan)) {
          py::dict d;
          d["system"] = spec.system;
          d["environment"] = model::environment_dir_name(spec.environment);
          d["benchmark"] = model::benchmark_dir_name(spec.benchmark);
          d["nodes"] = spec.nodes;
          d["tasks_per_node"] = spec.tasks_per_node;
          d["gpus_per_node"] = spec.gpus_per_node;
          d["repetition"] = spec.repetition;
          d["output_path"] = spec.output_path;
          d["script_name"] = harness::job_script_name(spec);
          out.append(d);
        }
        return out;
      },
      py::arg("plan_path"));
  m.def(
      "render_job_scripts",
      [](const std::filesystem::path& path) {
        const auto plan = harness::load_plan(path);
        py::dict out;
        for (const auto& spec : harness::expand_matrix(plan))
          out[py::str(harness::job_script_name(spec))] =
              harness::render_job_script(plan, spec);
        return out;
      },
      py::arg("plan_path"));
  m.def(
      "write_job_scripts",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& out) {
        return harness::write_job_scripts(harness::load_plan(plan_path), out);
      },
      py::arg("plan_path"), py::arg("out_dir"));
  m.def(
      "ingest",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& results) {
        const auto plan = harness::load_plan(plan_path);
        const auto report =
            harness::ingest(plan, results, results, parsers::default_ruleset());
        py::dict d;
        d["records"] = report.records.size();
        d["missing"] = report.missing;
        d["unmatched"] = report.unmatched;
        py::list errors, violations;
        for (const auto& e : report.errors)
          errors.append(py::make_tuple(e.path, e.detail));
        for (const auto& v : report.violations)
          violations.append(py::make_tuple(v.path, v.detail));
        d["errors"] = errors;
        d["violations"] = violations;
        d["manifest"] = (results / "manifest.jsonl").string();
        return d;
      },
      py::arg("plan_path"), py::arg("results"));
  m.def(
      "analyze_text",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& results,
         const std::string& profile) {
        return report::render_analysis_text(document_for(plan_path, results, profile));
      },
      py::arg("plan_path"), py::arg("results"), py::arg("profile") = std::string());
  m.def(
      "report_json",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& results,
         const std::string& profile) {
        return report::emit_json(document_for(plan_path, results, profile));
      },
      py::arg("plan_path"), py::arg("results"), py::arg("profile") = std::string());
  m.def(
      "report_markdown",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& results,
         const std::string& profile) {
        return report::emit_markdown(document_for(plan_path, results, profile));
      },
      py::arg("plan_path"), py::arg("results"), py::arg("profile") = std::string());
  m.def(
      "verify",
      [](const std::filesystem::path& plan_path, const std::filesystem::path& results,
         const std::string& profile, bool strict) {
        const auto doc = document_for(plan_path, results, profile);
        py::dict d;
        d["verdict"] = verdict::verdict_name(doc.overall);
        int code = 0;
        if (doc.overall == verdict::Verdict::Fail)
          code = 1;
        else if (doc.overall == verdict::Verdict::PassWithWarnings)
          code = strict ? 1 : 0;
        d["exit_code"] = code;
        py::list findings;
        for (const auto& f : doc.findings) findings.append(finding_dict(f));
        d["findings"] = findings;
        return d;
      },
      py::arg("plan_path"), py::arg("results"), py::arg("profile") = std::string(),
      py::arg("strict") = false);
}
