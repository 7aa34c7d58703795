#include "dualbench/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dualbench::report {

using analytics::Stats;
using model::RunRecord;
using verdict::Finding;
using verdict::Severity;
using verdict::Subject;

namespace {

using Variant = model::BenchmarkKind::Variant;

bool is_native(const RunRecord& r) {
  return r.environment.kind == model::EnvironmentKind::Kind::Native;
}

// ---- document assembly ----------------------------------------------------

struct InitAccum {
  std::vector<double> avgs;
  double observed_min = std::numeric_limits<double>::infinity();
  double observed_max = -std::numeric_limits<double>::infinity();
};

InitBlock build_init(const std::vector<const RunRecord*>& records,
                     const verdict::ExpectationProfile& profile,
                     const Subject& subject, std::vector<Finding>& findings) {
  std::map<int, InitAccum> native, container;
  for (const RunRecord* r : records) {
    const auto& t = std::get<model::InitTiming>(r->payload);
    InitAccum& acc = (is_native(*r) ? native : container)[r->nodes];
    acc.avgs.push_back(t.avg_ms);
    acc.observed_min = std::min(acc.observed_min, t.min_ms);
    acc.observed_max = std::max(acc.observed_max, t.max_ms);
  }
  std::set<int> nodes;
  for (const auto& [n, acc] : native) nodes.insert(n);
  for (const auto& [n, acc] : container) nodes.insert(n);

  InitBlock block;
  std::map<int, Stats> native_stats, container_stats;
  for (const int n : nodes) {
    InitRow row;
    row.nodes = n;
    if (auto it = native.find(n); it != native.end()) {
      const Stats s = analytics::aggregate(it->second.avgs,
                                           analytics::AggregationPolicy::MinMax);
      row.native = {s, it->second.observed_min, it->second.observed_max};
      native_stats[n] = s;
    }
    if (auto it = container.find(n); it != container.end()) {
      const Stats s = analytics::aggregate(it->second.avgs,
                                           analytics::AggregationPolicy::MinMax);
      row.container = {s, it->second.observed_min, it->second.observed_max};
      container_stats[n] = s;
    }
    if (row.native && row.container)
      row.excess = analytics::relative_overhead(row.container->avg_ms.mean,
                                                row.native->avg_ms.mean);
    block.rows.push_back(std::move(row));
  }
  const auto found =
      verdict::verify_init(native_stats, container_stats, profile, subject);
  findings.insert(findings.end(), found.begin(), found.end());
  return block;
}

LatencyBlock build_latency(const std::vector<const RunRecord*>& records,
                           const verdict::ExpectationProfile& profile,
                           const Subject& subject, std::vector<Finding>& findings) {
  std::map<std::int64_t, std::vector<double>> native, container;
  for (const RunRecord* r : records) {
    auto& per_size = is_native(*r) ? native : container;
    for (const auto& p : std::get<model::MessageSizeSeries>(r->payload))
      per_size[p.size_bytes].push_back(p.latency_us);
  }
  std::set<std::int64_t> sizes;
  for (const auto& [s, v] : native) sizes.insert(s);
  for (const auto& [s, v] : container) sizes.insert(s);

  LatencyBlock block;
  model::MessageSizeSeries native_means, container_means;
  for (const std::int64_t size : sizes) {
    LatencyRow row;
    row.size_bytes = size;
    if (auto it = native.find(size); it != native.end()) {
      row.native_us =
          analytics::aggregate(it->second, analytics::AggregationPolicy::MeanStd);
      native_means.push_back({size, row.native_us->mean});
    }
    if (auto it = container.find(size); it != container.end()) {
      row.container_us =
          analytics::aggregate(it->second, analytics::AggregationPolicy::MeanStd);
      container_means.push_back({size, row.container_us->mean});
    }
    block.rows.push_back(std::move(row));
  }
  if (!native_means.empty() && !container_means.empty()) {
    try {
      block.regimes = analytics::regime_summary(native_means, container_means);
    } catch (const analytics::AnalyticsError&) {
      // no common sizes: the rows still get reported, just not judged
    }
  }
  if (block.regimes) {
    const auto found = verdict::verify_latency(*block.regimes, profile, subject);
    findings.insert(findings.end(), found.begin(), found.end());
  }
  return block;
}

BandwidthBlock build_bandwidth(const std::vector<const RunRecord*>& records,
                               const verdict::ExpectationProfile& profile,
                               const Subject& subject,
                               std::vector<Finding>& findings) {
  BandwidthBlock block;
  block.nodes = records.front()->nodes;
  std::map<std::int64_t, std::vector<double>> native, container;
  std::vector<double> native_avgs, container_avgs;
  for (const RunRecord* r : records) {
    const auto& table = std::get<model::NcclTable>(r->payload);
    auto& per_size = is_native(*r) ? native : container;
    for (const auto& row : table.rows)
      per_size[row.size_bytes].push_back(row.oop_busbw_gbs);
    (is_native(*r) ? native_avgs : container_avgs).push_back(table.avg_busbw_gbs);
  }
  std::set<std::int64_t> sizes;
  for (const auto& [s, v] : native) sizes.insert(s);
  for (const auto& [s, v] : container) sizes.insert(s);

  model::NcclTable native_mean, container_mean;
  for (const std::int64_t size : sizes) {
    BandwidthRow row;
    row.size_bytes = size;
    if (auto it = native.find(size); it != native.end()) {
      row.native_busbw =
          analytics::aggregate(it->second, analytics::AggregationPolicy::MeanStd);
      model::NcclRow r;
      r.size_bytes = size;
      r.oop_busbw_gbs = row.native_busbw->mean;
      native_mean.rows.push_back(r);
    }
    if (auto it = container.find(size); it != container.end()) {
      row.container_busbw =
          analytics::aggregate(it->second, analytics::AggregationPolicy::MeanStd);
      model::NcclRow r;
      r.size_bytes = size;
      r.oop_busbw_gbs = row.container_busbw->mean;
      container_mean.rows.push_back(r);
    }
    block.rows.push_back(std::move(row));
  }
  if (!native_mean.rows.empty())
    block.native_peak =
        analytics::peak_bus_bandwidth(native_mean, analytics::NcclSide::OutOfPlace);
  if (!container_mean.rows.empty())
    block.container_peak = analytics::peak_bus_bandwidth(
        container_mean, analytics::NcclSide::OutOfPlace);
  if (!native_avgs.empty())
    block.native_avg_busbw = analytics::compute_stats(native_avgs).mean;
  if (!container_avgs.empty())
    block.container_avg_busbw = analytics::compute_stats(container_avgs).mean;
  if (block.native_peak && block.container_peak &&
      block.native_peak->busbw_gbs > 0.0) {
    block.parity = analytics::parity_deviation(block.native_peak->busbw_gbs,
                                               block.container_peak->busbw_gbs);
    Subject s = subject;
    s.nodes = block.nodes;
    const auto found = verdict::verify_bandwidth(
        block.native_peak->busbw_gbs, block.container_peak->busbw_gbs, profile, s);
    findings.insert(findings.end(), found.begin(), found.end());
  }
  return block;
}

analytics::ScalingSeries to_series(const std::map<int, Stats>& by_nodes) {
  analytics::ScalingSeries series;
  for (const auto& [nodes, stats] : by_nodes) series.points.push_back({nodes, stats});
  if (!series.points.empty()) series.baseline_nodes = series.points.front().nodes;
  return series;
}

ScalingBlock build_scaling(const std::vector<const RunRecord*>& records, bool weak,
                           const verdict::ExpectationProfile& profile,
                           const Subject& subject, std::vector<Finding>& findings) {
  std::map<int, std::vector<double>> native_times, container_times;
  for (const RunRecord* r : records) {
    const auto& t = std::get<model::AppTiming>(r->payload);
    (is_native(*r) ? native_times : container_times)[r->nodes].push_back(
        t.sim_seconds);
  }
  std::map<int, Stats> native, container;
  for (const auto& [n, v] : native_times)
    native[n] = analytics::aggregate(v, analytics::AggregationPolicy::MeanStd);
  for (const auto& [n, v] : container_times)
    container[n] = analytics::aggregate(v, analytics::AggregationPolicy::MeanStd);

  const analytics::ScalingSeries native_series = to_series(native);
  const analytics::ScalingSeries container_series = to_series(container);

  ScalingBlock block;
  block.weak = weak;

  // Weak runs are normalized to the single-node (well, smallest) native
  // baseline; the container leg only falls back to itself without one.
  const Stats* native_base =
      native.empty() ? nullptr : &native.begin()->second;
  const Stats* container_weak_base =
      native_base ? native_base
                  : (container.empty() ? nullptr : &container.begin()->second);

  std::set<int> nodes;
  for (const auto& [n, s] : native) nodes.insert(n);
  for (const auto& [n, s] : container) nodes.insert(n);
  for (const int n : nodes) {
    ScalingRow row;
    row.nodes = n;
    const auto nit = native.find(n);
    const auto cit = container.find(n);
    if (nit != native.end()) row.native_s = nit->second;
    if (cit != container.end()) row.container_s = cit->second;
    if (!weak) {
      if (nit != native.end() && native_base) {
        const int n_base = native.begin()->first;
        row.native_efficiency = analytics::strong_efficiency(
            native_base->mean, nit->second.mean, n, n_base);
        const auto s =
            analytics::speedup(native_base->mean, nit->second.mean, n, n_base);
        row.native_speedup = s.ratio;
        row.native_superlinear = s.superlinear;
      }
      if (cit != container.end() && !container.empty()) {
        const int n_base = container.begin()->first;
        const Stats& base = container.begin()->second;
        row.container_efficiency =
            analytics::strong_efficiency(base.mean, cit->second.mean, n, n_base);
        const auto s = analytics::speedup(base.mean, cit->second.mean, n, n_base);
        row.container_speedup = s.ratio;
        row.container_superlinear = s.superlinear;
      }
    } else {
      if (nit != native.end() && native_base)
        row.native_normalized = nit->second.mean / native_base->mean;
      if (cit != container.end() && container_weak_base)
        row.container_normalized = cit->second.mean / container_weak_base->mean;
    }
    if (nit != native.end() && cit != container.end()) {
      row.rel_overhead =
          analytics::relative_overhead(cit->second.mean, nit->second.mean);
      row.abs_overhead =
          analytics::absolute_overhead(cit->second.mean, nit->second.mean);
    }
    block.rows.push_back(std::move(row));
  }

  int common = 0;
  for (const auto& [n, s] : native)
    if (container.count(n)) ++common;
  if (common >= 3) {
    block.pattern = analytics::classify_overhead_pattern(
        native_series, container_series, profile.classify);
    const auto found = verdict::verify_scaling(*block.pattern, profile, subject);
    findings.insert(findings.end(), found.begin(), found.end());
  }

  const auto flag_outliers = [&](const analytics::ScalingSeries& series,
                                 const char* env, std::vector<int>& out) {
    if (series.points.size() < 3) return;
    out = analytics::detect_outliers(series, profile.outlier_k);
    for (const int n : out) {
      Finding f;
      f.id = "scaling-outlier";
      f.severity = Severity::Warn;
      f.subject = subject;
      f.subject.environment = env;
      f.subject.nodes = n;
      f.evidence = "run time at " + std::to_string(n) +
                   " nodes is off the trend of its neighbors";
      f.hint = "not reproduced at neighboring node counts; inspect that run";
      findings.push_back(std::move(f));
    }
  };
  flag_outliers(native_series, "native", block.native_outliers);
  flag_outliers(container_series, "container", block.container_outliers);
  return block;
}

Subject subject_from_path(const std::string& path) {
  Subject s;
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) parts.push_back(part);
  if (parts.size() != 4) return s;
  s.system = parts[0];
  s.environment = parts[1];
  s.benchmark = parts[2];
  const auto n_end = parts[3].find('n');
  if (n_end != std::string::npos) {
    try {
      s.nodes = std::stoi(parts[3].substr(0, n_end));
    } catch (...) {
      s.nodes = 0;
    }
  }
  return s;
}

void add_ingest_findings(const harness::IngestReport& ingest,
                         std::vector<Finding>& findings) {
  for (const auto& path : ingest.missing)
    findings.push_back({"result-missing", Severity::Warn, subject_from_path(path),
                        "planned result " + path + " is absent",
                        "run the generated job or prune the plan entry"});
  for (const auto& issue : ingest.errors)
    findings.push_back({"result-unparseable", Severity::Fail,
                        subject_from_path(issue.path),
                        issue.path + ": " + issue.detail,
                        "output does not match the benchmark grammar"});
  for (const auto& issue : ingest.violations)
    findings.push_back({"record-invariant", Severity::Fail,
                        subject_from_path(issue.path),
                        issue.path + ": " + issue.detail,
                        "measurement violates a structural invariant"});
  for (const auto& path : ingest.unmatched)
    findings.push_back({"result-unmatched", Severity::Info, subject_from_path(path),
                        path + " is not part of the plan", ""});
}

void finalize_finding_ids(std::vector<Finding>& findings) {
  const auto full_id = [](const Finding& f) {
    std::string id;
    if (!f.subject.system.empty()) id += f.subject.system + ".";
    if (!f.subject.benchmark.empty()) id += f.subject.benchmark + ".";
    return id + f.id;
  };
  std::map<std::string, int> total, seen;
  for (const auto& f : findings) ++total[full_id(f)];
  for (auto& f : findings) {
    std::string id = full_id(f);
    if (total[id] > 1) id += "#" + std::to_string(++seen[id]);
    f.id = id;
  }
}

}  // namespace

ReportDocument build_document(const harness::IngestReport& ingest,
                              const harness::Plan& plan,
                              const verdict::ExpectationProfile& profile) {
  ReportDocument doc;
  doc.plan_digest = plan.digest;
  doc.missing = ingest.missing;
  doc.unmatched = ingest.unmatched;
  doc.errors = ingest.errors;
  doc.violations = ingest.violations;

  std::map<std::pair<std::string, std::string>, std::vector<const RunRecord*>> groups;
  for (const auto& r : ingest.records)
    groups[{r.system, model::benchmark_dir_name(r.benchmark)}].push_back(&r);

  std::vector<Finding> findings;
  for (const auto& [key, records] : groups) {
    const auto& [system, bench] = key;
    const Subject subject{bench, system, "both", 0};
    Comparison comparison;
    comparison.system = system;
    comparison.benchmark = bench;
    switch (records.front()->benchmark.variant) {
      case Variant::OsuInit:
        comparison.block = build_init(records, profile, subject, findings);
        break;
      case Variant::OsuLatencyIntra:
      case Variant::OsuLatencyInter:
        comparison.block = build_latency(records, profile, subject, findings);
        break;
      case Variant::NcclAllReduceSingleNode:
      case Variant::NcclAllReduceMultiNode:
        comparison.block = build_bandwidth(records, profile, subject, findings);
        break;
      case Variant::AppStrongScaling:
      case Variant::AppWeakScaling:
        comparison.block = build_scaling(
            records, records.front()->benchmark.variant == Variant::AppWeakScaling,
            profile, subject, findings);
        break;
    }
    doc.comparisons.push_back(std::move(comparison));
  }

  // Two-node bandwidth blocks are judged against the same system's
  // single-node fabric peak.
  for (auto& comparison : doc.comparisons) {
    if (comparison.benchmark != "nccl_allreduce_multi") continue;
    auto& multi = std::get<BandwidthBlock>(comparison.block);
    for (const auto& other : doc.comparisons) {
      if (other.system != comparison.system ||
          other.benchmark != "nccl_allreduce_single")
        continue;
      const auto& single = std::get<BandwidthBlock>(other.block);
      if (single.native_peak && multi.native_peak &&
          single.native_peak->busbw_gbs > 0.0)
        multi.native_reduction = analytics::bandwidth_reduction(
            single.native_peak->busbw_gbs, multi.native_peak->busbw_gbs);
      if (single.container_peak && multi.container_peak &&
          single.container_peak->busbw_gbs > 0.0)
        multi.container_reduction = analytics::bandwidth_reduction(
            single.container_peak->busbw_gbs, multi.container_peak->busbw_gbs);
    }
  }

  for (const auto& r : ingest.records) {
    if (r.transport_log.empty()) continue;
    const harness::PlanSystem* ps = plan.find_system(r.system);
    if (!ps) continue;
    const Subject subject{model::benchmark_dir_name(r.benchmark), r.system,
                          model::environment_dir_name(r.environment), r.nodes};
    const auto found =
        verdict::verify_transports(r.transport_log, profile, ps->descriptor, subject);
    findings.insert(findings.end(), found.begin(), found.end());
  }

  add_ingest_findings(ingest, findings);
  verdict::sort_findings(findings);
  finalize_finding_ids(findings);
  doc.overall = verdict::compose_verdict(findings);
  doc.findings = std::move(findings);
  return doc;
}

// ---- canonical JSON ---------------------------------------------------------

namespace {

// Minimal writer with fixed formatting so equal documents serialize to equal
// bytes; the schema is small enough that a generic library buys nothing here.
class JsonWriter {
 public:
  void begin_object() {
    pre_value();
    out_ += '{';
    stack_.push_back(false);
  }
  void end_object() { close('}'); }
  void begin_array() {
    pre_value();
    out_ += '[';
    stack_.push_back(false);
  }
  void end_array() { close(']'); }
  void key(const std::string& k) {
    if (stack_.back()) out_ += ',';
    stack_.back() = true;
    newline();
    append_string(k);
    out_ += ": ";
    after_key_ = true;
  }
  void string(const std::string& v) {
    pre_value();
    append_string(v);
  }
  void number(const std::string& formatted) {
    pre_value();
    out_ += formatted;
  }
  void boolean(bool v) {
    pre_value();
    out_ += v ? "true" : "false";
  }
  std::string take() { return std::move(out_); }

 private:
  void pre_value() {
    if (after_key_) {
      after_key_ = false;
      return;
    }
    if (!stack_.empty()) {
      if (stack_.back()) out_ += ',';
      stack_.back() = true;
      newline();
    }
  }
  void close(char c) {
    const bool had_members = stack_.back();
    stack_.pop_back();
    if (had_members) newline();
    out_ += c;
  }
  void newline() {
    out_ += '\n';
    out_.append(2 * stack_.size(), ' ');
  }
  void append_string(const std::string& s) {
    out_ += '"';
    for (const char c : s) {
      switch (c) {
        case '"': out_ += "\\\""; break;
        case '\\': out_ += "\\\\"; break;
        case '\n': out_ += "\\n"; break;
        case '\r': out_ += "\\r"; break;
        case '\t': out_ += "\\t"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\u%04x", c);
            out_ += buf;
          } else {
            out_ += c;
          }
      }
    }
    out_ += '"';
  }

  std::string out_;
  std::vector<bool> stack_;
  bool after_key_ = false;
};

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string ratio4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string int_str(long long v) { return std::to_string(v); }

void emit_stats(JsonWriter& w, const Stats& s) {
  w.begin_object();
  w.key("mean");
  w.number(fixed3(s.mean));
  w.key("stddev");
  w.number(fixed3(s.stddev));
  w.key("min");
  w.number(fixed3(s.min));
  w.key("max");
  w.number(fixed3(s.max));
  w.key("n");
  w.number(int_str(s.n));
  w.end_object();
}

void emit_init_env(JsonWriter& w, const EnvInitRow& row) {
  w.begin_object();
  w.key("mean");
  w.number(fixed3(row.avg_ms.mean));
  w.key("stddev");
  w.number(fixed3(row.avg_ms.stddev));
  w.key("min");
  w.number(fixed3(row.avg_ms.min));
  w.key("max");
  w.number(fixed3(row.avg_ms.max));
  w.key("n");
  w.number(int_str(row.avg_ms.n));
  w.key("observed_min");
  w.number(fixed3(row.observed_min_ms));
  w.key("observed_max");
  w.number(fixed3(row.observed_max_ms));
  w.end_object();
}

void emit_regime(JsonWriter& w, const analytics::RegimeDelta& d) {
  w.begin_object();
  w.key("mean_abs_delta_us");
  w.number(fixed3(d.mean_abs_delta_us));
  w.key("max_abs_delta_us");
  w.number(fixed3(d.max_abs_delta_us));
  w.key("mean_rel_delta");
  w.number(ratio4(d.mean_rel_delta));
  w.key("count");
  w.number(int_str(d.count));
  w.end_object();
}

void emit_peak(JsonWriter& w, const analytics::PeakBandwidth& p) {
  w.begin_object();
  w.key("size_bytes");
  w.number(int_str(p.size_bytes));
  w.key("busbw_gbs");
  w.number(fixed3(p.busbw_gbs));
  w.end_object();
}

void emit_block(JsonWriter& w, const InitBlock& block) {
  w.key("family");
  w.string("init");
  w.key("rows");
  w.begin_array();
  for (const auto& row : block.rows) {
    w.begin_object();
    w.key("nodes");
    w.number(int_str(row.nodes));
    if (row.native) {
      w.key("native");
      emit_init_env(w, *row.native);
    }
    if (row.container) {
      w.key("container");
      emit_init_env(w, *row.container);
    }
    if (row.excess) {
      w.key("excess");
      w.number(ratio4(*row.excess));
    }
    w.end_object();
  }
  w.end_array();
}

void emit_block(JsonWriter& w, const LatencyBlock& block) {
  w.key("family");
  w.string("latency");
  w.key("rows");
  w.begin_array();
  for (const auto& row : block.rows) {
    w.begin_object();
    w.key("size_bytes");
    w.number(int_str(row.size_bytes));
    if (row.native_us) {
      w.key("native");
      emit_stats(w, *row.native_us);
    }
    if (row.container_us) {
      w.key("container");
      emit_stats(w, *row.container_us);
    }
    w.end_object();
  }
  w.end_array();
  if (block.regimes) {
    w.key("regimes");
    w.begin_object();
    if (block.regimes->small) {
      w.key("small");
      emit_regime(w, *block.regimes->small);
    }
    if (block.regimes->medium) {
      w.key("medium");
      emit_regime(w, *block.regimes->medium);
    }
    if (block.regimes->large) {
      w.key("large");
      emit_regime(w, *block.regimes->large);
    }
    w.end_object();
  }
}

void emit_block(JsonWriter& w, const BandwidthBlock& block) {
  w.key("family");
  w.string("bandwidth");
  w.key("nodes");
  w.number(int_str(block.nodes));
  w.key("rows");
  w.begin_array();
  for (const auto& row : block.rows) {
    w.begin_object();
    w.key("size_bytes");
    w.number(int_str(row.size_bytes));
    if (row.native_busbw) {
      w.key("native");
      emit_stats(w, *row.native_busbw);
    }
    if (row.container_busbw) {
      w.key("container");
      emit_stats(w, *row.container_busbw);
    }
    w.end_object();
  }
  w.end_array();
  if (block.native_peak) {
    w.key("native_peak");
    emit_peak(w, *block.native_peak);
  }
  if (block.container_peak) {
    w.key("container_peak");
    emit_peak(w, *block.container_peak);
  }
  if (block.native_avg_busbw) {
    w.key("native_avg_busbw_gbs");
    w.number(fixed3(*block.native_avg_busbw));
  }
  if (block.container_avg_busbw) {
    w.key("container_avg_busbw_gbs");
    w.number(fixed3(*block.container_avg_busbw));
  }
  if (block.parity) {
    w.key("parity_deviation");
    w.number(ratio4(*block.parity));
  }
  if (block.native_reduction) {
    w.key("native_reduction");
    w.number(ratio4(*block.native_reduction));
  }
  if (block.container_reduction) {
    w.key("container_reduction");
    w.number(ratio4(*block.container_reduction));
  }
}

void emit_block(JsonWriter& w, const ScalingBlock& block) {
  w.key("family");
  w.string("scaling");
  w.key("weak");
  w.boolean(block.weak);
  w.key("rows");
  w.begin_array();
  for (const auto& row : block.rows) {
    w.begin_object();
    w.key("nodes");
    w.number(int_str(row.nodes));
    if (row.native_s) {
      w.key("native");
      emit_stats(w, *row.native_s);
    }
    if (row.container_s) {
      w.key("container");
      emit_stats(w, *row.container_s);
    }
    if (row.native_efficiency) {
      w.key("native_efficiency");
      w.number(ratio4(*row.native_efficiency));
    }
    if (row.container_efficiency) {
      w.key("container_efficiency");
      w.number(ratio4(*row.container_efficiency));
    }
    if (row.native_speedup) {
      w.key("native_speedup");
      w.number(ratio4(*row.native_speedup));
      w.key("native_superlinear");
      w.boolean(row.native_superlinear);
    }
    if (row.container_speedup) {
      w.key("container_speedup");
      w.number(ratio4(*row.container_speedup));
      w.key("container_superlinear");
      w.boolean(row.container_superlinear);
    }
    if (row.native_normalized) {
      w.key("native_normalized");
      w.number(ratio4(*row.native_normalized));
    }
    if (row.container_normalized) {
      w.key("container_normalized");
      w.number(ratio4(*row.container_normalized));
    }
    if (row.rel_overhead) {
      w.key("relative_overhead");
      w.number(ratio4(*row.rel_overhead));
    }
    if (row.abs_overhead) {
      w.key("absolute_overhead_seconds");
      w.number(fixed3(*row.abs_overhead));
    }
    w.end_object();
  }
  w.end_array();
  if (block.pattern) {
    w.key("pattern");
    w.begin_object();
    w.key("class");
    w.string(analytics::overhead_class_name(block.pattern->cls));
    w.key("relative_level");
    w.number(ratio4(block.pattern->relative_level));
    w.key("absolute_level_seconds");
    w.number(fixed3(block.pattern->absolute_level));
    w.key("evidence");
    w.begin_array();
    for (const auto& e : block.pattern->evidence) {
      w.begin_object();
      w.key("nodes");
      w.number(int_str(e.nodes));
      w.key("relative");
      w.number(ratio4(e.relative));
      w.key("absolute_seconds");
      w.number(fixed3(e.absolute_seconds));
      w.end_object();
    }
    w.end_array();
    w.end_object();
  }
  w.key("native_outliers");
  w.begin_array();
  for (const int n : block.native_outliers) w.number(int_str(n));
  w.end_array();
  w.key("container_outliers");
  w.begin_array();
  for (const int n : block.container_outliers) w.number(int_str(n));
  w.end_array();
}

}  // namespace

std::string emit_json(const ReportDocument& doc) {
  JsonWriter w;
  w.begin_object();
  w.key("schema_version");
  w.number(int_str(doc.schema_version));
  w.key("plan_digest");
  w.string(doc.plan_digest);
  w.key("overall");
  w.string(verdict::verdict_name(doc.overall));
  w.key("comparisons");
  w.begin_array();
  for (const auto& comparison : doc.comparisons) {
    w.begin_object();
    w.key("system");
    w.string(comparison.system);
    w.key("benchmark");
    w.string(comparison.benchmark);
    std::visit([&w](const auto& block) { emit_block(w, block); }, comparison.block);
    w.end_object();
  }
  w.end_array();
  w.key("findings");
  w.begin_array();
  for (const auto& f : doc.findings) {
    w.begin_object();
    w.key("id");
    w.string(f.id);
    w.key("severity");
    w.string(verdict::severity_name(f.severity));
    w.key("system");
    w.string(f.subject.system);
    w.key("benchmark");
    w.string(f.subject.benchmark);
    w.key("environment");
    w.string(f.subject.environment);
    w.key("nodes");
    w.number(int_str(f.subject.nodes));
    w.key("evidence");
    w.string(f.evidence);
    w.key("hint");
    w.string(f.hint);
    w.end_object();
  }
  w.end_array();
  w.key("ingest");
  w.begin_object();
  w.key("missing");
  w.begin_array();
  for (const auto& p : doc.missing) w.string(p);
  w.end_array();
  w.key("unmatched");
  w.begin_array();
  for (const auto& p : doc.unmatched) w.string(p);
  w.end_array();
  w.key("errors");
  w.begin_array();
  for (const auto& issue : doc.errors) {
    w.begin_object();
    w.key("path");
    w.string(issue.path);
    w.key("detail");
    w.string(issue.detail);
    w.end_object();
  }
  w.end_array();
  w.key("violations");
  w.begin_array();
  for (const auto& issue : doc.violations) {
    w.begin_object();
    w.key("path");
    w.string(issue.path);
    w.key("detail");
    w.string(issue.detail);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  w.end_object();
  std::string out = w.take();
  out += '\n';
  return out;
}

// ---- markdown ---------------------------------------------------------------

namespace {

std::string pct1(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f%%", ratio * 100.0);
  return buf;
}

std::string pct1_signed(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.1f%%", ratio * 100.0);
  return buf;
}

std::string pct2(double ratio) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%%", ratio * 100.0);
  return buf;
}

std::string mean_std(const std::optional<Stats>& s) {
  if (!s) return "-";
  return fixed3(s->mean) + " +/- " + fixed3(s->stddev);
}

void markdown_block(std::ostringstream& md, const InitBlock& block) {
  md << "Startup time in milliseconds. Lower is better. Spread is the observed"
        " min/max across ranks and repetitions.\n\n";
  md << "| Nodes | Native (ms) | Native min..max | Container (ms) |"
        " Container min..max | Excess |\n";
  md << "|------:|------------:|----------------:|---------------:|"
        "-------------------:|-------:|\n";
  for (const auto& row : block.rows) {
    md << "| " << row.nodes << " | ";
    md << (row.native ? mean_std(row.native->avg_ms) : "-") << " | ";
    md << (row.native ? fixed3(row.native->observed_min_ms) + ".." +
                            fixed3(row.native->observed_max_ms)
                      : "-")
       << " | ";
    md << (row.container ? mean_std(row.container->avg_ms) : "-") << " | ";
    md << (row.container ? fixed3(row.container->observed_min_ms) + ".." +
                               fixed3(row.container->observed_max_ms)
                         : "-")
       << " | ";
    md << (row.excess ? pct1_signed(*row.excess) : "-") << " |\n";
  }
}

void markdown_block(std::ostringstream& md, const LatencyBlock& block) {
  md << "Point-to-point latency in microseconds. Lower is better.\n\n";
  md << "| Size (B) | Native (us) | Container (us) | Delta (us) |\n";
  md << "|---------:|------------:|---------------:|-----------:|\n";
  for (const auto& row : block.rows) {
    md << "| " << row.size_bytes << " | " << mean_std(row.native_us) << " | "
       << mean_std(row.container_us) << " | ";
    if (row.native_us && row.container_us)
      md << fixed3(row.container_us->mean - row.native_us->mean);
    else
      md << "-";
    md << " |\n";
  }
  if (block.regimes) {
    md << "\n";
    const auto line = [&md](const char* name, const analytics::RegimeDelta& d) {
      md << "- " << name << ": mean |delta| " << fixed3(d.mean_abs_delta_us)
         << " us, max " << fixed3(d.max_abs_delta_us) << " us, mean relative "
         << pct1_signed(d.mean_rel_delta) << " over " << d.count << " sizes\n";
    };
    if (block.regimes->small) line("Small (<= 1 KiB)", *block.regimes->small);
    if (block.regimes->medium) line("Medium (1 KiB - 128 KiB)", *block.regimes->medium);
    if (block.regimes->large) line("Large (> 128 KiB)", *block.regimes->large);
  }
}

void markdown_block(std::ostringstream& md, const BandwidthBlock& block) {
  md << "All-reduce bus bandwidth in GB/s at " << block.nodes
     << (block.nodes == 1 ? " node" : " nodes") << ". Higher is better.\n\n";
  md << "| Size (B) | Native (GB/s) | Container (GB/s) |\n";
  md << "|---------:|--------------:|-----------------:|\n";
  for (const auto& row : block.rows)
    md << "| " << row.size_bytes << " | " << mean_std(row.native_busbw) << " | "
       << mean_std(row.container_busbw) << " |\n";
  md << "\n";
  if (block.native_peak)
    md << "- Peak native: " << fixed3(block.native_peak->busbw_gbs) << " GB/s at "
       << block.native_peak->size_bytes << " B\n";
  if (block.container_peak)
    md << "- Peak container: " << fixed3(block.container_peak->busbw_gbs)
       << " GB/s at " << block.container_peak->size_bytes << " B\n";
  if (block.parity) md << "- Parity deviation: " << pct2(*block.parity) << "\n";
  if (block.native_reduction)
    md << "- Reduction vs single node (native): " << pct1(*block.native_reduction)
       << "\n";
  if (block.container_reduction)
    md << "- Reduction vs single node (container): "
       << pct1(*block.container_reduction) << "\n";
}

void markdown_block(std::ostringstream& md, const ScalingBlock& block) {
  if (block.weak) {
    md << "Weak scaling run time in seconds, normalized to the smallest-node"
          " native baseline (1.0 is ideal). Lower is better.\n\n";
    md << "| Nodes | Native (s) | Norm. | Container (s) | Norm. | Overhead |\n";
    md << "|------:|-----------:|------:|--------------:|------:|---------:|\n";
    for (const auto& row : block.rows) {
      md << "| " << row.nodes << " | " << mean_std(row.native_s) << " | "
         << (row.native_normalized ? ratio4(*row.native_normalized) : "-") << " | "
         << mean_std(row.container_s) << " | "
         << (row.container_normalized ? ratio4(*row.container_normalized) : "-")
         << " | " << (row.rel_overhead ? pct1_signed(*row.rel_overhead) : "-")
         << " |\n";
    }
  } else {
    md << "Strong scaling run time in seconds. Lower is better; efficiency is"
          " relative to each environment's smallest-node baseline.\n\n";
    md << "| Nodes | Native (s) | Eff. | Container (s) | Eff. | Overhead |\n";
    md << "|------:|-----------:|-----:|--------------:|-----:|---------:|\n";
    for (const auto& row : block.rows) {
      md << "| " << row.nodes << " | " << mean_std(row.native_s) << " | "
         << (row.native_efficiency ? pct1(*row.native_efficiency) : "-");
      if (row.native_superlinear) md << " (*)";
      md << " | " << mean_std(row.container_s) << " | "
         << (row.container_efficiency ? pct1(*row.container_efficiency) : "-");
      if (row.container_superlinear) md << " (*)";
      md << " | " << (row.rel_overhead ? pct1_signed(*row.rel_overhead) : "-")
         << " |\n";
    }
    bool super = false;
    for (const auto& row : block.rows)
      super = super || row.native_superlinear || row.container_superlinear;
    if (super) md << "\n(*) super-linear speedup\n";
  }
  if (block.pattern) {
    md << "\nOverhead pattern: "
       << analytics::overhead_class_name(block.pattern->cls);
    if (block.pattern->cls == analytics::OverheadClass::ConstantRelative)
      md << " (" << pct1_signed(block.pattern->relative_level) << ")";
    if (block.pattern->cls == analytics::OverheadClass::ConstantAbsolute)
      md << " (" << fixed3(block.pattern->absolute_level) << " s)";
    md << "\n";
  }
  const auto outlier_line = [&md](const char* env, const std::vector<int>& nodes) {
    if (nodes.empty()) return;
    md << "Outliers (" << env << "):";
    for (const int n : nodes) md << " " << n;
    md << "\n";
  };
  outlier_line("native", block.native_outliers);
  outlier_line("container", block.container_outliers);
}

}  // namespace

std::string emit_markdown(const ReportDocument& doc) {
  std::ostringstream md;
  md << "# Benchmark comparison report\n\n";
  md << "- Plan digest: `" << doc.plan_digest << "`\n";
  md << "- Overall: **" << verdict::verdict_name(doc.overall) << "**\n\n";
  if (doc.comparisons.empty()) md << "No comparisons.\n";
  for (const auto& comparison : doc.comparisons) {
    md << "## " << comparison.system << " / " << comparison.benchmark << "\n\n";
    std::visit([&md](const auto& block) { markdown_block(md, block); },
               comparison.block);
    md << "\n";
  }
  md << "## Findings\n\n";
  if (doc.findings.empty()) {
    md << "No findings.\n";
  } else {
    for (const auto severity : {Severity::Fail, Severity::Warn, Severity::Info}) {
      for (const auto& f : doc.findings) {
        if (f.severity != severity) continue;
        md << "- **" << verdict::severity_name(f.severity) << "** `" << f.id << "`";
        if (f.subject.nodes > 0) md << " (nodes " << f.subject.nodes << ")";
        md << ": " << f.evidence;
        if (!f.hint.empty()) md << ". Hint: " << f.hint;
        md << "\n";
      }
    }
  }
  if (!doc.missing.empty() || !doc.unmatched.empty() || !doc.errors.empty()) {
    md << "\n## Ingest issues\n\n";
    for (const auto& p : doc.missing) md << "- missing: " << p << "\n";
    for (const auto& issue : doc.errors)
      md << "- unparseable: " << issue.path << " (" << issue.detail << ")\n";
    for (const auto& p : doc.unmatched) md << "- unmatched: " << p << "\n";
  }
  return md.str();
}

// ---- plot CSV ---------------------------------------------------------------

namespace {

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void csv_row(std::ostringstream& csv, const std::string& x,
             const std::optional<Stats>& native, const std::optional<Stats>& container,
             bool minmax_spread) {
  csv << x << ",";
  const auto cell = [&csv, minmax_spread](const std::optional<Stats>& s) {
    if (!s) {
      csv << ",,";
      return;
    }
    const double lo = minmax_spread ? s->min : s->mean - s->stddev;
    const double hi = minmax_spread ? s->max : s->mean + s->stddev;
    csv << g6(s->mean) << "," << g6(lo) << "," << g6(hi);
  };
  cell(native);
  csv << ",";
  cell(container);
  csv << "\n";
}

struct CsvBuilder {
  std::ostringstream csv;

  CsvBuilder() {
    csv << "x,native_mean,native_low,native_high,container_mean,container_low,"
           "container_high\n";
  }

  void operator()(const InitBlock& block) {
    for (const auto& row : block.rows) {
      // Init spread is the observed min/max, not the mean-of-averages spread.
      std::optional<Stats> native, container;
      if (row.native)
        native = Stats{row.native->avg_ms.mean, 0.0, row.native->observed_min_ms,
                       row.native->observed_max_ms, row.native->avg_ms.n};
      if (row.container)
        container =
            Stats{row.container->avg_ms.mean, 0.0, row.container->observed_min_ms,
                  row.container->observed_max_ms, row.container->avg_ms.n};
      csv_row(csv, std::to_string(row.nodes), native, container, true);
    }
  }
  void operator()(const LatencyBlock& block) {
    for (const auto& row : block.rows)
      csv_row(csv, std::to_string(row.size_bytes), row.native_us, row.container_us,
              false);
  }
  void operator()(const BandwidthBlock& block) {
    for (const auto& row : block.rows)
      csv_row(csv, std::to_string(row.size_bytes), row.native_busbw,
              row.container_busbw, false);
  }
  void operator()(const ScalingBlock& block) {
    for (const auto& row : block.rows)
      csv_row(csv, std::to_string(row.nodes), row.native_s, row.container_s, false);
  }
};

}  // namespace

std::vector<std::string> emit_plot_csv(const ReportDocument& doc,
                                       const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                "cannot create " + out_dir.string());
  std::vector<std::string> written;
  for (const auto& comparison : doc.comparisons) {
    CsvBuilder builder;
    std::visit(builder, comparison.block);
    const std::string name = comparison.system + "_" + comparison.benchmark + ".csv";
    const std::filesystem::path path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
      throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                  "cannot write " + path.string());
    out << builder.csv.str();
    out.flush();
    if (!out)
      throw harness::HarnessError(harness::HarnessError::Kind::Io,
                                  "short write on " + path.string());
    written.push_back(name);
  }
  return written;
}

// ---- analysis text ----------------------------------------------------------

namespace {

struct AnalysisText {
  std::ostringstream out;

  void operator()(const InitBlock& block) {
    for (const auto& row : block.rows) {
      out << "  nodes " << row.nodes << ":";
      if (row.native) out << " native " << fixed3(row.native->avg_ms.mean) << " ms";
      if (row.container)
        out << (row.native ? "," : "") << " container "
            << fixed3(row.container->avg_ms.mean) << " ms";
      if (row.excess) out << ", startup excess " << pct1_signed(*row.excess);
      out << "\n";
    }
  }
  void operator()(const LatencyBlock& block) {
    if (!block.regimes) {
      out << "  no common message sizes\n";
      return;
    }
    const auto line = [this](const char* name, const analytics::RegimeDelta& d) {
      out << "  " << name << ": mean |delta| " << fixed3(d.mean_abs_delta_us)
          << " us, max " << fixed3(d.max_abs_delta_us) << " us, mean relative "
          << pct1_signed(d.mean_rel_delta) << " (" << d.count << " sizes)\n";
    };
    if (block.regimes->small) line("small messages", *block.regimes->small);
    if (block.regimes->medium) line("medium messages", *block.regimes->medium);
    if (block.regimes->large) line("large messages", *block.regimes->large);
  }
  void operator()(const BandwidthBlock& block) {
    out << "  peak bus bandwidth:";
    if (block.native_peak)
      out << " native " << fixed3(block.native_peak->busbw_gbs) << " GB/s @ "
          << block.native_peak->size_bytes << " B";
    if (block.container_peak)
      out << (block.native_peak ? "," : "") << " container "
          << fixed3(block.container_peak->busbw_gbs) << " GB/s";
    out << "\n";
    if (block.parity) out << "  parity deviation: " << pct2(*block.parity) << "\n";
    if (block.native_reduction)
      out << "  reduction vs single node: native " << pct1(*block.native_reduction);
    if (block.container_reduction)
      out << (block.native_reduction ? ", " : "  reduction vs single node: ")
          << "container " << pct1(*block.container_reduction);
    if (block.native_reduction || block.container_reduction) out << "\n";
  }
  void operator()(const ScalingBlock& block) {
    for (const auto& row : block.rows) {
      out << "  nodes " << row.nodes << ":";
      if (row.native_s) {
        out << " native " << fixed3(row.native_s->mean) << " s";
        if (row.native_efficiency)
          out << " (efficiency " << pct1(*row.native_efficiency) << ")";
        if (row.native_normalized)
          out << " (normalized " << ratio4(*row.native_normalized) << ")";
      }
      if (row.container_s) {
        out << (row.native_s ? "," : "") << " container "
            << fixed3(row.container_s->mean) << " s";
        if (row.container_efficiency)
          out << " (efficiency " << pct1(*row.container_efficiency) << ")";
        if (row.container_normalized)
          out << " (normalized " << ratio4(*row.container_normalized) << ")";
      }
      if (row.rel_overhead) out << ", overhead " << pct1_signed(*row.rel_overhead);
      out << "\n";
    }
    if (block.pattern) {
      out << "  overhead pattern: "
          << analytics::overhead_class_name(block.pattern->cls);
      if (block.pattern->cls == analytics::OverheadClass::ConstantRelative)
        out << " (" << pct1_signed(block.pattern->relative_level) << ")";
      if (block.pattern->cls == analytics::OverheadClass::ConstantAbsolute)
        out << " (" << fixed3(block.pattern->absolute_level) << " s)";
      out << "\n";
    }
    const auto outliers = [this](const char* env, const std::vector<int>& nodes) {
      if (nodes.empty()) return;
      out << "  outliers (" << env << "):";
      for (const int n : nodes) out << " " << n;
      out << "\n";
    };
    outliers("native", block.native_outliers);
    outliers("container", block.container_outliers);
  }
};

}  // namespace

std::string render_analysis_text(const ReportDocument& doc) {
  AnalysisText text;
  if (doc.comparisons.empty()) text.out << "no comparisons\n";
  for (const auto& comparison : doc.comparisons) {
    text.out << comparison.system << " / " << comparison.benchmark << "\n";
    std::visit(text, comparison.block);
  }
  return text.out.str();
}

}  // namespace dualbench::report
