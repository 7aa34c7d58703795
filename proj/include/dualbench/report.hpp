#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dualbench/analytics.hpp"
#include "dualbench/harness.hpp"
#include "dualbench/verdict.hpp"

namespace dualbench::report {

struct EnvInitRow {
  analytics::Stats avg_ms;       // over per-repetition averages
  double observed_min_ms = 0.0;  // smallest per-rank minimum seen
  double observed_max_ms = 0.0;

  bool operator==(const EnvInitRow&) const = default;
};

struct InitRow {
  int nodes = 0;
  std::optional<EnvInitRow> native;
  std::optional<EnvInitRow> container;
  std::optional<double> excess;  // container startup relative to native

  bool operator==(const InitRow&) const = default;
};

struct InitBlock {
  std::vector<InitRow> rows;

  bool operator==(const InitBlock&) const = default;
};

struct LatencyRow {
  std::int64_t size_bytes = 0;
  std::optional<analytics::Stats> native_us;
  std::optional<analytics::Stats> container_us;

  bool operator==(const LatencyRow&) const = default;
};

struct LatencyBlock {
  std::vector<LatencyRow> rows;
  std::optional<analytics::RegimeSummary> regimes;

  bool operator==(const LatencyBlock&) const = default;
};

struct BandwidthRow {
  std::int64_t size_bytes = 0;
  std::optional<analytics::Stats> native_busbw;  // out-of-place GB/s
  std::optional<analytics::Stats> container_busbw;

  bool operator==(const BandwidthRow&) const = default;
};

struct BandwidthBlock {
  int nodes = 1;
  std::vector<BandwidthRow> rows;
  std::optional<analytics::PeakBandwidth> native_peak;
  std::optional<analytics::PeakBandwidth> container_peak;
  std::optional<double> native_avg_busbw;
  std::optional<double> container_avg_busbw;
  std::optional<double> parity;  // on peak bandwidth
  // Multi-node blocks only, against the same system's single-node peak.
  std::optional<double> native_reduction;
  std::optional<double> container_reduction;

  bool operator==(const BandwidthBlock&) const = default;
};

struct ScalingRow {
  int nodes = 0;
  std::optional<analytics::Stats> native_s;
  std::optional<analytics::Stats> container_s;
  std::optional<double> native_efficiency;  // strong only
  std::optional<double> container_efficiency;
  std::optional<double> native_speedup;
  std::optional<double> container_speedup;
  bool native_superlinear = false;
  bool container_superlinear = false;
  std::optional<double> native_normalized;  // weak only
  std::optional<double> container_normalized;
  std::optional<double> rel_overhead;
  std::optional<double> abs_overhead;

  bool operator==(const ScalingRow&) const = default;
};

struct ScalingBlock {
  bool weak = false;
  std::vector<ScalingRow> rows;
  std::optional<analytics::OverheadPattern> pattern;
  std::vector<int> native_outliers;
  std::vector<int> container_outliers;

  bool operator==(const ScalingBlock&) const = default;
};

struct Comparison {
  std::string system;
  std::string benchmark;  // directory name
  std::variant<InitBlock, LatencyBlock, BandwidthBlock, ScalingBlock> block;

  bool operator==(const Comparison&) const = default;
};

struct ReportDocument {
  int schema_version = 1;
  std::string plan_digest;
  verdict::Verdict overall = verdict::Verdict::Pass;
  std::vector<Comparison> comparisons;     // sorted by (system, benchmark)
  std::vector<verdict::Finding> findings;  // ids unique within the document
  std::vector<std::string> missing;
  std::vector<std::string> unmatched;
  std::vector<harness::IngestIssue> errors;
  std::vector<harness::IngestIssue> violations;
};

// Aggregates ingested records into per-(system, benchmark) comparisons, runs
// every verification rule, and composes the overall verdict.
ReportDocument build_document(const harness::IngestReport& ingest,
                              const harness::Plan& plan,
                              const verdict::ExpectationProfile& profile);

// Canonical: stable key order, ratios to 4 decimals, durations and
// bandwidths to 3, byte-identical for equal documents.
std::string emit_json(const ReportDocument& doc);

// Projection of the JSON document: comparison tables, then findings by
// severity. Percentages appear only here.
std::string emit_markdown(const ReportDocument& doc);

// One CSV per comparison named <system>_<benchmark>.csv with columns
// x,native_mean,native_low,native_high,container_mean,container_low,
// container_high. Spread is min/max for startup timings, mean +/- std
// otherwise. Returns the file names written.
std::vector<std::string> emit_plot_csv(const ReportDocument& doc,
                                       const std::filesystem::path& out_dir);

// Terse per-comparison metric lines for terminal consumption.
std::string render_analysis_text(const ReportDocument& doc);

}  // namespace dualbench::report
