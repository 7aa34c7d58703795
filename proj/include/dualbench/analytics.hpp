#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualbench/model.hpp"

namespace dualbench::analytics {

struct AnalyticsError : std::runtime_error {
  enum class Kind {
    NonPositiveInput,
    EmptySamples,
    NoCommonSizes,
    InsufficientPoints,
    EmptyTable,
  };

  AnalyticsError(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind(kind) {}

  Kind kind;
};

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev (n-1); 0 when n == 1
  double min = 0.0;
  double max = 0.0;
  int n = 0;

  bool operator==(const Stats&) const = default;
};

Stats compute_stats(const std::vector<double>& samples);

// How repetition spread is presented downstream; the computed Stats always
// carry all four summary values.
enum class AggregationPolicy { MeanStd, MinMax };

Stats aggregate(const std::vector<double>& samples, AggregationPolicy policy);

// (t_base * n_base) / (t_n * n): 1.0 is ideal strong scaling.
double strong_efficiency(double t_base, double t_n, int n, int n_base);

struct Speedup {
  double ratio = 0.0;
  bool superlinear = false;  // ratio exceeds the node-count ratio

  bool operator==(const Speedup&) const = default;
};

Speedup speedup(double t_base, double t_n, int n, int n_base);

struct ScalingPoint {
  int nodes = 0;
  Stats time_seconds;

  bool operator==(const ScalingPoint&) const = default;
};

/// Mean run time per node count, ascending by nodes.
struct ScalingSeries {
  std::vector<ScalingPoint> points;
  int baseline_nodes = 1;

  bool operator==(const ScalingSeries&) const = default;
};

// Weak-scaling times normalized against a fixed baseline measurement
// (by convention the single-node native run): 1.0 is ideal.
std::vector<std::pair<int, double>> weak_normalized(const ScalingSeries& series,
                                                    const Stats& baseline);

// (container - native) / native. Positive means the container is slower;
// negative (container faster) is a legitimate outcome.
double relative_overhead(double t_container, double t_native);
double absolute_overhead(double t_container, double t_native);

struct RegimeDelta {
  double mean_abs_delta_us = 0.0;
  double max_abs_delta_us = 0.0;
  double mean_rel_delta = 0.0;  // signed, (container - native) / native
  int count = 0;

  bool operator==(const RegimeDelta&) const = default;
};

/// Latency deltas bucketed by message size: small <= 1 KiB,
/// medium 1 KiB < s <= 128 KiB, large > 128 KiB. Only regimes with at least
/// one common size are populated.
struct RegimeSummary {
  std::optional<RegimeDelta> small;
  std::optional<RegimeDelta> medium;
  std::optional<RegimeDelta> large;

  bool operator==(const RegimeSummary&) const = default;
};

inline constexpr std::int64_t kSmallMessageMax = 1024;
inline constexpr std::int64_t kMediumMessageMax = 131072;

RegimeSummary regime_summary(const model::MessageSizeSeries& native,
                             const model::MessageSizeSeries& container);

enum class NcclSide { OutOfPlace, InPlace };

struct PeakBandwidth {
  std::int64_t size_bytes = 0;
  double busbw_gbs = 0.0;

  bool operator==(const PeakBandwidth&) const = default;
};

// Highest bus-bandwidth row; on ties the larger message size wins.
PeakBandwidth peak_bus_bandwidth(const model::NcclTable& table, NcclSide side);

// 1 - inter / intra: the fraction of single-node bandwidth lost going
// through the network.
double bandwidth_reduction(double intra_gbs, double inter_gbs);

// |container - native| / native on a scalar metric.
double parity_deviation(double native, double container);

struct ClassifyThresholds {
  double noise_floor = 0.02;   // mean |relative overhead| below this is noise
  double cv_cutoff = 0.25;     // max coefficient of variation to call a level constant
  double growth_rise = 0.05;   // minimum overall rise in r(N) to call it growing

  bool operator==(const ClassifyThresholds&) const = default;
};

enum class OverheadClass {
  ConstantRelative,
  ConstantAbsolute,
  GrowingWithScale,
  Indistinguishable,
};

struct OverheadSample {
  int nodes = 0;
  double relative = 0.0;
  double absolute_seconds = 0.0;

  bool operator==(const OverheadSample&) const = default;
};

struct OverheadPattern {
  OverheadClass cls = OverheadClass::Indistinguishable;
  double relative_level = 0.0;  // mean relative overhead over common node counts
  double absolute_level = 0.0;  // mean absolute overhead, seconds
  std::vector<OverheadSample> evidence;

  bool operator==(const OverheadPattern&) const = default;
};

std::string overhead_class_name(OverheadClass cls);

// Compares container against native run times on common node counts and
// names the overhead shape. Decision order on the relative series r(N) and
// absolute series a(N):
//   mean |r| < noise_floor                 -> Indistinguishable
//   CV(r) <= cv_cutoff, CV(r) <= CV(a)     -> ConstantRelative
//   CV(a) <= cv_cutoff, CV(a) <  CV(r)     -> ConstantAbsolute
//   r strictly increasing, rise > growth   -> GrowingWithScale
//   otherwise                              -> Indistinguishable
OverheadPattern classify_overhead_pattern(const ScalingSeries& native,
                                          const ScalingSeries& container,
                                          const ClassifyThresholds& thresholds);

// Flags interior points whose mean deviates from the log-log interpolation
// of their neighbors by more than k times the larger neighbor spread.
// Endpoints are never flagged. Returns the offending node counts.
std::vector<int> detect_outliers(const ScalingSeries& series, double k);

}  // namespace dualbench::analytics
