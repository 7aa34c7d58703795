#include "dualbench/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace dualbench::analytics {

using Kind = AnalyticsError::Kind;

Stats compute_stats(const std::vector<double>& samples) {
  if (samples.empty())
    throw AnalyticsError(Kind::EmptySamples, "no samples to aggregate");
  Stats s;
  s.n = static_cast<int>(samples.size());
  s.min = samples[0];
  s.max = samples[0];
  double sum = 0.0;
  for (double v : samples) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (s.n - 1));
  }
  return s;
}

Stats aggregate(const std::vector<double>& samples, AggregationPolicy) {
  // The policy only selects which spread a report prints; the summary values
  // are identical either way.
  return compute_stats(samples);
}

double strong_efficiency(double t_base, double t_n, int n, int n_base) {
  if (t_base <= 0.0 || t_n <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "run times must be positive");
  if (n_base < 1 || n < 1)
    throw AnalyticsError(Kind::NonPositiveInput, "node counts must be >= 1");
  return (t_base * n_base) / (t_n * n);
}

Speedup speedup(double t_base, double t_n, int n, int n_base) {
  if (t_base <= 0.0 || t_n <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "run times must be positive");
  if (n_base < 1 || n < 1)
    throw AnalyticsError(Kind::NonPositiveInput, "node counts must be >= 1");
  Speedup s;
  s.ratio = t_base / t_n;
  s.superlinear = s.ratio > static_cast<double>(n) / n_base;
  return s;
}

std::vector<std::pair<int, double>> weak_normalized(const ScalingSeries& series,
                                                    const Stats& baseline) {
  if (baseline.mean <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "baseline mean must be positive");
  std::vector<std::pair<int, double>> out;
  out.reserve(series.points.size());
  for (const auto& p : series.points)
    out.emplace_back(p.nodes, p.time_seconds.mean / baseline.mean);
  return out;
}

double relative_overhead(double t_container, double t_native) {
  if (t_native <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "native time must be positive");
  return (t_container - t_native) / t_native;
}

double absolute_overhead(double t_container, double t_native) {
  return t_container - t_native;
}

namespace {

std::optional<RegimeDelta> summarize_regime(const std::vector<double>& native,
                                            const std::vector<double>& container) {
  if (native.empty()) return std::nullopt;
  RegimeDelta d;
  d.count = static_cast<int>(native.size());
  double sum_abs = 0.0, sum_rel = 0.0;
  for (std::size_t i = 0; i < native.size(); ++i) {
    const double delta = container[i] - native[i];
    sum_abs += std::fabs(delta);
    d.max_abs_delta_us = std::max(d.max_abs_delta_us, std::fabs(delta));
    sum_rel += delta / native[i];
  }
  d.mean_abs_delta_us = sum_abs / d.count;
  d.mean_rel_delta = sum_rel / d.count;
  return d;
}

}  // namespace

RegimeSummary regime_summary(const model::MessageSizeSeries& native,
                             const model::MessageSizeSeries& container) {
  std::map<std::int64_t, double> by_size;
  for (const auto& p : container) by_size[p.size_bytes] = p.latency_us;

  std::vector<double> n_small, c_small, n_medium, c_medium, n_large, c_large;
  for (const auto& p : native) {
    auto it = by_size.find(p.size_bytes);
    if (it == by_size.end()) continue;
    if (p.size_bytes <= kSmallMessageMax) {
      n_small.push_back(p.latency_us);
      c_small.push_back(it->second);
    } else if (p.size_bytes <= kMediumMessageMax) {
      n_medium.push_back(p.latency_us);
      c_medium.push_back(it->second);
    } else {
      n_large.push_back(p.latency_us);
      c_large.push_back(it->second);
    }
  }
  if (n_small.empty() && n_medium.empty() && n_large.empty())
    throw AnalyticsError(Kind::NoCommonSizes,
                         "series share no message sizes to compare");
  RegimeSummary summary;
  summary.small = summarize_regime(n_small, c_small);
  summary.medium = summarize_regime(n_medium, c_medium);
  summary.large = summarize_regime(n_large, c_large);
  return summary;
}

PeakBandwidth peak_bus_bandwidth(const model::NcclTable& table, NcclSide side) {
  if (table.rows.empty())
    throw AnalyticsError(Kind::EmptyTable, "nccl table has no rows");
  PeakBandwidth peak{table.rows.front().size_bytes,
                     side == NcclSide::OutOfPlace ? table.rows.front().oop_busbw_gbs
                                                  : table.rows.front().ip_busbw_gbs};
  for (const auto& row : table.rows) {
    const double bw =
        side == NcclSide::OutOfPlace ? row.oop_busbw_gbs : row.ip_busbw_gbs;
    if (bw >= peak.busbw_gbs) peak = {row.size_bytes, bw};  // ties: larger size
  }
  return peak;
}

double bandwidth_reduction(double intra_gbs, double inter_gbs) {
  if (intra_gbs <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput,
                         "single-node bandwidth must be positive");
  return 1.0 - inter_gbs / intra_gbs;
}

double parity_deviation(double native, double container) {
  if (native <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "native value must be positive");
  return std::fabs(container - native) / native;
}

std::string overhead_class_name(OverheadClass cls) {
  switch (cls) {
    case OverheadClass::ConstantRelative: return "constant_relative";
    case OverheadClass::ConstantAbsolute: return "constant_absolute";
    case OverheadClass::GrowingWithScale: return "growing_with_scale";
    case OverheadClass::Indistinguishable: return "indistinguishable";
  }
  return "indistinguishable";
}

namespace {

double coefficient_of_variation(const std::vector<double>& values) {
  const Stats s = compute_stats(values);
  if (s.mean == 0.0) return std::numeric_limits<double>::infinity();
  return s.stddev / std::fabs(s.mean);
}

}  // namespace

OverheadPattern classify_overhead_pattern(const ScalingSeries& native,
                                          const ScalingSeries& container,
                                          const ClassifyThresholds& thresholds) {
  std::map<int, double> container_means;
  for (const auto& p : container.points) container_means[p.nodes] = p.time_seconds.mean;

  OverheadPattern pattern;
  std::vector<double> rel, abs;
  for (const auto& p : native.points) {
    auto it = container_means.find(p.nodes);
    if (it == container_means.end()) continue;
    if (p.time_seconds.mean <= 0.0)
      throw AnalyticsError(Kind::NonPositiveInput, "native times must be positive");
    const double a = it->second - p.time_seconds.mean;
    const double r = a / p.time_seconds.mean;
    pattern.evidence.push_back({p.nodes, r, a});
    rel.push_back(r);
    abs.push_back(a);
  }
  if (pattern.evidence.size() < 3)
    throw AnalyticsError(Kind::InsufficientPoints,
                         "need at least 3 common node counts, have " +
                             std::to_string(pattern.evidence.size()));

  pattern.relative_level = compute_stats(rel).mean;
  pattern.absolute_level = compute_stats(abs).mean;

  double mean_abs_rel = 0.0;
  for (double r : rel) mean_abs_rel += std::fabs(r);
  mean_abs_rel /= rel.size();
  if (mean_abs_rel < thresholds.noise_floor) {
    pattern.cls = OverheadClass::Indistinguishable;
    return pattern;
  }

  const double cv_rel = coefficient_of_variation(rel);
  const double cv_abs = coefficient_of_variation(abs);
  if (cv_rel <= thresholds.cv_cutoff && cv_rel <= cv_abs) {
    pattern.cls = OverheadClass::ConstantRelative;
    return pattern;
  }
  if (cv_abs <= thresholds.cv_cutoff && cv_abs < cv_rel) {
    pattern.cls = OverheadClass::ConstantAbsolute;
    return pattern;
  }

  bool increasing = true;
  for (std::size_t i = 1; i < rel.size(); ++i)
    if (rel[i] <= rel[i - 1]) increasing = false;
  if (increasing && rel.back() - rel.front() > thresholds.growth_rise) {
    pattern.cls = OverheadClass::GrowingWithScale;
    return pattern;
  }

  pattern.cls = OverheadClass::Indistinguishable;
  return pattern;
}

std::vector<int> detect_outliers(const ScalingSeries& series, double k) {
  if (k <= 0.0)
    throw AnalyticsError(Kind::NonPositiveInput, "k must be positive");
  if (series.points.size() < 3)
    throw AnalyticsError(Kind::InsufficientPoints,
                         "need at least 3 points to interpolate");
  for (const auto& p : series.points)
    if (p.nodes < 1 || p.time_seconds.mean <= 0.0)
      throw AnalyticsError(Kind::NonPositiveInput,
                           "node counts and times must be positive");

  std::vector<int> flagged;
  for (std::size_t i = 1; i + 1 < series.points.size(); ++i) {
    const auto& lo = series.points[i - 1];
    const auto& mid = series.points[i];
    const auto& hi = series.points[i + 1];
    const double x0 = std::log(static_cast<double>(lo.nodes));
    const double x1 = std::log(static_cast<double>(mid.nodes));
    const double x2 = std::log(static_cast<double>(hi.nodes));
    const double y0 = std::log(lo.time_seconds.mean);
    const double y2 = std::log(hi.time_seconds.mean);
    const double expected = std::exp(y0 + (x1 - x0) / (x2 - x0) * (y2 - y0));
    const double spread = std::max(lo.time_seconds.stddev, hi.time_seconds.stddev);
    const double deviation = std::fabs(mid.time_seconds.mean - expected);
    // The 1e-9 relative floor absorbs log/exp round-off so an exactly ideal
    // series is never flagged even when all spreads are zero.
    if (deviation > k * spread && deviation > 1e-9 * expected)
      flagged.push_back(mid.nodes);
  }
  return flagged;
}

}  // namespace dualbench::analytics
