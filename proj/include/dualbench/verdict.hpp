#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dualbench/analytics.hpp"
#include "dualbench/model.hpp"

namespace dualbench::verdict {

enum class Severity { Info, Warn, Fail };

std::string severity_name(Severity severity);

/// What a finding is about. nodes == 0 means the finding spans the whole
/// series; environment is "native", "container", or "both".
struct Subject {
  std::string benchmark;
  std::string system;
  std::string environment;
  int nodes = 0;

  auto operator<=>(const Subject&) const = default;
};

struct Finding {
  std::string id;  // stable rule id, e.g. "transport-tcp-fallback"
  Severity severity = Severity::Info;
  Subject subject;
  std::string evidence;
  std::string hint;

  bool operator==(const Finding&) const = default;
};

struct Band {
  double warn = 0.0;
  double fail = 0.0;

  bool operator==(const Band&) const = default;
};

/// Thresholds and expectations a verification run judges against. The
/// permissive profile expects nothing and never warns or fails.
struct ExpectationProfile {
  std::map<model::TransportScope, model::TransportMechanism> expected_transport;
  Band latency_small{0.5, 2.0};       // mean |delta| in us, messages <= 1 KiB
  Band latency_medium{1.0, 5.0};      // mean |delta| in us
  Band latency_large_rel{0.05, 0.15}; // mean relative delta, messages > 128 KiB
  double parity_warn = 0.02;
  double parity_fail = 0.10;
  double init_slowdown_margin = 0.25;
  double max_constant_relative_overhead = 0.20;
  analytics::ClassifyThresholds classify;
  double outlier_k = 3.0;

  static ExpectationProfile defaults();
  static ExpectationProfile permissive();

  bool operator==(const ExpectationProfile&) const = default;
};

// "default", "permissive", or a path to a JSON file overriding individual
// fields of the default profile. Throws parsers::ParseError on bad input.
ExpectationProfile load_profile(const std::string& name_or_path);

// Plan-embedded form: a `verify` section object, optionally naming a base
// under "profile" with the remaining keys overriding individual fields.
ExpectationProfile profile_from_plan_section(const nlohmann::json& section);

// One finding per observation. The expectation for gpu peer-to-peer traffic
// is specialized by the system's interconnect before comparing; a tcp
// fallback on the inter-node path is the one outright failure.
std::vector<Finding> verify_transports(
    const std::vector<model::TransportObservation>& observations,
    const ExpectationProfile& profile, const model::SystemDescriptor& system,
    const Subject& subject);

std::vector<Finding> verify_latency(const analytics::RegimeSummary& summary,
                                    const ExpectationProfile& profile,
                                    const Subject& subject);

// Parity of a scalar bandwidth metric between environments.
std::vector<Finding> verify_bandwidth(double native_gbs, double container_gbs,
                                      const ExpectationProfile& profile,
                                      const Subject& subject);

// Startup-time comparison per common node count, plus a series-wide failure
// when the slowdown both exceeds the margin and keeps growing with scale.
std::vector<Finding> verify_init(const std::map<int, analytics::Stats>& native,
                                 const std::map<int, analytics::Stats>& container,
                                 const ExpectationProfile& profile,
                                 const Subject& subject);

std::vector<Finding> verify_scaling(const analytics::OverheadPattern& pattern,
                                    const ExpectationProfile& profile,
                                    const Subject& subject);

enum class Verdict { Pass, PassWithWarnings, Fail };

std::string verdict_name(Verdict verdict);

Verdict compose_verdict(const std::vector<Finding>& findings);

void sort_findings(std::vector<Finding>& findings);

}  // namespace dualbench::verdict
