#include "dualbench/verdict.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dualbench/model_json.hpp"
#include "dualbench/parsers.hpp"

namespace dualbench::verdict {

using model::TransportMechanism;
using model::TransportObservation;
using model::TransportScope;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_value(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

}  // namespace

std::string severity_name(Severity severity) {
  switch (severity) {
    case Severity::Info: return "info";
    case Severity::Warn: return "warn";
    case Severity::Fail: return "fail";
  }
  return "info";
}

std::string verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::PassWithWarnings: return "pass_with_warnings";
    case Verdict::Fail: return "fail";
  }
  return "fail";
}

ExpectationProfile ExpectationProfile::defaults() {
  ExpectationProfile p;
  p.expected_transport = {
      {TransportScope::IntraNodeCpu, TransportMechanism::SharedMemory},
      {TransportScope::InterNodeCpu, TransportMechanism::InfinibandVerbs},
      {TransportScope::GpuPeerToPeer, TransportMechanism::NvlinkP2P},
      {TransportScope::GpuNetwork, TransportMechanism::IbNetGdrdma},
  };
  return p;
}

ExpectationProfile ExpectationProfile::permissive() {
  ExpectationProfile p;
  p.expected_transport.clear();
  p.latency_small = {kInf, kInf};
  p.latency_medium = {kInf, kInf};
  p.latency_large_rel = {kInf, kInf};
  p.parity_warn = kInf;
  p.parity_fail = kInf;
  p.init_slowdown_margin = kInf;
  p.max_constant_relative_overhead = kInf;
  p.outlier_k = kInf;
  return p;
}

namespace {

using parsers::ParseError;

double number_or_inf(const nlohmann::json& j, const std::string& key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && (j.get<std::string>() == "inf"))
    return kInf;
  throw ParseError(ParseError::Kind::MalformedRow,
                   "profile field '" + key + "' must be a number or \"inf\"");
}

Band band_from_json(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object() || !j.contains("warn") || !j.contains("fail") || j.size() != 2)
    throw ParseError(ParseError::Kind::MalformedRow,
                     "profile field '" + key + "' must be {warn, fail}");
  return {number_or_inf(j.at("warn"), key + ".warn"),
          number_or_inf(j.at("fail"), key + ".fail")};
}

}  // namespace

namespace {

void check_band(const Band& band, const std::string& name) {
  // warn < fail, except the fully open band used by permissive setups.
  const bool open = std::isinf(band.warn) && std::isinf(band.fail);
  if (!open && !(band.warn < band.fail))
    throw ParseError(ParseError::Kind::MalformedRow,
                     "profile band '" + name + "' needs warn < fail");
  if (band.warn <= 0.0 || band.fail <= 0.0)
    throw ParseError(ParseError::Kind::MalformedRow,
                     "profile band '" + name + "' must be positive");
}

void check_profile(const ExpectationProfile& p) {
  check_band(p.latency_small, "latency_small");
  check_band(p.latency_medium, "latency_medium");
  check_band(p.latency_large_rel, "latency_large_rel");
  check_band({p.parity_warn, p.parity_fail}, "parity");
  for (const auto& [name, value] :
       {std::pair{"init_slowdown_margin", p.init_slowdown_margin},
        {"max_constant_relative_overhead", p.max_constant_relative_overhead},
        {"outlier_k", p.outlier_k}})
    if (value <= 0.0)
      throw ParseError(ParseError::Kind::MalformedRow,
                       "profile field '" + std::string(name) + "' must be positive");
}

void apply_override(ExpectationProfile& p, const std::string& key,
                    const nlohmann::json& value) {
  if (key == "expected_transport") {
    p.expected_transport.clear();
    for (const auto& [scope, mech] : value.items())
      p.expected_transport[model::transport_scope_from_name(scope)] =
          model::transport_mechanism_from_name(mech.get<std::string>());
  } else if (key == "latency_small") {
    p.latency_small = band_from_json(value, key);
  } else if (key == "latency_medium") {
    p.latency_medium = band_from_json(value, key);
  } else if (key == "latency_large_rel") {
    p.latency_large_rel = band_from_json(value, key);
  } else if (key == "parity_warn") {
    p.parity_warn = number_or_inf(value, key);
  } else if (key == "parity_fail") {
    p.parity_fail = number_or_inf(value, key);
  } else if (key == "init_slowdown_margin") {
    p.init_slowdown_margin = number_or_inf(value, key);
  } else if (key == "max_constant_relative_overhead") {
    p.max_constant_relative_overhead = number_or_inf(value, key);
  } else if (key == "outlier_k") {
    p.outlier_k = number_or_inf(value, key);
  } else if (key == "classify") {
    for (const auto& [ckey, cval] : value.items()) {
      if (ckey == "noise_floor")
        p.classify.noise_floor = number_or_inf(cval, ckey);
      else if (ckey == "cv_cutoff")
        p.classify.cv_cutoff = number_or_inf(cval, ckey);
      else if (ckey == "growth_rise")
        p.classify.growth_rise = number_or_inf(cval, ckey);
      else
        throw ParseError(ParseError::Kind::MalformedRow,
                         "unknown classify field '" + ckey + "'");
    }
  } else {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "unknown profile field '" + key + "'");
  }
}

ExpectationProfile base_profile(const std::string& name) {
  if (name.empty() || name == "default") return ExpectationProfile::defaults();
  if (name == "permissive") return ExpectationProfile::permissive();
  throw ParseError(ParseError::Kind::MalformedRow,
                   "unknown base profile '" + name + "'");
}

}  // namespace

ExpectationProfile load_profile(const std::string& name_or_path) {
  if (name_or_path.empty() || name_or_path == "default")
    return ExpectationProfile::defaults();
  if (name_or_path == "permissive") return ExpectationProfile::permissive();

  std::ifstream in(name_or_path);
  if (!in)
    throw ParseError(ParseError::Kind::EmptyOutput,
                     "cannot open profile " + name_or_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "profile is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object())
    throw ParseError(ParseError::Kind::MalformedRow, "profile must be an object");
  return profile_from_plan_section(doc);
}

ExpectationProfile profile_from_plan_section(const nlohmann::json& section) {
  if (!section.is_object())
    throw ParseError(ParseError::Kind::MalformedRow,
                     "verify section must be an object");
  ExpectationProfile p = ExpectationProfile::defaults();
  try {
    if (section.contains("profile"))
      p = base_profile(section.at("profile").get<std::string>());
    for (const auto& [key, value] : section.items()) {
      if (key == "profile") continue;
      apply_override(p, key, value);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "bad profile structure: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw ParseError(ParseError::Kind::MalformedRow, e.what());
  }
  check_profile(p);
  return p;
}

namespace {

// GPU peer-to-peer expectations depend on what the node actually has.
std::map<TransportScope, TransportMechanism> effective_expectations(
    const ExpectationProfile& profile, const model::SystemDescriptor& system) {
  auto expected = profile.expected_transport;
  auto it = expected.find(TransportScope::GpuPeerToPeer);
  if (it != expected.end()) {
    switch (system.gpu_interconnect.kind) {
      case model::GpuInterconnect::Kind::NvlinkBond:
        it->second = TransportMechanism::NvlinkP2P;
        break;
      case model::GpuInterconnect::Kind::PcieOnly:
        it->second = TransportMechanism::PcieP2P;
        break;
      case model::GpuInterconnect::Kind::None:
        expected.erase(it);
        break;
    }
  }
  return expected;
}

}  // namespace

std::vector<Finding> verify_transports(
    const std::vector<TransportObservation>& observations,
    const ExpectationProfile& profile, const model::SystemDescriptor& system,
    const Subject& subject) {
  const auto expected = effective_expectations(profile, system);
  std::vector<Finding> findings;
  findings.reserve(observations.size());
  for (const auto& obs : observations) {
    Finding f;
    f.subject = subject;
    const auto want = expected.find(obs.scope);
    if (obs.mechanism == TransportMechanism::Unknown) {
      f.id = "transport-unknown";
      f.severity = want == expected.end() ? Severity::Info : Severity::Warn;
      f.evidence = "unrecognized pathway token '" + obs.raw_token +
                   "' (line: " + obs.raw_line + ")";
      f.hint = "extend the transport ruleset to cover this token";
    } else if (want == expected.end()) {
      f.id = "transport-observed";
      f.severity = Severity::Info;
      f.evidence = transport_scope_name(obs.scope) + " uses " +
                   transport_mechanism_name(obs.mechanism);
    } else if (obs.mechanism == want->second) {
      f.id = "transport-expected";
      f.severity = Severity::Info;
      f.evidence = transport_scope_name(obs.scope) + " uses " +
                   transport_mechanism_name(obs.mechanism) + " as expected";
    } else {
      f.evidence = transport_scope_name(obs.scope) + " expected " +
                   transport_mechanism_name(want->second) + ", observed " +
                   transport_mechanism_name(obs.mechanism);
      if (obs.scope == TransportScope::InterNodeCpu &&
          obs.mechanism == TransportMechanism::Tcp) {
        f.id = "transport-tcp-fallback";
        f.severity = Severity::Fail;
        f.hint = "verbs transport unavailable; check the fabric and UCX_TLS";
      } else if (obs.scope == TransportScope::GpuPeerToPeer &&
                 obs.mechanism == TransportMechanism::PcieP2P &&
                 want->second == TransportMechanism::NvlinkP2P) {
        f.id = "transport-pcie-fallback";
        f.severity = Severity::Warn;
        f.hint = "peer traffic bypasses nvlink; check device visibility";
      } else if (obs.scope == TransportScope::GpuNetwork &&
                 obs.mechanism == TransportMechanism::IbNetPlain &&
                 want->second == TransportMechanism::IbNetGdrdma) {
        f.id = "transport-no-gdrdma";
        f.severity = Severity::Warn;
        f.hint = "gpu-direct rdma inactive; staging through host memory";
      } else {
        f.id = "transport-mismatch";
        f.severity = Severity::Warn;
      }
    }
    findings.push_back(std::move(f));
  }
  return findings;
}

namespace {

Finding regime_finding(const std::string& id, double metric, const Band& band,
                       const std::string& evidence, const Subject& subject) {
  Finding f;
  f.id = id;
  f.subject = subject;
  f.evidence = evidence;
  if (metric > band.fail)
    f.severity = Severity::Fail;
  else if (metric > band.warn)
    f.severity = Severity::Warn;
  else
    f.severity = Severity::Info;
  return f;
}

}  // namespace

std::vector<Finding> verify_latency(const analytics::RegimeSummary& summary,
                                    const ExpectationProfile& profile,
                                    const Subject& subject) {
  std::vector<Finding> findings;
  if (summary.small) {
    const auto& d = *summary.small;
    findings.push_back(regime_finding(
        "latency-small-delta", d.mean_abs_delta_us, profile.latency_small,
        "small messages: mean |delta| " + format_value(d.mean_abs_delta_us) +
            " us over " + std::to_string(d.count) + " sizes",
        subject));
  }
  if (summary.medium) {
    const auto& d = *summary.medium;
    findings.push_back(regime_finding(
        "latency-medium-delta", d.mean_abs_delta_us, profile.latency_medium,
        "medium messages: mean |delta| " + format_value(d.mean_abs_delta_us) +
            " us over " + std::to_string(d.count) + " sizes",
        subject));
  }
  if (summary.large) {
    const auto& d = *summary.large;
    findings.push_back(regime_finding(
        "latency-large-delta", d.mean_rel_delta, profile.latency_large_rel,
        "large messages: mean relative delta " + format_value(d.mean_rel_delta) +
            " over " + std::to_string(d.count) + " sizes",
        subject));
  }
  return findings;
}

std::vector<Finding> verify_bandwidth(double native_gbs, double container_gbs,
                                      const ExpectationProfile& profile,
                                      const Subject& subject) {
  const double dev = analytics::parity_deviation(native_gbs, container_gbs);
  Finding f;
  f.id = "bandwidth-parity";
  f.subject = subject;
  f.evidence = "native " + format_value(native_gbs) + " GB/s, container " +
               format_value(container_gbs) + " GB/s, deviation " + format_value(dev);
  if (dev > profile.parity_fail) {
    f.severity = Severity::Fail;
    f.hint = "bandwidth difference exceeds measurement noise";
  } else if (dev > profile.parity_warn) {
    f.severity = Severity::Warn;
  } else {
    f.severity = Severity::Info;
  }
  return {f};
}

std::vector<Finding> verify_init(const std::map<int, analytics::Stats>& native,
                                 const std::map<int, analytics::Stats>& container,
                                 const ExpectationProfile& profile,
                                 const Subject& subject) {
  std::vector<Finding> findings;
  std::vector<double> excesses;
  int offending = 0;
  for (const auto& [nodes, nstats] : native) {
    auto it = container.find(nodes);
    if (it == container.end()) continue;
    const double excess = analytics::relative_overhead(it->second.mean, nstats.mean);
    excesses.push_back(excess);
    Finding f;
    f.subject = subject;
    f.subject.nodes = nodes;
    f.evidence = "startup excess " + format_value(excess) + " (native " +
                 format_value(nstats.mean) + " ms, container " +
                 format_value(it->second.mean) + " ms)";
    if (excess > profile.init_slowdown_margin) {
      f.id = "init-slowdown";
      f.severity = Severity::Warn;
      f.hint = "container startup lags beyond the allowed margin";
      ++offending;
    } else {
      f.id = "init-parity";
      f.severity = Severity::Info;
      if (excess < 0.0) f.evidence += "; container starts faster";
    }
    findings.push_back(std::move(f));
  }
  bool growing = excesses.size() >= 2;
  for (std::size_t i = 1; i < excesses.size(); ++i)
    if (excesses[i] <= excesses[i - 1]) growing = false;
  if (offending > 0 && growing) {
    Finding f;
    f.id = "init-slowdown-growth";
    f.severity = Severity::Fail;
    f.subject = subject;
    f.subject.nodes = 0;
    f.evidence = "startup excess grows with node count, from " +
                 format_value(excesses.front()) + " to " +
                 format_value(excesses.back());
    f.hint = "startup cost scales with processes; check image distribution";
    findings.push_back(std::move(f));
  }
  return findings;
}

std::vector<Finding> verify_scaling(const analytics::OverheadPattern& pattern,
                                    const ExpectationProfile& profile,
                                    const Subject& subject) {
  Finding f;
  f.subject = subject;
  switch (pattern.cls) {
    case analytics::OverheadClass::GrowingWithScale:
      f.id = "scaling-overhead-growth";
      // An unbounded profile tolerates any shape; otherwise growth means the
      // container cost will not stay bounded at scale.
      f.severity = std::isinf(profile.max_constant_relative_overhead)
                       ? Severity::Info
                       : Severity::Fail;
      f.evidence = "relative overhead rises from " +
                   format_value(pattern.evidence.front().relative) + " to " +
                   format_value(pattern.evidence.back().relative);
      f.hint = "overhead grows with node count";
      break;
    case analytics::OverheadClass::ConstantRelative:
      f.evidence = "constant relative overhead " +
                   format_value(pattern.relative_level);
      if (pattern.relative_level > profile.max_constant_relative_overhead) {
        f.id = "scaling-overhead-high";
        f.severity = Severity::Warn;
        f.hint = "overhead level above the acceptable bound";
      } else {
        f.id = "scaling-overhead-constant-relative";
        f.severity = Severity::Info;
      }
      break;
    case analytics::OverheadClass::ConstantAbsolute:
      f.id = "scaling-overhead-constant-absolute";
      f.severity = Severity::Info;
      f.evidence = "constant absolute overhead " +
                   format_value(pattern.absolute_level) + " s";
      break;
    case analytics::OverheadClass::Indistinguishable:
      f.id = "scaling-overhead-indistinguishable";
      f.severity = Severity::Info;
      f.evidence = "environments are statistically indistinguishable";
      break;
  }
  return {f};
}

Verdict compose_verdict(const std::vector<Finding>& findings) {
  Verdict v = Verdict::Pass;
  for (const auto& f : findings) {
    if (f.severity == Severity::Fail) return Verdict::Fail;
    if (f.severity == Severity::Warn) v = Verdict::PassWithWarnings;
  }
  return v;
}

void sort_findings(std::vector<Finding>& findings) {
  std::stable_sort(findings.begin(), findings.end(),
                   [](const Finding& a, const Finding& b) {
                     if (a.subject != b.subject) return a.subject < b.subject;
                     return a.id < b.id;
                   });
}

}  // namespace dualbench::verdict
