#include "dualbench/parsers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "dualbench/model_json.hpp"

namespace dualbench::parsers {

using model::TransportMechanism;
using model::TransportObservation;
using model::TransportScope;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

// Entire token must be a decimal integer; no signs, separators, or suffixes.
bool parse_int64(const std::string& tok, std::int64_t& out) {
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool parse_int(const std::string& tok, int& out) {
  std::int64_t v = 0;
  if (!parse_int64(tok, v)) return false;
  if (v < INT32_MIN || v > INT32_MAX) return false;
  out = static_cast<int>(v);
  return true;
}

// Entire token must be a finite decimal float ("12", "3.4", "1e-3", "-0.5").
bool parse_double(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

model::MessageSizeSeries parse_osu_latency(const std::string& text) {
  model::MessageSizeSeries series;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    std::string line = lines[i];
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (is_blank(line)) continue;
    const auto tokens = split_tokens(line);
    if (tokens.size() != 2)
      throw ParseError(ParseError::Kind::MalformedRow,
                       "expected '<size> <latency>', got " +
                           std::to_string(tokens.size()) + " fields",
                       line_no);
    std::int64_t size = 0;
    double latency = 0.0;
    if (!parse_int64(tokens[0], size) || size < 0)
      throw ParseError(ParseError::Kind::MalformedRow,
                       "bad message size '" + tokens[0] + "'", line_no);
    if (!parse_double(tokens[1], latency))
      throw ParseError(ParseError::Kind::MalformedRow,
                       "bad latency '" + tokens[1] + "'", line_no);
    if (latency <= 0.0)
      throw ParseError(ParseError::Kind::MalformedRow,
                       "latency must be positive, got " + tokens[1], line_no);
    if (!series.empty() && size <= series.back().size_bytes)
      throw ParseError(ParseError::Kind::SizeOrdering,
                       "message sizes must be strictly ascending", line_no);
    series.push_back({size, latency});
  }
  if (series.empty())
    throw ParseError(ParseError::Kind::EmptyOutput, "no latency rows found");
  return series;
}

namespace {

// "<label>: <value> <unit>"; reports the missing/ill-formed piece by field name.
double init_field(const std::string& text, const std::string& field) {
  const std::regex label(field + R"(:\s*([^,\n]*))");
  std::smatch m;
  if (!std::regex_search(text, m, label))
    throw ParseError(ParseError::Kind::MissingField, "field '" + field + "' not found",
                     0, field);
  const auto tokens = split_tokens(m[1].str());
  double value = 0.0;
  if (tokens.empty() || !parse_double(tokens[0], value))
    throw ParseError(ParseError::Kind::MalformedRow,
                     "bad value for field '" + field + "'", 0, field);
  if (tokens.size() < 2 || tokens[1] != "ms")
    throw ParseError(ParseError::Kind::UnitMismatch,
                     "field '" + field + "' must be in ms", 0, field);
  return value;
}

}  // namespace

model::InitTiming parse_osu_init(const std::string& text) {
  model::InitTiming timing;
  const std::regex nprocs(R"(nprocs:\s*(\S+))");
  std::smatch m;
  if (!std::regex_search(text, m, nprocs))
    throw ParseError(ParseError::Kind::MissingField, "field 'nprocs' not found", 0,
                     "nprocs");
  std::string count = m[1].str();
  if (!count.empty() && count.back() == ',') count.pop_back();
  if (!parse_int(count, timing.nprocs) || timing.nprocs < 1)
    throw ParseError(ParseError::Kind::MalformedRow, "bad value for field 'nprocs'", 0,
                     "nprocs");
  timing.min_ms = init_field(text, "min");
  timing.max_ms = init_field(text, "max");
  timing.avg_ms = init_field(text, "avg");
  if (!(timing.min_ms <= timing.avg_ms && timing.avg_ms <= timing.max_ms))
    throw ParseError(ParseError::Kind::OrderingViolation,
                     "expected min <= avg <= max");
  return timing;
}

model::NcclTable parse_nccl_allreduce(const std::string& text) {
  model::NcclTable table;
  bool have_avg = false;
  const std::regex avg_line(R"(#\s*Avg bus bandwidth\s*:\s*(\S+))");
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const std::string& line = lines[i];
    if (is_blank(line)) continue;
    if (line.find_first_not_of(" \t") != std::string::npos &&
        line[line.find_first_not_of(" \t")] == '#') {
      std::smatch m;
      if (std::regex_search(line, m, avg_line)) {
        if (!parse_double(m[1].str(), table.avg_busbw_gbs) || table.avg_busbw_gbs < 0)
          throw ParseError(ParseError::Kind::MalformedRow,
                           "bad average bus bandwidth '" + m[1].str() + "'", line_no);
        have_avg = true;
      }
      continue;
    }
    const auto tokens = split_tokens(line);
    if (tokens.size() != 13)
      throw ParseError(ParseError::Kind::MalformedRow,
                       "expected 13 fields, got " + std::to_string(tokens.size()),
                       line_no);
    model::NcclRow row;
    const bool ok = parse_int64(tokens[0], row.size_bytes) &&
                    parse_int64(tokens[1], row.count) &&
                    parse_double(tokens[5], row.oop_time_us) &&
                    parse_double(tokens[6], row.oop_algbw_gbs) &&
                    parse_double(tokens[7], row.oop_busbw_gbs) &&
                    parse_int64(tokens[8], row.oop_wrong) &&
                    parse_double(tokens[9], row.ip_time_us) &&
                    parse_double(tokens[10], row.ip_algbw_gbs) &&
                    parse_double(tokens[11], row.ip_busbw_gbs) &&
                    parse_int64(tokens[12], row.ip_wrong);
    if (!ok || row.size_bytes < 0)
      throw ParseError(ParseError::Kind::MalformedRow, "unparseable data row", line_no);
    row.dtype = tokens[2];
    row.redop = tokens[3];
    // tokens[4] is the root rank; constant per run, not retained.
    if (!table.rows.empty() && row.size_bytes <= table.rows.back().size_bytes)
      throw ParseError(ParseError::Kind::SizeOrdering,
                       "message sizes must be strictly ascending", line_no);
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty())
    throw ParseError(ParseError::Kind::EmptyOutput, "no data rows found");
  if (!have_avg)
    throw ParseError(ParseError::Kind::MissingAvgBandwidth,
                     "missing 'Avg bus bandwidth' line");
  return table;
}

model::AppTiming parse_app_timing(const std::string& text, const std::string& app) {
  model::AppTiming timing;
  timing.app = app;
  bool have_sim = false;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int line_no = static_cast<int>(i) + 1;
    const auto tokens = split_tokens(lines[i]);
    if (tokens.empty()) continue;
    if (tokens[0] == "SIMTIME") {
      if (have_sim)
        throw ParseError(ParseError::Kind::DuplicateSimTime,
                         "second SIMTIME line", line_no);
      double seconds = 0.0;
      if (tokens.size() != 2 || !parse_double(tokens[1], seconds) || seconds <= 0.0)
        throw ParseError(ParseError::Kind::MalformedRow,
                         "SIMTIME needs one positive duration", line_no);
      timing.sim_seconds = seconds;
      have_sim = true;
    } else if (tokens[0] == "PARAM") {
      double value = 0.0;
      if (tokens.size() != 3 || !parse_double(tokens[2], value))
        throw ParseError(ParseError::Kind::MalformedRow,
                         "PARAM needs a name and a numeric value", line_no);
      timing.workload[tokens[1]] = value;
    }
    // Anything else is application chatter.
  }
  if (!have_sim)
    throw ParseError(ParseError::Kind::MissingSimTime, "no SIMTIME line found");
  return timing;
}

TransportRuleset default_ruleset() {
  using Src = TransportObservation::Source;
  TransportRuleset rs;
  rs.rules = {
      {Src::NcclLog, R"(via NET/IB/\S*/GDRDMA)", true, TransportScope::GpuNetwork,
       TransportMechanism::IbNetGdrdma},
      {Src::NcclLog, "via NET/IB", false, TransportScope::GpuNetwork,
       TransportMechanism::IbNetPlain},
      {Src::NcclLog, "via NET/Socket", false, TransportScope::GpuNetwork,
       TransportMechanism::Tcp},
      {Src::NcclLog, "via P2P/PCI", false, TransportScope::GpuPeerToPeer,
       TransportMechanism::PcieP2P},
      {Src::NcclLog, "via P2P", false, TransportScope::GpuPeerToPeer,
       TransportMechanism::NvlinkP2P},
      {Src::NcclLog, "via SHM", false, TransportScope::GpuPeerToPeer,
       TransportMechanism::SharedMemory},
      {Src::UcxLog, "rc_verbs", false, TransportScope::InterNodeCpu,
       TransportMechanism::InfinibandVerbs},
      {Src::UcxLog, "rc_mlx5", false, TransportScope::InterNodeCpu,
       TransportMechanism::InfinibandVerbs},
      {Src::UcxLog, "ud_verbs", false, TransportScope::InterNodeCpu,
       TransportMechanism::InfinibandVerbs},
      {Src::UcxLog, "tcp", false, TransportScope::InterNodeCpu,
       TransportMechanism::Tcp},
      {Src::UcxLog, "sysv", false, TransportScope::IntraNodeCpu,
       TransportMechanism::SharedMemory},
      {Src::UcxLog, "posix", false, TransportScope::IntraNodeCpu,
       TransportMechanism::SharedMemory},
      {Src::UcxLog, "self/", false, TransportScope::IntraNodeCpu,
       TransportMechanism::Self},
  };
  return rs;
}

namespace {

TransportObservation::Source source_from_json(const std::string& s) {
  if (s == "ucx") return TransportObservation::Source::UcxLog;
  if (s == "nccl") return TransportObservation::Source::NcclLog;
  throw ParseError(ParseError::Kind::MalformedRow,
                   "rule source must be 'ucx' or 'nccl', got '" + s + "'");
}

}  // namespace

TransportRuleset load_ruleset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError(ParseError::Kind::EmptyOutput,
                     "cannot open ruleset " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "ruleset is not valid JSON: " + std::string(e.what()));
  }
  TransportRuleset rs;
  rs.rules.clear();
  try {
    if (!doc.is_object() || !doc.contains("rules"))
      throw ParseError(ParseError::Kind::MalformedRow,
                       "ruleset must be an object with a 'rules' array");
    for (const auto& r : doc.at("rules")) {
      TransportRule rule;
      rule.source = source_from_json(r.at("source").get<std::string>());
      if (r.contains("regex") == r.contains("pattern"))
        throw ParseError(ParseError::Kind::MalformedRow,
                         "each rule needs exactly one of 'pattern' or 'regex'");
      if (r.contains("regex")) {
        rule.pattern = r.at("regex").get<std::string>();
        rule.is_regex = true;
      } else {
        rule.pattern = r.at("pattern").get<std::string>();
      }
      rule.scope = model::transport_scope_from_name(r.at("scope").get<std::string>());
      rule.mechanism =
          model::transport_mechanism_from_name(r.at("mechanism").get<std::string>());
      rs.rules.push_back(std::move(rule));
    }
    if (doc.contains("sentinels")) {
      rs.sentinels.clear();
      for (const auto& s : doc.at("sentinels"))
        rs.sentinels.push_back(s.get<std::string>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::MalformedRow,
                     "bad ruleset structure: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw ParseError(ParseError::Kind::MalformedRow, e.what());
  }
  return rs;
}

namespace {

bool rule_matches(const TransportRule& rule, const std::string& line) {
  if (rule.is_regex) {
    const std::regex re(rule.pattern);
    return std::regex_search(line, re);
  }
  return line.find(rule.pattern) != std::string::npos;
}

}  // namespace

std::vector<TransportObservation> parse_transport_log(const std::string& text,
                                                      const TransportRuleset& ruleset) {
  using Src = TransportObservation::Source;
  std::vector<TransportObservation> out;
  for (const auto& line : split_lines(text)) {
    if (is_blank(line)) continue;
    const bool nccl_line = line.find("NCCL") != std::string::npos;
    const Src line_source = nccl_line ? Src::NcclLog : Src::UcxLog;
    const TransportRule* hit = nullptr;
    for (const auto& rule : ruleset.rules) {
      if (rule.source != line_source) continue;
      if (rule_matches(rule, line)) {
        hit = &rule;
        break;
      }
    }
    if (hit) {
      out.push_back({hit->scope, hit->mechanism, {}, line, line_source});
      continue;
    }
    // No rule fired: keep the line visible if it still announces a pathway.
    const auto tokens = split_tokens(line);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      const bool sentinel =
          std::find(ruleset.sentinels.begin(), ruleset.sentinels.end(), tokens[i]) !=
          ruleset.sentinels.end();
      if (!sentinel) continue;
      TransportObservation obs;
      obs.scope = nccl_line ? TransportScope::GpuPeerToPeer
                            : TransportScope::IntraNodeCpu;
      obs.mechanism = TransportMechanism::Unknown;
      obs.raw_token = tokens[i + 1];
      obs.raw_line = line;
      obs.source = line_source;
      out.push_back(std::move(obs));
      break;
    }
  }
  return out;
}

DetectedFormat detect_format(const std::string& text) {
  bool init = false, latency = false, nccl = false, app = false;
  for (const auto& line : split_lines(text)) {
    if (line.find("nprocs:") != std::string::npos) init = true;
    if (line.find("OSU MPI Latency") != std::string::npos) latency = true;
    if (line.find("Avg bus bandwidth") != std::string::npos) nccl = true;
    if (line.find("algbw") != std::string::npos &&
        line.find("busbw") != std::string::npos)
      nccl = true;
    if (line.rfind("SIMTIME ", 0) == 0) app = true;
  }
  const int families = (init ? 1 : 0) + (latency ? 1 : 0) + (nccl ? 1 : 0) + (app ? 1 : 0);
  if (families != 1) return DetectedFormat::Unrecognized;
  if (init) return DetectedFormat::OsuInit;
  if (latency) return DetectedFormat::OsuLatency;
  if (nccl) return DetectedFormat::NcclAllReduce;
  return DetectedFormat::AppTiming;
}

std::string detected_format_name(DetectedFormat format) {
  switch (format) {
    case DetectedFormat::OsuInit: return "osu_init";
    case DetectedFormat::OsuLatency: return "osu_latency";
    case DetectedFormat::NcclAllReduce: return "nccl_allreduce";
    case DetectedFormat::AppTiming: return "app_timing";
    case DetectedFormat::Unrecognized: return "unrecognized";
  }
  return "unrecognized";
}

}  // namespace dualbench::parsers
