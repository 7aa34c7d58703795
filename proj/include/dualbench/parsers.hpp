#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualbench/model.hpp"

namespace dualbench::parsers {

struct ParseError : std::runtime_error {
  enum class Kind {
    MalformedRow,
    EmptyOutput,
    SizeOrdering,
    MissingField,
    UnitMismatch,
    OrderingViolation,
    MissingAvgBandwidth,
    MissingSimTime,
    DuplicateSimTime,
  };

  ParseError(Kind kind, std::string message, int line_no = 0, std::string field = {})
      : std::runtime_error(std::move(message)),
        kind(kind),
        line_no(line_no),
        field(std::move(field)) {}

  Kind kind;
  int line_no;        // 1-based, 0 when the error has no single line
  std::string field;  // MissingField / UnitMismatch only
};

// Point-to-point latency table: one "<size> <latency>" row per line, `#`
// starts a comment. Sizes must be strictly ascending, latencies positive.
model::MessageSizeSeries parse_osu_latency(const std::string& text);

// Single summary line "nprocs: <n>, min: <x> ms, max: <x> ms, avg: <x> ms".
// Each field is located independently so one missing field is reported by
// name; any unit other than ms is a UnitMismatch.
model::InitTiming parse_osu_init(const std::string& text);

// nccl-tests all_reduce_perf output: 13-column data rows (size count type
// redop root, then time/algbw/busbw/#wrong out-of-place and in-place) and a
// trailing "# Avg bus bandwidth : <x>" line. The root column is launch
// bookkeeping and is not retained.
model::NcclTable parse_nccl_allreduce(const std::string& text);

// Wrapper output for application runs: exactly one "SIMTIME <seconds>" line,
// any number of "PARAM <name> <value>" lines, everything else ignored.
model::AppTiming parse_app_timing(const std::string& text, const std::string& app);

struct TransportRule {
  model::TransportObservation::Source source = model::TransportObservation::Source::UcxLog;
  std::string pattern;
  bool is_regex = false;
  model::TransportScope scope = model::TransportScope::IntraNodeCpu;
  model::TransportMechanism mechanism = model::TransportMechanism::Unknown;
};

// Ordered: the first matching rule wins. Lines matching no rule but carrying
// a sentinel word are reported as Unknown rather than dropped.
struct TransportRuleset {
  std::vector<TransportRule> rules;
  std::vector<std::string> sentinels = {"via", "using"};
};

TransportRuleset default_ruleset();

// Ruleset file: {"rules": [{"source": "ucx"|"nccl", "pattern"|"regex": ...,
// "scope": ..., "mechanism": ...}, ...], "sentinels": [...]?}. Throws
// ParseError(MalformedRow) on structural problems.
TransportRuleset load_ruleset(const std::filesystem::path& path);

std::vector<model::TransportObservation> parse_transport_log(
    const std::string& text, const TransportRuleset& ruleset);

enum class DetectedFormat { OsuInit, OsuLatency, NcclAllReduce, AppTiming, Unrecognized };

// Best-effort sniffing by format-specific markers. Text matching markers of
// more than one family is Unrecognized; this never guesses.
DetectedFormat detect_format(const std::string& text);

std::string detected_format_name(DetectedFormat format);

}  // namespace dualbench::parsers
