#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dualbench::model {

/// PCIe proximity classes, ordered by increasing distance.
enum class Proximity { Pix, Pxb, Node, Sys };

struct GpuInterconnect {
  enum class Kind { None, PcieOnly, NvlinkBond };
  Kind kind = Kind::None;
  int nvlink_width = 0;  // NvlinkBond only (e.g. 4 or 12 bonded lanes)

  bool operator==(const GpuInterconnect&) const = default;
};

struct NicGpuAffinity {
  int gpu_index = 0;
  int nic_index = 0;
  Proximity proximity = Proximity::Sys;

  bool operator==(const NicGpuAffinity&) const = default;
};

/// Node topology summary of one cluster, as far as transport expectations need it.
struct SystemDescriptor {
  std::string name;
  int cores_per_node = 0;
  int gpus_per_node = 0;
  int nics_per_node = 0;
  GpuInterconnect gpu_interconnect;
  std::vector<NicGpuAffinity> nic_gpu_affinity;

  bool operator==(const SystemDescriptor&) const = default;
};

/// Structural checks on a descriptor; empty result means well-formed.
std::vector<std::string> validate_system(const SystemDescriptor& system);

struct ToolchainRecord {
  std::string os;
  std::string compiler;
  std::optional<std::string> cuda;
  std::string ucx;
  std::string pmix;
  std::string mpi;
  // Host environments only; a container toolchain never carries a runtime of its own.
  std::optional<std::string> container_runtime;

  bool operator==(const ToolchainRecord&) const = default;
};

struct EnvironmentKind {
  enum class Kind { Native, Container };
  Kind kind = Kind::Native;
  std::string image_id;  // Container only, non-empty

  static EnvironmentKind native() { return {Kind::Native, {}}; }
  static EnvironmentKind container(std::string image) {
    return {Kind::Container, std::move(image)};
  }

  bool operator==(const EnvironmentKind&) const = default;
};

/// Short stable name used in result paths and report keys ("native" / "container").
std::string environment_dir_name(const EnvironmentKind& env);
std::string environment_dir_name(EnvironmentKind::Kind kind);

struct BenchmarkKind {
  enum class Variant {
    OsuInit,
    OsuLatencyIntra,
    OsuLatencyInter,
    NcclAllReduceSingleNode,
    NcclAllReduceMultiNode,
    AppStrongScaling,
    AppWeakScaling,
  };
  Variant variant = Variant::OsuInit;
  std::string app;  // AppStrongScaling / AppWeakScaling only

  bool is_app() const {
    return variant == Variant::AppStrongScaling || variant == Variant::AppWeakScaling;
  }

  bool operator==(const BenchmarkKind&) const = default;
};

/// Directory / file-name token for a benchmark: "osu_init", "osu_latency_intra",
/// "nccl_allreduce_single", "<app>_strong", "<app>_weak", ...
std::string benchmark_dir_name(const BenchmarkKind& kind);

/// MPI_Init wall-clock timings across ranks, milliseconds.
struct InitTiming {
  int nprocs = 0;
  double min_ms = 0.0;
  double max_ms = 0.0;
  double avg_ms = 0.0;

  bool operator==(const InitTiming&) const = default;
};

struct MessageSizePoint {
  std::int64_t size_bytes = 0;
  double latency_us = 0.0;

  bool operator==(const MessageSizePoint&) const = default;
};

/// Latency as a function of message size, strictly ascending by size.
using MessageSizeSeries = std::vector<MessageSizePoint>;

struct NcclRow {
  std::int64_t size_bytes = 0;
  std::int64_t count = 0;
  std::string dtype;
  std::string redop;
  double oop_time_us = 0.0;
  double oop_algbw_gbs = 0.0;
  double oop_busbw_gbs = 0.0;
  std::int64_t oop_wrong = 0;
  double ip_time_us = 0.0;
  double ip_algbw_gbs = 0.0;
  double ip_busbw_gbs = 0.0;
  std::int64_t ip_wrong = 0;

  bool operator==(const NcclRow&) const = default;
};

struct NcclTable {
  std::vector<NcclRow> rows;  // ascending by size
  double avg_busbw_gbs = 0.0;

  bool operator==(const NcclTable&) const = default;
};

/// One application run: wall-clock simulation time plus the resolved workload
/// parameters the job was launched with.
struct AppTiming {
  std::string app;
  double sim_seconds = 0.0;
  std::map<std::string, double> workload;

  bool operator==(const AppTiming&) const = default;
};

enum class TransportScope { IntraNodeCpu, InterNodeCpu, GpuPeerToPeer, GpuNetwork };

enum class TransportMechanism {
  InfinibandVerbs,
  Tcp,
  SharedMemory,
  Self,
  NvlinkP2P,
  PcieP2P,
  IbNetGdrdma,
  IbNetPlain,
  Unknown,
};

/// One transport/path selection event extracted from a debug log.
struct TransportObservation {
  enum class Source { UcxLog, NcclLog };

  TransportScope scope = TransportScope::IntraNodeCpu;
  TransportMechanism mechanism = TransportMechanism::Unknown;
  std::string raw_token;  // Unknown only: the unmatched token
  std::string raw_line;   // never empty
  Source source = Source::UcxLog;

  bool operator==(const TransportObservation&) const = default;
};

std::string transport_scope_name(TransportScope scope);
std::string transport_mechanism_name(TransportMechanism mech);

using Payload = std::variant<InitTiming, MessageSizeSeries, NcclTable, AppTiming>;

/// One benchmark execution: what ran, where, in which environment, and what it produced.
struct RunRecord {
  BenchmarkKind benchmark;
  EnvironmentKind environment;
  std::string system;
  int nodes = 1;
  int tasks_per_node = 1;
  int gpus_per_node_used = 0;
  int repetition = 0;  // 0-based, from the result file name
  Payload payload;
  std::vector<TransportObservation> transport_log;
  std::string source_path;

  bool operator==(const RunRecord&) const = default;
};

/// Checks every record invariant that is decidable from the record plus the
/// system it ran on. Violations are returned, never thrown; one entry per
/// broken rule.
std::vector<std::string> validate_run(const RunRecord& record,
                                      const SystemDescriptor& system);

}  // namespace dualbench::model
