#include "dualbench/model.hpp"

#include <cmath>

namespace dualbench::model {

namespace {

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::vector<std::string> validate_system(const SystemDescriptor& system) {
  std::vector<std::string> out;
  if (system.name.empty()) out.push_back("system name is empty");
  if (system.cores_per_node < 1) out.push_back("cores_per_node must be >= 1");
  if (system.gpus_per_node < 0) out.push_back("gpus_per_node must be >= 0");
  if (system.nics_per_node < 1) out.push_back("nics_per_node must be >= 1");
  if (system.gpus_per_node == 0 &&
      system.gpu_interconnect.kind != GpuInterconnect::Kind::None)
    out.push_back("gpu interconnect declared on a system without gpus");
  if (system.gpus_per_node > 0 &&
      system.gpu_interconnect.kind == GpuInterconnect::Kind::None)
    out.push_back("system has gpus but no gpu interconnect kind");
  if (system.gpu_interconnect.kind == GpuInterconnect::Kind::NvlinkBond &&
      system.gpu_interconnect.nvlink_width < 1)
    out.push_back("nvlink bond width must be >= 1");
  for (const auto& aff : system.nic_gpu_affinity) {
    if (aff.gpu_index < 0 || aff.gpu_index >= system.gpus_per_node)
      out.push_back("nic affinity references gpu " + std::to_string(aff.gpu_index) +
                    " out of range");
    if (aff.nic_index < 0 || aff.nic_index >= system.nics_per_node)
      out.push_back("nic affinity references nic " + std::to_string(aff.nic_index) +
                    " out of range");
  }
  return out;
}

std::string environment_dir_name(EnvironmentKind::Kind kind) {
  return kind == EnvironmentKind::Kind::Native ? "native" : "container";
}

std::string environment_dir_name(const EnvironmentKind& env) {
  return environment_dir_name(env.kind);
}

std::string benchmark_dir_name(const BenchmarkKind& kind) {
  using V = BenchmarkKind::Variant;
  switch (kind.variant) {
    case V::OsuInit: return "osu_init";
    case V::OsuLatencyIntra: return "osu_latency_intra";
    case V::OsuLatencyInter: return "osu_latency_inter";
    case V::NcclAllReduceSingleNode: return "nccl_allreduce_single";
    case V::NcclAllReduceMultiNode: return "nccl_allreduce_multi";
    case V::AppStrongScaling: return kind.app + "_strong";
    case V::AppWeakScaling: return kind.app + "_weak";
  }
  return "unknown";
}

std::string transport_scope_name(TransportScope scope) {
  switch (scope) {
    case TransportScope::IntraNodeCpu: return "intra_node_cpu";
    case TransportScope::InterNodeCpu: return "inter_node_cpu";
    case TransportScope::GpuPeerToPeer: return "gpu_peer_to_peer";
    case TransportScope::GpuNetwork: return "gpu_network";
  }
  return "unknown";
}

std::string transport_mechanism_name(TransportMechanism mech) {
  switch (mech) {
    case TransportMechanism::InfinibandVerbs: return "infiniband_verbs";
    case TransportMechanism::Tcp: return "tcp";
    case TransportMechanism::SharedMemory: return "shared_memory";
    case TransportMechanism::Self: return "self";
    case TransportMechanism::NvlinkP2P: return "nvlink_p2p";
    case TransportMechanism::PcieP2P: return "pcie_p2p";
    case TransportMechanism::IbNetGdrdma: return "ib_net_gdrdma";
    case TransportMechanism::IbNetPlain: return "ib_net_plain";
    case TransportMechanism::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

void check_payload_kind(const RunRecord& record, std::vector<std::string>& out) {
  using V = BenchmarkKind::Variant;
  bool ok = false;
  switch (record.benchmark.variant) {
    case V::OsuInit:
      ok = std::holds_alternative<InitTiming>(record.payload);
      break;
    case V::OsuLatencyIntra:
    case V::OsuLatencyInter:
      ok = std::holds_alternative<MessageSizeSeries>(record.payload);
      break;
    case V::NcclAllReduceSingleNode:
    case V::NcclAllReduceMultiNode:
      ok = std::holds_alternative<NcclTable>(record.payload);
      break;
    case V::AppStrongScaling:
    case V::AppWeakScaling:
      ok = std::holds_alternative<AppTiming>(record.payload);
      break;
  }
  if (!ok)
    out.push_back("payload kind does not match benchmark " +
                  benchmark_dir_name(record.benchmark));
}

void check_init(const InitTiming& t, std::vector<std::string>& out) {
  if (t.nprocs < 1) out.push_back("init timing nprocs must be >= 1");
  if (!finite_positive(t.min_ms) || !finite_positive(t.max_ms) ||
      !finite_positive(t.avg_ms)) {
    out.push_back("init timings must be positive");
    return;
  }
  if (!(t.min_ms <= t.avg_ms && t.avg_ms <= t.max_ms))
    out.push_back("init timing ordering min <= avg <= max violated");
}

void check_series(const MessageSizeSeries& series, std::vector<std::string>& out) {
  if (series.empty()) {
    out.push_back("latency series is empty");
    return;
  }
  bool ascending = true;
  bool positive = true;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].size_bytes < 0 || !finite_positive(series[i].latency_us))
      positive = false;
    if (i > 0 && series[i].size_bytes <= series[i - 1].size_bytes) ascending = false;
  }
  if (!ascending) out.push_back("latency series sizes not strictly ascending");
  if (!positive) out.push_back("latency series has nonpositive entries");
}

void check_nccl(const NcclTable& table, std::vector<std::string>& out) {
  if (table.rows.empty()) {
    out.push_back("nccl table is empty");
    return;
  }
  bool ascending = true;
  bool bw_ok = true;
  std::int64_t wrong = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.oop_busbw_gbs < 0 || r.ip_busbw_gbs < 0 || r.oop_algbw_gbs < 0 ||
        r.ip_algbw_gbs < 0)
      bw_ok = false;
    wrong += r.oop_wrong + r.ip_wrong;
    if (i > 0 && r.size_bytes <= table.rows[i - 1].size_bytes) ascending = false;
  }
  if (!ascending) out.push_back("nccl table sizes not strictly ascending");
  if (!bw_ok) out.push_back("nccl table has negative bandwidth");
  if (wrong != 0)
    out.push_back("nccl table reports " + std::to_string(wrong) + " wrong results");
  if (table.avg_busbw_gbs < 0) out.push_back("nccl average bus bandwidth is negative");
}

void check_app(const AppTiming& t, std::vector<std::string>& out) {
  if (!finite_positive(t.sim_seconds))
    out.push_back("app sim_seconds must be positive");
  if (t.app.empty()) out.push_back("app timing has no application name");
}

}  // namespace

std::vector<std::string> validate_run(const RunRecord& record,
                                      const SystemDescriptor& system) {
  std::vector<std::string> out;
  if (record.system != system.name)
    out.push_back("record system '" + record.system + "' does not match descriptor '" +
                  system.name + "'");
  if (record.nodes < 1) out.push_back("nodes must be >= 1");
  if (record.tasks_per_node < 1) out.push_back("tasks_per_node must be >= 1");
  if (record.tasks_per_node > system.cores_per_node)
    out.push_back("tasks_per_node exceeds cores_per_node");
  if (record.gpus_per_node_used < 0) out.push_back("gpus_per_node_used must be >= 0");
  if (record.gpus_per_node_used > system.gpus_per_node)
    out.push_back("gpus_per_node_used exceeds system gpus_per_node");
  if (record.repetition < 0) out.push_back("repetition must be >= 0");
  if (record.environment.kind == EnvironmentKind::Kind::Container &&
      record.environment.image_id.empty())
    out.push_back("container environment without image id");
  if (record.environment.kind == EnvironmentKind::Kind::Native &&
      !record.environment.image_id.empty())
    out.push_back("native environment carries an image id");
  if (record.benchmark.is_app() && record.benchmark.app.empty())
    out.push_back("app benchmark without application name");

  check_payload_kind(record, out);
  std::visit(
      [&out](const auto& payload) {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, InitTiming>) check_init(payload, out);
        if constexpr (std::is_same_v<T, MessageSizeSeries>) check_series(payload, out);
        if constexpr (std::is_same_v<T, NcclTable>) check_nccl(payload, out);
        if constexpr (std::is_same_v<T, AppTiming>) check_app(payload, out);
      },
      record.payload);
  return out;
}

}  // namespace dualbench::model
