#include "dualbench/model_json.hpp"

#include <stdexcept>

namespace dualbench::model {

namespace {

std::string variant_name(BenchmarkKind::Variant v) {
  using V = BenchmarkKind::Variant;
  switch (v) {
    case V::OsuInit: return "osu_init";
    case V::OsuLatencyIntra: return "osu_latency_intra";
    case V::OsuLatencyInter: return "osu_latency_inter";
    case V::NcclAllReduceSingleNode: return "nccl_allreduce_single";
    case V::NcclAllReduceMultiNode: return "nccl_allreduce_multi";
    case V::AppStrongScaling: return "app_strong";
    case V::AppWeakScaling: return "app_weak";
  }
  throw std::invalid_argument("bad benchmark variant");
}

BenchmarkKind::Variant variant_from_name(const std::string& s) {
  using V = BenchmarkKind::Variant;
  if (s == "osu_init") return V::OsuInit;
  if (s == "osu_latency_intra") return V::OsuLatencyIntra;
  if (s == "osu_latency_inter") return V::OsuLatencyInter;
  if (s == "nccl_allreduce_single") return V::NcclAllReduceSingleNode;
  if (s == "nccl_allreduce_multi") return V::NcclAllReduceMultiNode;
  if (s == "app_strong") return V::AppStrongScaling;
  if (s == "app_weak") return V::AppWeakScaling;
  throw std::invalid_argument("unknown benchmark variant: " + s);
}

std::string proximity_name(Proximity p) {
  switch (p) {
    case Proximity::Pix: return "pix";
    case Proximity::Pxb: return "pxb";
    case Proximity::Node: return "node";
    case Proximity::Sys: return "sys";
  }
  throw std::invalid_argument("bad proximity");
}

Proximity proximity_from_name(const std::string& s) {
  if (s == "pix") return Proximity::Pix;
  if (s == "pxb") return Proximity::Pxb;
  if (s == "node") return Proximity::Node;
  if (s == "sys") return Proximity::Sys;
  throw std::invalid_argument("unknown proximity: " + s);
}

std::string interconnect_name(GpuInterconnect::Kind k) {
  switch (k) {
    case GpuInterconnect::Kind::None: return "none";
    case GpuInterconnect::Kind::PcieOnly: return "pcie_only";
    case GpuInterconnect::Kind::NvlinkBond: return "nvlink_bond";
  }
  throw std::invalid_argument("bad interconnect kind");
}

GpuInterconnect::Kind interconnect_from_name(const std::string& s) {
  if (s == "none") return GpuInterconnect::Kind::None;
  if (s == "pcie_only") return GpuInterconnect::Kind::PcieOnly;
  if (s == "nvlink_bond") return GpuInterconnect::Kind::NvlinkBond;
  throw std::invalid_argument("unknown interconnect kind: " + s);
}

Json encode_payload(const Payload& payload) {
  Json j;
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InitTiming>) {
          j["kind"] = "init_timing";
          j["nprocs"] = p.nprocs;
          j["min_ms"] = p.min_ms;
          j["max_ms"] = p.max_ms;
          j["avg_ms"] = p.avg_ms;
        } else if constexpr (std::is_same_v<T, MessageSizeSeries>) {
          j["kind"] = "latency_series";
          Json points = Json::array();
          for (const auto& pt : p)
            points.push_back({{"size_bytes", pt.size_bytes},
                              {"latency_us", pt.latency_us}});
          j["points"] = std::move(points);
        } else if constexpr (std::is_same_v<T, NcclTable>) {
          j["kind"] = "nccl_table";
          Json rows = Json::array();
          for (const auto& r : p.rows) {
            Json row;
            row["size_bytes"] = r.size_bytes;
            row["count"] = r.count;
            row["dtype"] = r.dtype;
            row["redop"] = r.redop;
            row["oop_time_us"] = r.oop_time_us;
            row["oop_algbw_gbs"] = r.oop_algbw_gbs;
            row["oop_busbw_gbs"] = r.oop_busbw_gbs;
            row["oop_wrong"] = r.oop_wrong;
            row["ip_time_us"] = r.ip_time_us;
            row["ip_algbw_gbs"] = r.ip_algbw_gbs;
            row["ip_busbw_gbs"] = r.ip_busbw_gbs;
            row["ip_wrong"] = r.ip_wrong;
            rows.push_back(std::move(row));
          }
          j["rows"] = std::move(rows);
          j["avg_busbw_gbs"] = p.avg_busbw_gbs;
        } else if constexpr (std::is_same_v<T, AppTiming>) {
          j["kind"] = "app_timing";
          j["app"] = p.app;
          j["sim_seconds"] = p.sim_seconds;
          Json wl = Json::object();
          for (const auto& [k, v] : p.workload) wl[k] = v;
          j["workload"] = std::move(wl);
        }
      },
      payload);
  return j;
}

Payload decode_payload(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "init_timing") {
    InitTiming t;
    t.nprocs = j.at("nprocs").get<int>();
    t.min_ms = j.at("min_ms").get<double>();
    t.max_ms = j.at("max_ms").get<double>();
    t.avg_ms = j.at("avg_ms").get<double>();
    return t;
  }
  if (kind == "latency_series") {
    MessageSizeSeries series;
    for (const auto& pt : j.at("points"))
      series.push_back({pt.at("size_bytes").get<std::int64_t>(),
                        pt.at("latency_us").get<double>()});
    return series;
  }
  if (kind == "nccl_table") {
    NcclTable table;
    for (const auto& row : j.at("rows")) {
      NcclRow r;
      r.size_bytes = row.at("size_bytes").get<std::int64_t>();
      r.count = row.at("count").get<std::int64_t>();
      r.dtype = row.at("dtype").get<std::string>();
      r.redop = row.at("redop").get<std::string>();
      r.oop_time_us = row.at("oop_time_us").get<double>();
      r.oop_algbw_gbs = row.at("oop_algbw_gbs").get<double>();
      r.oop_busbw_gbs = row.at("oop_busbw_gbs").get<double>();
      r.oop_wrong = row.at("oop_wrong").get<std::int64_t>();
      r.ip_time_us = row.at("ip_time_us").get<double>();
      r.ip_algbw_gbs = row.at("ip_algbw_gbs").get<double>();
      r.ip_busbw_gbs = row.at("ip_busbw_gbs").get<double>();
      r.ip_wrong = row.at("ip_wrong").get<std::int64_t>();
      table.rows.push_back(std::move(r));
    }
    table.avg_busbw_gbs = j.at("avg_busbw_gbs").get<double>();
    return table;
  }
  if (kind == "app_timing") {
    AppTiming t;
    t.app = j.at("app").get<std::string>();
    t.sim_seconds = j.at("sim_seconds").get<double>();
    for (const auto& [k, v] : j.at("workload").items())
      t.workload[k] = v.get<double>();
    return t;
  }
  throw std::invalid_argument("unknown payload kind: " + kind);
}

}  // namespace

TransportScope transport_scope_from_name(const std::string& name) {
  if (name == "intra_node_cpu") return TransportScope::IntraNodeCpu;
  if (name == "inter_node_cpu") return TransportScope::InterNodeCpu;
  if (name == "gpu_peer_to_peer") return TransportScope::GpuPeerToPeer;
  if (name == "gpu_network") return TransportScope::GpuNetwork;
  throw std::invalid_argument("unknown transport scope: " + name);
}

TransportMechanism transport_mechanism_from_name(const std::string& name) {
  if (name == "infiniband_verbs") return TransportMechanism::InfinibandVerbs;
  if (name == "tcp") return TransportMechanism::Tcp;
  if (name == "shared_memory") return TransportMechanism::SharedMemory;
  if (name == "self") return TransportMechanism::Self;
  if (name == "nvlink_p2p") return TransportMechanism::NvlinkP2P;
  if (name == "pcie_p2p") return TransportMechanism::PcieP2P;
  if (name == "ib_net_gdrdma") return TransportMechanism::IbNetGdrdma;
  if (name == "ib_net_plain") return TransportMechanism::IbNetPlain;
  if (name == "unknown") return TransportMechanism::Unknown;
  throw std::invalid_argument("unknown transport mechanism: " + name);
}

Json encode(const SystemDescriptor& system) {
  Json j;
  j["name"] = system.name;
  j["cores_per_node"] = system.cores_per_node;
  j["gpus_per_node"] = system.gpus_per_node;
  j["nics_per_node"] = system.nics_per_node;
  Json ic;
  ic["kind"] = interconnect_name(system.gpu_interconnect.kind);
  if (system.gpu_interconnect.kind == GpuInterconnect::Kind::NvlinkBond)
    ic["nvlink_width"] = system.gpu_interconnect.nvlink_width;
  j["gpu_interconnect"] = std::move(ic);
  Json aff = Json::array();
  for (const auto& a : system.nic_gpu_affinity)
    aff.push_back({{"gpu", a.gpu_index},
                   {"nic", a.nic_index},
                   {"proximity", proximity_name(a.proximity)}});
  j["nic_gpu_affinity"] = std::move(aff);
  return j;
}

SystemDescriptor decode_system(const Json& j) {
  SystemDescriptor s;
  s.name = j.at("name").get<std::string>();
  s.cores_per_node = j.at("cores_per_node").get<int>();
  s.gpus_per_node = j.at("gpus_per_node").get<int>();
  s.nics_per_node = j.at("nics_per_node").get<int>();
  const auto& ic = j.at("gpu_interconnect");
  s.gpu_interconnect.kind = interconnect_from_name(ic.at("kind").get<std::string>());
  if (s.gpu_interconnect.kind == GpuInterconnect::Kind::NvlinkBond)
    s.gpu_interconnect.nvlink_width = ic.at("nvlink_width").get<int>();
  for (const auto& a : j.at("nic_gpu_affinity"))
    s.nic_gpu_affinity.push_back(
        {a.at("gpu").get<int>(), a.at("nic").get<int>(),
         proximity_from_name(a.at("proximity").get<std::string>())});
  return s;
}

Json encode(const ToolchainRecord& toolchain) {
  Json j;
  j["os"] = toolchain.os;
  j["compiler"] = toolchain.compiler;
  if (toolchain.cuda) j["cuda"] = *toolchain.cuda;
  j["ucx"] = toolchain.ucx;
  j["pmix"] = toolchain.pmix;
  j["mpi"] = toolchain.mpi;
  if (toolchain.container_runtime) j["container_runtime"] = *toolchain.container_runtime;
  return j;
}

ToolchainRecord decode_toolchain(const Json& j) {
  ToolchainRecord t;
  t.os = j.at("os").get<std::string>();
  t.compiler = j.at("compiler").get<std::string>();
  if (j.contains("cuda")) t.cuda = j.at("cuda").get<std::string>();
  t.ucx = j.at("ucx").get<std::string>();
  t.pmix = j.at("pmix").get<std::string>();
  t.mpi = j.at("mpi").get<std::string>();
  if (j.contains("container_runtime"))
    t.container_runtime = j.at("container_runtime").get<std::string>();
  return t;
}

Json encode(const EnvironmentKind& env) {
  Json j;
  j["kind"] = environment_dir_name(env);
  if (env.kind == EnvironmentKind::Kind::Container) j["image_id"] = env.image_id;
  return j;
}

EnvironmentKind decode_environment(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "native") return EnvironmentKind::native();
  if (kind == "container")
    return EnvironmentKind::container(j.at("image_id").get<std::string>());
  throw std::invalid_argument("unknown environment kind: " + kind);
}

Json encode(const BenchmarkKind& kind) {
  Json j;
  j["variant"] = variant_name(kind.variant);
  if (kind.is_app()) j["app"] = kind.app;
  return j;
}

BenchmarkKind decode_benchmark(const Json& j) {
  BenchmarkKind k;
  k.variant = variant_from_name(j.at("variant").get<std::string>());
  if (k.is_app()) k.app = j.at("app").get<std::string>();
  return k;
}

Json encode(const TransportObservation& obs) {
  Json j;
  j["scope"] = transport_scope_name(obs.scope);
  j["mechanism"] = transport_mechanism_name(obs.mechanism);
  if (obs.mechanism == TransportMechanism::Unknown) j["raw_token"] = obs.raw_token;
  j["raw_line"] = obs.raw_line;
  j["source"] = obs.source == TransportObservation::Source::UcxLog ? "ucx" : "nccl";
  return j;
}

TransportObservation decode_observation(const Json& j) {
  TransportObservation obs;
  obs.scope = transport_scope_from_name(j.at("scope").get<std::string>());
  obs.mechanism = transport_mechanism_from_name(j.at("mechanism").get<std::string>());
  if (obs.mechanism == TransportMechanism::Unknown)
    obs.raw_token = j.at("raw_token").get<std::string>();
  obs.raw_line = j.at("raw_line").get<std::string>();
  const std::string src = j.at("source").get<std::string>();
  if (src == "ucx")
    obs.source = TransportObservation::Source::UcxLog;
  else if (src == "nccl")
    obs.source = TransportObservation::Source::NcclLog;
  else
    throw std::invalid_argument("unknown observation source: " + src);
  return obs;
}

Json encode(const RunRecord& record) {
  Json j;
  j["benchmark"] = encode(record.benchmark);
  j["environment"] = encode(record.environment);
  j["system"] = record.system;
  j["nodes"] = record.nodes;
  j["tasks_per_node"] = record.tasks_per_node;
  j["gpus_per_node_used"] = record.gpus_per_node_used;
  j["repetition"] = record.repetition;
  j["payload"] = encode_payload(record.payload);
  Json log = Json::array();
  for (const auto& obs : record.transport_log) log.push_back(encode(obs));
  j["transport_log"] = std::move(log);
  j["source_path"] = record.source_path;
  return j;
}

RunRecord decode_run(const Json& j) {
  RunRecord r;
  r.benchmark = decode_benchmark(j.at("benchmark"));
  r.environment = decode_environment(j.at("environment"));
  r.system = j.at("system").get<std::string>();
  r.nodes = j.at("nodes").get<int>();
  r.tasks_per_node = j.at("tasks_per_node").get<int>();
  r.gpus_per_node_used = j.at("gpus_per_node_used").get<int>();
  r.repetition = j.at("repetition").get<int>();
  r.payload = decode_payload(j.at("payload"));
  for (const auto& obs : j.at("transport_log"))
    r.transport_log.push_back(decode_observation(obs));
  r.source_path = j.at("source_path").get<std::string>();
  return r;
}

}  // namespace dualbench::model
