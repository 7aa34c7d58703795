#pragma once
// Canned plan + result trees that drive the CLI end to end.

#include <cstdio>
#include <string>

#include "helpers.hpp"

namespace testsupport {

// One small system, every benchmark family, two environments, tracing on.
inline std::string pipeline_plan_json() {
  return R"({
  "systems": [
    {
      "name": "testbox",
      "cores_per_node": 8,
      "gpus_per_node": 2,
      "nics_per_node": 1,
      "gpu_interconnect": {"kind": "nvlink_bond", "nvlink_width": 4},
      "nic_gpu_affinity": [
        {"gpu": 0, "nic": 0, "proximity": "pix"},
        {"gpu": 1, "nic": 0, "proximity": "pxb"}
      ],
      "launch": {
        "partition": "batch",
        "container_image": "img.sif",
        "modules": ["toolchain/1.0"]
      }
    }
  ],
  "applications": [
    {"name": "sim", "command": "simulate --cells {cells}"}
  ],
  "benchmarks": [
    {"benchmark": "osu_init", "nodes": [1, 2], "tasks_per_node": 8,
     "repetitions": 2},
    {"benchmark": "osu_latency_intra", "nodes": [1], "tasks_per_node": 2,
     "repetitions": 2},
    {"benchmark": "osu_latency_inter", "nodes": [2], "tasks_per_node": 1,
     "repetitions": 2},
    {"benchmark": "nccl_allreduce_single", "nodes": [1], "tasks_per_node": 1,
     "gpus_per_node": 2, "repetitions": 1},
    {"benchmark": "sim_strong", "nodes": [1, 4], "tasks_per_node": 8,
     "repetitions": 2, "workload": {"cells": 50000}}
  ],
  "environments": ["native", "container"],
  "tracing": {"ucx": true, "nccl": true},
  "verify": {"profile": "default"}
})";
}

struct TreeOptions {
  bool tcp_inter_trace = false;      // inter-node UCX trace reports tcp
  bool container_faster_init = false;
};

inline void write_pipeline_tree(const std::filesystem::path& results,
                                const TreeOptions& opt = {}) {
  const auto init_log = [](double avg) {
    char buf[128];
    std::snprintf(buf, sizeof buf,
                  "nprocs: 8, min: %.1f ms, max: %.1f ms, avg: %.1f ms\n",
                  avg - 20.0, avg + 20.0, avg);
    return std::string(buf);
  };
  const auto latency_log = [](double d_small, double d_large) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "# OSU MPI Latency Test\n# Size Latency (us)\n"
                  "8 %.2f\n1024 %.2f\n4096 %.2f\n262144 %.2f\n",
                  1.00 + d_small, 1.10 + d_small, 2.00 + d_small, 30.0 + d_large);
    return std::string(buf);
  };
  const auto nccl_log = [](double peak) {
    char buf[512];
    std::snprintf(
        buf, sizeof buf,
        "#       size count type redop root time algbw busbw #wrong time algbw "
        "busbw #wrong\n"
        "1048576 262144 float sum -1 50.0 21.0 %.1f 0 50.0 21.0 %.1f 0\n"
        "16777216 4194304 float sum -1 400.0 42.0 %.1f 0 400.0 42.0 %.1f 0\n"
        "# Avg bus bandwidth    : %.2f\n",
        peak / 2, peak / 2, peak, peak, peak * 0.75);
    return std::string(buf);
  };
  const auto app_log = [](double sim) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "PARAM cells 50000\nSIMTIME %.3f\n", sim);
    return std::string(buf);
  };

  for (int rep = 0; rep < 2; ++rep) {
    const double d = 0.5 * rep;
    const double cinit = opt.container_faster_init ? -25.0 : 5.0;
    write_file(results / "testbox/native/osu_init" / ("1n_r" + std::to_string(rep) + ".log"),
               init_log(500.0 + d));
    write_file(results / "testbox/container/osu_init" / ("1n_r" + std::to_string(rep) + ".log"),
               init_log(500.0 + cinit + d));
    write_file(results / "testbox/native/osu_init" / ("2n_r" + std::to_string(rep) + ".log"),
               init_log(700.0 + d));
    write_file(results / "testbox/container/osu_init" / ("2n_r" + std::to_string(rep) + ".log"),
               init_log(700.0 + cinit + d));

    write_file(results / "testbox/native/osu_latency_intra" / ("1n_r" + std::to_string(rep) + ".log"),
               latency_log(0.0, 0.0));
    write_file(results / "testbox/container/osu_latency_intra" / ("1n_r" + std::to_string(rep) + ".log"),
               latency_log(0.01, 0.30));
    write_file(results / "testbox/native/osu_latency_inter" / ("2n_r" + std::to_string(rep) + ".log"),
               latency_log(1.0, 10.0));
    write_file(results / "testbox/container/osu_latency_inter" / ("2n_r" + std::to_string(rep) + ".log"),
               latency_log(1.02, 10.40));

    write_file(results / "testbox/native/sim_strong" / ("1n_r" + std::to_string(rep) + ".log"),
               app_log(400.0 + 0.2 * rep));
    write_file(results / "testbox/container/sim_strong" / ("1n_r" + std::to_string(rep) + ".log"),
               app_log(410.0 + 0.2 * rep));
    write_file(results / "testbox/native/sim_strong" / ("4n_r" + std::to_string(rep) + ".log"),
               app_log(104.0 + 0.2 * rep));
    write_file(results / "testbox/container/sim_strong" / ("4n_r" + std::to_string(rep) + ".log"),
               app_log(106.6 + 0.2 * rep));
  }
  write_file(results / "testbox/native/nccl_allreduce_single/1n_r0.log",
             nccl_log(100.0));
  write_file(results / "testbox/container/nccl_allreduce_single/1n_r0.log",
             nccl_log(99.9));

  const std::string ucx_shm =
      "[1699990000.000000] [testbox1:100:0] ucp_worker.c:1855 UCX INFO "
      "ep_cfg[0]: tag(sysv/memory)\n";
  const std::string ucx_verbs =
      "[1699990001.000000] [testbox1:101:0] ucp_worker.c:1855 UCX INFO "
      "ep_cfg[0]: tag(rc_verbs/mlx5_0:1)\n";
  const std::string ucx_tcp =
      "[1699990001.000000] [testbox1:101:0] ucp_worker.c:1855 UCX INFO "
      "ep_cfg[0]: tag(tcp/eth0)\n";
  const std::string nccl_p2p =
      "testbox1:200:210 [0] NCCL INFO Channel 00/0 : 0[07000] -> 1[0a000] via "
      "P2P/CUMEM\n";
  for (const char* env : {"native", "container"}) {
    const std::string e = env;
    write_file(results / ("testbox/" + e + "/osu_latency_intra/1n_r0.trace"), ucx_shm);
    write_file(results / ("testbox/" + e + "/osu_latency_inter/2n_r0.trace"),
               opt.tcp_inter_trace ? ucx_tcp : ucx_verbs);
    write_file(results / ("testbox/" + e + "/nccl_allreduce_single/1n_r0.trace"),
               nccl_p2p);
  }
}

}  // namespace testsupport
