#pragma once

#include <json.hpp>

#include "dualbench/model.hpp"

// JSON encoding of model types as persisted in run manifests. Decoding is
// strict: wrong types or missing fields throw nlohmann::json exceptions,
// unknown enum tokens throw std::invalid_argument. encode(decode(x)) == x.

namespace dualbench::model {

using Json = nlohmann::ordered_json;

Json encode(const SystemDescriptor& system);
Json encode(const ToolchainRecord& toolchain);
Json encode(const EnvironmentKind& env);
Json encode(const BenchmarkKind& kind);
Json encode(const TransportObservation& obs);
Json encode(const RunRecord& record);

SystemDescriptor decode_system(const Json& j);
ToolchainRecord decode_toolchain(const Json& j);
EnvironmentKind decode_environment(const Json& j);
BenchmarkKind decode_benchmark(const Json& j);
TransportObservation decode_observation(const Json& j);
RunRecord decode_run(const Json& j);

TransportScope transport_scope_from_name(const std::string& name);
TransportMechanism transport_mechanism_from_name(const std::string& name);

}  // namespace dualbench::model
