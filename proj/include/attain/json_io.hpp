#pragma once

#include <json.hpp>

#include "attain/experiment.hpp"
#include "attain/solvers.hpp"
#include "attain/varieties.hpp"
#include "attain/witness_lab.hpp"

namespace attain {

/// JSON formats used by the CLI and the files it reads and writes.
///
/// Tensor: {"shape":[n1,...,nd], "field":"real"|"complex", "data":[...]} with
/// data flat in row-major order (last index fastest). Real entries are plain
/// numbers; complex entries are [re, im] pairs. Readers accept plain numbers
/// inside complex data (imaginary part zero) and [re, 0] inside real data,
/// but reject a nonzero imaginary part under "field": "real".
///
/// Mask: {"indices": [[i1,...,id], ...]} with 1-based positions, matching how
/// the documentation addresses entries. In-memory indices are 0-based.
///
/// Witness: {"spec": {"groups": [{"op": "sym"|"alt", "arity": k, "power": p},
/// ...], "ambient_dim": n}, "field": ..., "base": [[vector, ...] per group],
/// "perturb": [...]} with vectors as scalar arrays in the tensor encoding.

nlohmann::json tensor_to_json(const Hypermatrix& a);
Hypermatrix tensor_from_json(const nlohmann::json& j);

nlohmann::json mask_to_json(const Mask& mask);
Mask mask_from_json(const nlohmann::json& j);

nlohmann::json structured_spec_to_json(const StructuredSpec& spec);
StructuredSpec structured_spec_from_json(const nlohmann::json& j);

nlohmann::json witness_to_json(const TangentWitness& w);
TangentWitness witness_from_json(const nlohmann::json& j);

nlohmann::json condition_report_to_json(const ConditionReport& r);

nlohmann::json certificate_to_json(const RankCertificate& c);

nlohmann::json decomposition_to_json(const CpDecomposition& d);
CpDecomposition decomposition_from_json(const nlohmann::json& j);

nlohmann::json solve_report_to_json(const SolveReport& r);

nlohmann::json diagnostics_to_json(const Diagnostics& d);

nlohmann::json block_spec_to_json(const BlockSpec& s);
BlockSpec block_spec_from_json(const nlohmann::json& j);

nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

nlohmann::json experiment_report_to_json(const ExperimentReport& r);

/// Reads a whole file and parses it; error messages carry the path.
nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace attain
