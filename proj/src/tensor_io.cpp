#include "attain/json_io.hpp"

#include <fstream>
#include <stdexcept>

namespace attain {

using nlohmann::json;

namespace {

json scalar_to_json(Cx z, Field f) {
    if (f == Field::Real) return z.real();
    return json::array({z.real(), z.imag()});
}

Cx scalar_from_json(const json& j, Field f, const std::string& where) {
    if (j.is_number()) return Cx(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        const Cx z(j[0].get<double>(), j[1].get<double>());
        if (f == Field::Real && z.imag() != 0.0) {
            throw std::invalid_argument(where + ": nonzero imaginary part under field \"real\"");
        }
        return z;
    }
    throw std::invalid_argument(where + ": expected a number or an [re, im] pair");
}

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw std::invalid_argument(where + ": missing key \"" + key + "\"");
    }
    return j.at(key);
}

std::vector<std::size_t> shape_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        throw std::invalid_argument(where + ": \"shape\" must be a nonempty array");
    }
    std::vector<std::size_t> shape;
    for (const auto& e : j) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
            throw std::invalid_argument(where + ": mode extents must be positive integers");
        }
        shape.push_back(e.get<std::size_t>());
    }
    return shape;
}

Eigen::VectorXcd vector_from_json(const json& j, Field f, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        throw std::invalid_argument(where + ": expected a nonempty scalar array");
    }
    Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = scalar_from_json(j[i], f, where);
    }
    return v;
}

json vector_to_json(const Eigen::VectorXcd& v, Field f) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(scalar_to_json(v(i), f));
    return out;
}

}  // namespace

json tensor_to_json(const Hypermatrix& a) {
    json j;
    j["shape"] = a.shape();
    j["field"] = field_name(a.field());
    json data = json::array();
    for (std::size_t i = 0; i < a.size(); ++i) data.push_back(scalar_to_json(a[i], a.field()));
    j["data"] = std::move(data);
    return j;
}

Hypermatrix tensor_from_json(const json& j) {
    const std::string where = "tensor";
    const auto shape = shape_from_json(require(j, "shape", where), where);
    const Field field = field_from_name(require(j, "field", where).get<std::string>());
    const json& data = require(j, "data", where);
    if (!data.is_array()) throw std::invalid_argument(where + ": \"data\" must be an array");
    std::vector<Cx> entries;
    entries.reserve(data.size());
    for (const auto& e : data) entries.push_back(scalar_from_json(e, field, where + " data"));
    return Hypermatrix::from_data(shape, field, std::move(entries));
}

json mask_to_json(const Mask& mask) {
    json idx = json::array();
    for (const auto& mi : mask.indices) {
        json one = json::array();
        for (std::size_t v : mi) one.push_back(v + 1);  // file format is 1-based
        idx.push_back(std::move(one));
    }
    return json{{"indices", std::move(idx)}};
}

Mask mask_from_json(const json& j) {
    const std::string where = "mask";
    const json& idx = require(j, "indices", where);
    if (!idx.is_array()) throw std::invalid_argument(where + ": \"indices\" must be an array");
    Mask m;
    for (const auto& one : idx) {
        if (!one.is_array() || one.empty()) {
            throw std::invalid_argument(where + ": each index must be a nonempty array");
        }
        std::vector<std::size_t> mi;
        for (const auto& e : one) {
            if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
                throw std::invalid_argument(where + ": positions are 1-based positive integers");
            }
            mi.push_back(e.get<std::size_t>() - 1);
        }
        m.indices.push_back(std::move(mi));
    }
    return m;
}

json structured_spec_to_json(const StructuredSpec& spec) {
    json groups = json::array();
    for (const auto& g : spec.groups) {
        groups.push_back(json{{"op", g.op == GroupOp::Sym ? "sym" : "alt"},
                              {"arity", g.arity},
                              {"power", g.power}});
    }
    return json{{"groups", std::move(groups)}, {"ambient_dim", spec.ambient_dim}};
}

StructuredSpec structured_spec_from_json(const json& j) {
    const std::string where = "structured spec";
    StructuredSpec spec;
    const json& groups = require(j, "groups", where);
    if (!groups.is_array()) throw std::invalid_argument(where + ": \"groups\" must be an array");
    for (const auto& g : groups) {
        GroupSpec gs;
        const std::string op = require(g, "op", where).get<std::string>();
        if (op == "sym") {
            gs.op = GroupOp::Sym;
        } else if (op == "alt") {
            gs.op = GroupOp::Alt;
        } else {
            throw std::invalid_argument(where + ": op must be \"sym\" or \"alt\", got \"" + op +
                                        "\"");
        }
        gs.arity = require(g, "arity", where).get<std::size_t>();
        gs.power = require(g, "power", where).get<std::size_t>();
        spec.groups.push_back(gs);
    }
    spec.ambient_dim = require(j, "ambient_dim", where).get<std::size_t>();
    spec.validate();
    return spec;
}

namespace {

std::vector<std::vector<Eigen::VectorXcd>> vector_blocks_from_json(const json& j, Field f,
                                                                   const StructuredSpec& spec,
                                                                   const std::string& where) {
    if (!j.is_array() || j.size() != spec.groups.size()) {
        throw std::invalid_argument(where + ": expected one vector list per group (" +
                                    std::to_string(spec.groups.size()) + " groups)");
    }
    std::vector<std::vector<Eigen::VectorXcd>> blocks;
    for (std::size_t g = 0; g < j.size(); ++g) {
        const json& slots = j[g];
        if (!slots.is_array() || slots.size() != spec.groups[g].arity) {
            throw std::invalid_argument(where + ": group " + std::to_string(g + 1) + " needs " +
                                        std::to_string(spec.groups[g].arity) + " vectors");
        }
        std::vector<Eigen::VectorXcd> vecs;
        for (const auto& s : slots) {
            Eigen::VectorXcd v = vector_from_json(s, f, where);
            if (static_cast<std::size_t>(v.size()) != spec.ambient_dim) {
                throw std::invalid_argument(where + ": vectors must have length ambient_dim = " +
                                            std::to_string(spec.ambient_dim));
            }
            vecs.push_back(std::move(v));
        }
        blocks.push_back(std::move(vecs));
    }
    return blocks;
}

json vector_blocks_to_json(const std::vector<std::vector<Eigen::VectorXcd>>& blocks, Field f) {
    json out = json::array();
    for (const auto& group : blocks) {
        json slots = json::array();
        for (const auto& v : group) slots.push_back(vector_to_json(v, f));
        out.push_back(std::move(slots));
    }
    return out;
}

}  // namespace

json witness_to_json(const TangentWitness& w) {
    json j;
    j["spec"] = structured_spec_to_json(w.spec);
    j["field"] = field_name(w.field);
    j["base"] = vector_blocks_to_json(w.base, w.field);
    j["perturb"] = vector_blocks_to_json(w.perturb, w.field);
    return j;
}

TangentWitness witness_from_json(const json& j) {
    const std::string where = "witness";
    TangentWitness w;
    w.spec = structured_spec_from_json(require(j, "spec", where));
    w.field = field_from_name(require(j, "field", where).get<std::string>());
    w.base = vector_blocks_from_json(require(j, "base", where), w.field, w.spec, where + " base");
    w.perturb =
        vector_blocks_from_json(require(j, "perturb", where), w.field, w.spec, where + " perturb");
    return w;
}

json condition_report_to_json(const ConditionReport& r) {
    return json{{"holds", r.holds},
                {"hypothesis_in_range", r.hypothesis_in_range},
                {"rule", r.rule},
                {"reason", r.reason}};
}

json certificate_to_json(const RankCertificate& c) {
    return json{{"shape", c.shape},
                {"delta", json::array({c.delta.real(), c.delta.imag()})},
                {"delta_threshold", c.delta_threshold},
                {"mrank", c.mrank.ranks},
                {"mrank_tolerance", c.mrank.tolerance},
                {"rank_over_field", c.rank_over_field},
                {"complex_rank", c.complex_rank},
                {"border_rank", c.border_rank}};
}

json decomposition_to_json(const CpDecomposition& d) {
    json factors = json::array();
    for (const auto& f : d.factors) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < f.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < f.cols(); ++c) {
                row.push_back(scalar_to_json(f(r, c), d.field));
            }
            rows.push_back(std::move(row));
        }
        factors.push_back(std::move(rows));
    }
    return json{{"field", field_name(d.field)},
                {"shape", d.shape},
                {"rank", d.rank},
                {"weights", d.weights},
                {"factors", std::move(factors)}};
}

CpDecomposition decomposition_from_json(const json& j) {
    const std::string where = "decomposition";
    CpDecomposition d;
    d.field = field_from_name(require(j, "field", where).get<std::string>());
    d.shape = shape_from_json(require(j, "shape", where), where);
    d.rank = require(j, "rank", where).get<std::size_t>();
    const json& weights = require(j, "weights", where);
    if (!weights.is_array()) throw std::invalid_argument(where + ": \"weights\" must be an array");
    for (const auto& w : weights) d.weights.push_back(w.get<double>());
    const json& factors = require(j, "factors", where);
    if (!factors.is_array() || factors.size() != d.shape.size()) {
        throw std::invalid_argument(where + ": one factor matrix per mode required");
    }
    for (std::size_t m = 0; m < factors.size(); ++m) {
        const json& rows = factors[m];
        if (!rows.is_array() || rows.size() != d.shape[m]) {
            throw std::invalid_argument(where + ": factor " + std::to_string(m + 1) + " must have " +
                                        std::to_string(d.shape[m]) + " rows");
        }
        Eigen::MatrixXcd f(static_cast<Eigen::Index>(d.shape[m]),
                           static_cast<Eigen::Index>(d.rank));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const json& row = rows[r];
            if (!row.is_array() || row.size() != d.rank) {
                throw std::invalid_argument(where + ": factor rows must have length rank");
            }
            for (std::size_t c = 0; c < d.rank; ++c) {
                f(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    scalar_from_json(row[c], d.field, where);
            }
        }
        d.factors.push_back(std::move(f));
    }
    d.validate();
    return d;
}

json solve_report_to_json(const SolveReport& r) {
    return json{{"status", solve_status_name(r.status)},
                {"iterations", r.iterations},
                {"restart_id", r.restart_id},
                {"seed", r.seed},
                {"residuals", r.residuals},
                {"kappa", r.kappa},
                {"restart_residuals", r.restart_residuals},
                {"regularized", r.regularized},
                {"flags", r.flags}};
}

json diagnostics_to_json(const Diagnostics& d) {
    json j{{"kappa", d.kappa},
           {"term_norms", d.term_norms},
           {"reconstruction_norm", d.reconstruction_norm},
           {"degenerate", d.degenerate}};
    if (d.relative_residual.has_value()) {
        j["relative_residual"] = *d.relative_residual;
    } else {
        j["relative_residual"] = nullptr;
    }
    return j;
}

json block_spec_to_json(const BlockSpec& s) { return json{{"blocks", s.blocks}}; }

BlockSpec block_spec_from_json(const json& j) {
    const std::string where = "block spec";
    const json& blocks = require(j, "blocks", where);
    if (!blocks.is_array() || blocks.empty()) {
        throw std::invalid_argument(where + ": \"blocks\" must be a nonempty array");
    }
    BlockSpec s;
    for (const auto& b : blocks) {
        if (!b.is_array() || b.empty()) {
            throw std::invalid_argument(where + ": each block is a nonempty rank array");
        }
        std::vector<std::size_t> ranks;
        for (const auto& e : b) {
            if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
                throw std::invalid_argument(where + ": ranks must be positive integers");
            }
            ranks.push_back(e.get<std::size_t>());
        }
        s.blocks.push_back(std::move(ranks));
    }
    return s;
}

json experiment_config_to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = experiment_kind_name(c.kind);
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    if (!c.dims.empty()) j["dims"] = c.dims;
    j["rank"] = c.rank;
    if (!c.block_ranks.empty()) j["block_ranks"] = c.block_ranks;
    j["fill"] = c.fill;
    j["sparsity"] = c.sparsity;
    j["t_grid"] = c.t_grid;
    j["options"] = json{{"max_iter", c.options.max_iter},
                        {"tol_rel_change", c.options.tol_rel_change},
                        {"tol_residual", c.options.tol_residual},
                        {"kappa_threshold", c.options.kappa_threshold},
                        {"restarts", c.options.restarts}};
    if (!c.out_dir.empty()) j["out"] = c.out_dir;
    return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    const std::string where = "experiment config";
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    ExperimentConfig c;
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") {
            c.kind = experiment_kind_from_name(value.get<std::string>());
        } else if (key == "trials") {
            c.trials = value.get<int>();
        } else if (key == "seed") {
            c.seed = value.get<std::uint64_t>();
        } else if (key == "dims") {
            c.dims = shape_from_json(value, where);
        } else if (key == "rank") {
            c.rank = value.get<std::size_t>();
        } else if (key == "block_ranks") {
            c.block_ranks = block_spec_from_json(json{{"blocks", value}}).blocks;
        } else if (key == "fill") {
            c.fill = value.get<double>();
        } else if (key == "sparsity") {
            c.sparsity = value.get<std::size_t>();
        } else if (key == "t_grid") {
            c.t_grid = value.get<std::vector<double>>();
        } else if (key == "out") {
            c.out_dir = value.get<std::string>();
        } else if (key == "options") {
            for (const auto& [okey, oval] : value.items()) {
                if (okey == "max_iter") {
                    c.options.max_iter = oval.get<int>();
                } else if (okey == "tol_rel_change") {
                    c.options.tol_rel_change = oval.get<double>();
                } else if (okey == "tol_residual") {
                    c.options.tol_residual = oval.get<double>();
                } else if (okey == "kappa_threshold") {
                    c.options.kappa_threshold = oval.get<double>();
                } else if (okey == "restarts") {
                    c.options.restarts = oval.get<int>();
                } else if (okey == "seed") {
                    throw std::invalid_argument(
                        where + ": options.seed is derived from the experiment seed");
                } else {
                    throw std::invalid_argument(where + ": unknown options key \"" + okey + "\"");
                }
            }
        } else {
            throw std::invalid_argument(where + ": unknown key \"" + key + "\"");
        }
    }
    c.validate();
    return c;
}

namespace {

json cell_to_json(const CellValue& v) {
    if (std::holds_alternative<std::int64_t>(v)) return std::get<std::int64_t>(v);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    return std::get<std::string>(v);
}

}  // namespace

json experiment_report_to_json(const ExperimentReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json jr;
        for (const auto& [name, value] : row.cells) jr[name] = cell_to_json(value);
        rows.push_back(std::move(jr));
    }
    json summary;
    for (const auto& [name, value] : r.summary) summary[name] = value;
    return json{{"artifact_version", r.artifact_version},
                {"config", experiment_config_to_json(r.config)},
                {"csv_header", r.csv_header},
                {"rows", std::move(rows)},
                {"summary", std::move(summary)}};
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace attain
