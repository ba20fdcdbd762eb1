#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "attain/json_io.hpp"
#include "attain/rng.hpp"

namespace py = pybind11;
using attain::Cx;
using attain::Field;
using attain::Hypermatrix;
using nlohmann::json;

namespace {

/// float64 input stays Real, complex128 becomes Complex; everything castable
/// to float64 (ints, lists) is treated as real data.
Hypermatrix hypermatrix_from_array(const py::object& obj) {
    py::array probe = py::array::ensure(obj);
    if (!probe) throw std::invalid_argument("expected an array-like of numbers");
    std::vector<std::size_t> shape(static_cast<std::size_t>(probe.ndim()));
    for (py::ssize_t i = 0; i < probe.ndim(); ++i) {
        shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(probe.shape(i));
    }
    std::vector<Cx> data;
    if (probe.dtype().kind() == 'c') {
        py::array_t<Cx, py::array::c_style | py::array::forcecast> arr(obj);
        const Cx* p = arr.data();
        data.assign(p, p + arr.size());
        return Hypermatrix::from_data(shape, Field::Complex, std::move(data));
    }
    py::array_t<double, py::array::c_style | py::array::forcecast> arr(obj);
    const double* p = arr.data();
    data.reserve(static_cast<std::size_t>(arr.size()));
    for (py::ssize_t i = 0; i < arr.size(); ++i) data.emplace_back(p[i], 0.0);
    return Hypermatrix::from_data(shape, Field::Real, std::move(data));
}

py::array hypermatrix_to_array(const Hypermatrix& t) {
    std::vector<py::ssize_t> shape;
    for (std::size_t n : t.shape()) shape.push_back(static_cast<py::ssize_t>(n));
    if (t.field() == Field::Complex) {
        py::array_t<Cx> arr(shape);
        Cx* p = arr.mutable_data();
        for (std::size_t i = 0; i < t.size(); ++i) p[i] = t[i];
        return arr;
    }
    py::array_t<double> arr(shape);
    double* p = arr.mutable_data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = t[i].real();
    return arr;
}

py::object json_to_py(const json& j) {
    switch (j.type()) {
        case json::value_t::null: return py::none();
        case json::value_t::boolean: return py::bool_(j.get<bool>());
        case json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
        case json::value_t::number_float: return py::float_(j.get<double>());
        case json::value_t::string: return py::str(j.get<std::string>());
        case json::value_t::array: {
            py::list out;
            for (const auto& e : j) out.append(json_to_py(e));
            return out;
        }
        case json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) out[py::str(k)] = json_to_py(v);
            return out;
        }
        default: return py::none();
    }
}

attain::SolveOptions make_options(int max_iter, double tol_rel_change, double tol_residual,
                                  double kappa_threshold, int restarts, std::uint64_t seed) {
    attain::SolveOptions o;
    o.max_iter = max_iter;
    o.tol_rel_change = tol_rel_change;
    o.tol_residual = tol_residual;
    o.kappa_threshold = kappa_threshold;
    o.restarts = restarts;
    o.seed = seed;
    return o;
}

py::dict result_to_py(const attain::CpResult& result) {
    py::dict d;
    py::list weights;
    for (double w : result.decomposition.weights) weights.append(w);
    py::list factors;
    for (const auto& f : result.decomposition.factors) {
        // Eigen stores column-major; reorder into row-major numpy layout.
        std::vector<Cx> rowmajor(static_cast<std::size_t>(f.size()));
        for (Eigen::Index r = 0; r < f.rows(); ++r) {
            for (Eigen::Index c = 0; c < f.cols(); ++c) {
                rowmajor[static_cast<std::size_t>(r * f.cols() + c)] = f(r, c);
            }
        }
        factors.append(hypermatrix_to_array(Hypermatrix::from_data(
            {static_cast<std::size_t>(f.rows()), static_cast<std::size_t>(f.cols())},
            result.decomposition.field, std::move(rowmajor))));
    }
    d["weights"] = std::move(weights);
    d["factors"] = std::move(factors);
    d["report"] = json_to_py(attain::solve_report_to_json(result.report));
    d["reconstruction"] = hypermatrix_to_array(result.decomposition.reconstruct());
    return d;
}

attain::Mask mask_from_indices(const py::object& indices) {
    py::array_t<std::int64_t, py::array::c_style | py::array::forcecast> arr(indices);
    if (arr.ndim() != 2) {
        throw std::invalid_argument("mask indices must be a 2-d array (observations x order)");
    }
    attain::Mask mask;
    const auto rows = static_cast<std::size_t>(arr.shape(0));
    const auto cols = static_cast<std::size_t>(arr.shape(1));
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<std::size_t> idx(cols);
        for (std::size_t j = 0; j < cols; ++j) {
            const std::int64_t v = arr.at(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
            if (v < 0) throw std::invalid_argument("mask indices are 0-based and nonnegative");
            idx[j] = static_cast<std::size_t>(v);
        }
        mask.indices.push_back(std::move(idx));
    }
    return mask;
}

attain::StructuredSpec spec_from_py(const std::vector<std::tuple<std::string, std::size_t,
                                                                 std::size_t>>& groups,
                                    std::size_t ambient_dim) {
    attain::StructuredSpec spec;
    for (const auto& [op, arity, power] : groups) {
        attain::GroupSpec g;
        if (op == "sym") {
            g.op = attain::GroupOp::Sym;
        } else if (op == "alt") {
            g.op = attain::GroupOp::Alt;
        } else {
            throw std::invalid_argument("group op must be 'sym' or 'alt'");
        }
        g.arity = arity;
        g.power = power;
        spec.groups.push_back(g);
    }
    spec.ambient_dim = ambient_dim;
    spec.validate();
    return spec;
}

std::vector<std::vector<Eigen::VectorXcd>> vectors_from_py(
    const std::vector<std::vector<py::object>>& blocks, Field& field_out, bool& any_complex) {
    std::vector<std::vector<Eigen::VectorXcd>> out;
    for (const auto& group : blocks) {
        std::vector<Eigen::VectorXcd> vecs;
        for (const auto& o : group) {
            const Hypermatrix v = hypermatrix_from_array(o);
            if (v.order() != 1) throw std::invalid_argument("expected 1-d vectors");
            if (v.field() == Field::Complex) any_complex = true;
            Eigen::VectorXcd e(static_cast<Eigen::Index>(v.size()));
            for (std::size_t i = 0; i < v.size(); ++i) e(static_cast<Eigen::Index>(i)) = v[i];
            vecs.push_back(std::move(e));
        }
        out.push_back(std::move(vecs));
    }
    field_out = any_complex ? Field::Complex : Field::Real;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Field-aware tensor approximation: witnesses, classification, ALS solvers";

    m.def(
        "hyperdeterminant",
        [](const py::object& a) {
            const Hypermatrix t = hypermatrix_from_array(a);
            return attain::hyperdeterminant(t);
        },
        py::arg("tensor"), "Cayley hyperdeterminant of a 2x2x2 tensor");

    m.def(
        "classify_2x2x2",
        [](const py::object& a) {
            return json_to_py(attain::certificate_to_json(
                attain::classify_2x2x2(hypermatrix_from_array(a))));
        },
        py::arg("tensor"), "Rank certificate of a 2x2x2 tensor");

    m.def(
        "tangent_witness",
        [](const py::object& f0, const py::object& f1) {
            return hypermatrix_to_array(attain::dsl_tangent_witness(
                hypermatrix_from_array(f0), hypermatrix_from_array(f1)));
        },
        py::arg("f0"), py::arg("f1"),
        "Border-rank-2, rank-3 tangent tensor built from two independent 2-vectors");

    m.def(
        "open_witness",
        [](const py::object& f0, const py::object& f1) {
            return hypermatrix_to_array(attain::dsl_open_witness(
                hypermatrix_from_array(f0), hypermatrix_from_array(f1)));
        },
        py::arg("f0"), py::arg("f1"),
        "Real tensor with negative hyperdeterminant: real rank 3, complex rank 2");

    m.def(
        "mrank",
        [](const py::object& a) {
            return attain::mrank(hypermatrix_from_array(a)).ranks;
        },
        py::arg("tensor"), "Multilinear rank (rank of every mode unfolding)");

    m.def(
        "symmetrize",
        [](const py::object& a) {
            return hypermatrix_to_array(attain::symmetrize(hypermatrix_from_array(a)));
        },
        py::arg("tensor"));

    m.def(
        "alternate",
        [](const py::object& a) {
            return hypermatrix_to_array(attain::alternate(hypermatrix_from_array(a)));
        },
        py::arg("tensor"));

    m.def(
        "structured_point",
        [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& groups,
           std::size_t ambient_dim, const std::vector<std::vector<py::object>>& base) {
            Field field = Field::Real;
            bool any_complex = false;
            auto vecs = vectors_from_py(base, field, any_complex);
            return hypermatrix_to_array(
                attain::structured_point(spec_from_py(groups, ambient_dim), field, vecs));
        },
        py::arg("groups"), py::arg("ambient_dim"), py::arg("base"),
        "Structured rank-one point; groups are (op, arity, power) triples");

    m.def(
        "structured_tangent",
        [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& groups,
           std::size_t ambient_dim, const std::vector<std::vector<py::object>>& base,
           const std::vector<std::vector<py::object>>& perturb) {
            attain::TangentWitness w;
            w.spec = spec_from_py(groups, ambient_dim);
            bool any_complex = false;
            w.base = vectors_from_py(base, w.field, any_complex);
            w.perturb = vectors_from_py(perturb, w.field, any_complex);
            w.field = any_complex ? Field::Complex : Field::Real;
            return hypermatrix_to_array(attain::structured_tangent(w));
        },
        py::arg("groups"), py::arg("ambient_dim"), py::arg("base"), py::arg("perturb"),
        "Derivative of the structured point along the perturbation");

    m.def(
        "sufficient_condition",
        [](const std::vector<std::tuple<std::string, std::size_t, std::size_t>>& groups,
           std::size_t ambient_dim, const std::vector<std::vector<py::object>>& base,
           const std::vector<std::vector<py::object>>& perturb) {
            attain::TangentWitness w;
            w.spec = spec_from_py(groups, ambient_dim);
            bool any_complex = false;
            w.base = vectors_from_py(base, w.field, any_complex);
            w.perturb = vectors_from_py(perturb, w.field, any_complex);
            w.field = any_complex ? Field::Complex : Field::Real;
            return json_to_py(
                attain::condition_report_to_json(attain::sufficient_condition(w)));
        },
        py::arg("groups"), py::arg("ambient_dim"), py::arg("base"), py::arg("perturb"),
        "Rank-two sufficient condition report for a tangent witness");

    m.def(
        "cp_als",
        [](const py::object& a, std::size_t rank, int max_iter, double tol_rel_change,
           double tol_residual, double kappa_threshold, int restarts, std::uint64_t seed) {
            return result_to_py(attain::cp_als(
                hypermatrix_from_array(a), rank,
                make_options(max_iter, tol_rel_change, tol_residual, kappa_threshold, restarts,
                             seed)));
        },
        py::arg("tensor"), py::arg("rank"), py::arg("max_iter") = 5000,
        py::arg("tol_rel_change") = 1e-10, py::arg("tol_residual") = 1e-12,
        py::arg("kappa_threshold") = 1e2, py::arg("restarts") = 5, py::arg("seed") = 0,
        "Rank-r alternating least squares; returns weights, factors, report");

    m.def(
        "symmetric_approx",
        [](const py::object& a, std::size_t rank, int max_iter, double tol_rel_change,
           double tol_residual, double kappa_threshold, int restarts, std::uint64_t seed) {
            return result_to_py(attain::symmetric_approx(
                hypermatrix_from_array(a), rank,
                make_options(max_iter, tol_rel_change, tol_residual, kappa_threshold, restarts,
                             seed)));
        },
        py::arg("tensor"), py::arg("rank"), py::arg("max_iter") = 5000,
        py::arg("tol_rel_change") = 1e-10, py::arg("tol_residual") = 1e-12,
        py::arg("kappa_threshold") = 1e2, py::arg("restarts") = 5, py::arg("seed") = 0,
        "Symmetric rank-r fit with one shared factor matrix");

    m.def(
        "masked_cp_als",
        [](const py::object& a, const py::object& indices, std::size_t rank, int max_iter,
           double tol_rel_change, double tol_residual, double kappa_threshold, int restarts,
           std::uint64_t seed) {
            return result_to_py(attain::masked_cp_als(
                hypermatrix_from_array(a), mask_from_indices(indices), rank,
                make_options(max_iter, tol_rel_change, tol_residual, kappa_threshold, restarts,
                             seed)));
        },
        py::arg("tensor"), py::arg("indices"), py::arg("rank"), py::arg("max_iter") = 5000,
        py::arg("tol_rel_change") = 1e-10, py::arg("tol_residual") = 1e-12,
        py::arg("kappa_threshold") = 1e2, py::arg("restarts") = 5, py::arg("seed") = 0,
        "Rank-r fit of the observed entries (0-based index rows)");

    m.def(
        "splr",
        [](const py::object& a, std::size_t rank, const py::object& sparsity, int max_iter,
           double tol_rel_change, double tol_residual, double kappa_threshold, int restarts,
           std::uint64_t seed) {
            attain::SparsityTarget target{std::size_t{0}};
            if (py::isinstance<py::int_>(sparsity)) {
                target = sparsity.cast<std::size_t>();
            } else {
                target = mask_from_indices(sparsity);
            }
            const attain::SplrResult r = attain::splr_solve(
                hypermatrix_from_array(a), rank, target,
                make_options(max_iter, tol_rel_change, tol_residual, kappa_threshold, restarts,
                             seed));
            py::dict d;
            d["low_rank"] = hypermatrix_to_array(r.low_rank.reconstruct());
            d["sparse"] = hypermatrix_to_array(r.sparse);
            d["sum"] = hypermatrix_to_array(r.sum);
            d["report"] = json_to_py(attain::solve_report_to_json(r.report));
            return d;
        },
        py::arg("tensor"), py::arg("rank"), py::arg("sparsity"), py::arg("max_iter") = 5000,
        py::arg("tol_rel_change") = 1e-10, py::arg("tol_residual") = 1e-12,
        py::arg("kappa_threshold") = 1e2, py::arg("restarts") = 5, py::arg("seed") = 0,
        "Sparse-plus-low-rank split; sparsity is a budget or an index array");

    m.def(
        "block_term",
        [](const py::object& a, const std::vector<std::vector<std::size_t>>& blocks, int max_iter,
           double tol_rel_change, double tol_residual, double kappa_threshold, int restarts,
           std::uint64_t seed) {
            const attain::BlockTermResult r = attain::block_term_solve(
                hypermatrix_from_array(a), attain::BlockSpec{blocks},
                make_options(max_iter, tol_rel_change, tol_residual, kappa_threshold, restarts,
                             seed));
            py::dict d;
            py::list bs;
            for (const auto& b : r.blocks) bs.append(hypermatrix_to_array(b));
            d["blocks"] = std::move(bs);
            d["report"] = json_to_py(attain::solve_report_to_json(r.report));
            return d;
        },
        py::arg("tensor"), py::arg("blocks"), py::arg("max_iter") = 5000,
        py::arg("tol_rel_change") = 1e-10, py::arg("tol_residual") = 1e-12,
        py::arg("kappa_threshold") = 1e2, py::arg("restarts") = 5, py::arg("seed") = 0,
        "Sum of fixed-multilinear-rank blocks");

    m.def(
        "truncate_multilinear",
        [](const py::object& a, const std::vector<std::size_t>& ranks, int sweeps) {
            return hypermatrix_to_array(
                attain::truncate_multilinear(hypermatrix_from_array(a), ranks, sweeps));
        },
        py::arg("tensor"), py::arg("ranks"), py::arg("sweeps") = 2,
        "Multilinear-rank truncation (HOSVD plus alternating sweeps)");

    m.def(
        "run_experiment_json",
        [](const std::string& config_json) {
            const attain::ExperimentConfig config =
                attain::experiment_config_from_json(json::parse(config_json));
            const attain::ExperimentReport report = attain::run_experiment(config);
            return attain::experiment_report_to_json(report).dump();
        },
        py::arg("config_json"), "Run a Monte Carlo study from a JSON config string");

    m.attr("__version__") = "0.1.0";
}
