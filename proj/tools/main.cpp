#include <CLI11.hpp>
#include <iostream>
#include <string>

#include "attain/json_io.hpp"

namespace {

using attain::Hypermatrix;
using nlohmann::json;

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        attain::save_json_file(out_path, j);
    }
}

struct SolverFlags {
    attain::SolveOptions options;

    void attach(CLI::App* cmd) {
        cmd->add_option("--max-iter", options.max_iter, "Sweep budget per restart");
        cmd->add_option("--tol-rel-change", options.tol_rel_change,
                        "Stop when the residual moves less than this per sweep");
        cmd->add_option("--tol-residual", options.tol_residual,
                        "Stop outright below this relative residual");
        cmd->add_option("--kappa-threshold", options.kappa_threshold,
                        "Summand-balance level that counts as divergence");
        cmd->add_option("--restarts", options.restarts, "Independent seeded restarts");
        cmd->add_option("--seed", options.seed, "Root seed for inits");
    }
};

json solve_payload(const attain::CpResult& result) {
    return json{{"decomposition", attain::decomposition_to_json(result.decomposition)},
                {"report", attain::solve_report_to_json(result.report)}};
}

int run(int argc, char** argv) {
    CLI::App app{"Field-aware tensor approximation toolkit"};
    app.require_subcommand(1);

    // witness -------------------------------------------------------------
    auto* witness = app.add_subcommand(
        "witness", "Build a structured tangent (or point) tensor from a witness JSON");
    std::string w_input, w_builtin, w_out;
    bool w_point = false, w_check = false;
    auto* w_input_opt =
        witness->add_option("--input", w_input, "Witness JSON: spec + base/perturb vectors");
    witness->add_option("--builtin", w_builtin,
                        "Built-in 2x2x2 witness on the unit vectors: 'tangent' or 'open'")
        ->check(CLI::IsMember({"tangent", "open"}))
        ->excludes(w_input_opt);
    witness->add_flag("--point", w_point,
                      "Emit the structured base point instead of the tangent");
    witness->add_flag("--check", w_check,
                      "Also evaluate the rank-two sufficient condition");
    witness->add_option("--out", w_out, "Output file (default stdout)");

    // rank2x2x2 -----------------------------------------------------------
    auto* rank_cmd =
        app.add_subcommand("rank2x2x2", "Rank certificate for a 2x2x2 tensor JSON");
    std::string r_input, r_out;
    rank_cmd->add_option("--input", r_input, "Tensor JSON")->required();
    rank_cmd->add_option("--out", r_out, "Output file (default stdout)");

    // approx --------------------------------------------------------------
    auto* approx = app.add_subcommand("approx", "Rank-r alternating least squares fit");
    std::string a_input, a_out;
    std::size_t a_rank = 2;
    bool a_symmetric = false;
    SolverFlags a_flags;
    approx->add_option("--input", a_input, "Tensor JSON")->required();
    approx->add_option("--rank", a_rank, "Target rank")->required();
    approx->add_flag("--symmetric", a_symmetric,
                     "Use the symmetric solver (input must be symmetric)");
    a_flags.attach(approx);
    approx->add_option("--out", a_out, "Output file (default stdout)");

    // complete ------------------------------------------------------------
    auto* complete = app.add_subcommand("complete", "Rank-r fit of observed entries only");
    std::string c_input, c_mask, c_out;
    std::size_t c_rank = 2;
    SolverFlags c_flags;
    complete->add_option("--input", c_input, "Tensor JSON")->required();
    complete->add_option("--mask", c_mask, "Mask JSON with 1-based indices")->required();
    complete->add_option("--rank", c_rank, "Target rank")->required();
    c_flags.attach(complete);
    complete->add_option("--out", c_out, "Output file (default stdout)");

    // splr ----------------------------------------------------------------
    auto* splr = app.add_subcommand("splr", "Sparse-plus-low-rank split");
    std::string s_input, s_pattern, s_out;
    std::size_t s_rank = 2, s_sparsity = 0;
    SolverFlags s_flags;
    splr->add_option("--input", s_input, "Tensor JSON")->required();
    splr->add_option("--rank", s_rank, "Low-rank part target rank")->required();
    auto* s_k = splr->add_option("--sparsity", s_sparsity,
                                 "Free support: keep this many largest residual entries");
    splr->add_option("--pattern", s_pattern, "Fixed support: mask JSON with 1-based indices")
        ->excludes(s_k);
    s_flags.attach(splr);
    splr->add_option("--out", s_out, "Output file (default stdout)");

    // blockterm -----------------------------------------------------------
    auto* blockterm = app.add_subcommand("blockterm", "Sum of fixed-multilinear-rank blocks");
    std::string b_input, b_out;
    std::vector<std::vector<std::size_t>> b_blocks;
    SolverFlags b_flags;
    blockterm->add_option("--input", b_input, "Tensor JSON")->required();
    blockterm
        ->add_option("--block", b_blocks,
                     "Multilinear ranks of one block, e.g. --block 2 2 2 (repeatable)")
        ->required();
    b_flags.attach(blockterm);
    blockterm->add_option("--out", b_out, "Output file (default stdout)");

    // experiment ----------------------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "Run a seeded Monte Carlo study");
    std::string e_config, e_out;
    experiment->add_option("--config", e_config, "Experiment config JSON")->required();
    experiment->add_option("--out", e_out, "Output directory for CSV + JSON tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", e.what()}}.dump() << '\n';
        return e.get_exit_code() == 0 ? 1 : e.get_exit_code();
    }

    if (witness->parsed()) {
        json result;
        if (!w_builtin.empty()) {
            const Hypermatrix e1 = Hypermatrix::vector(std::vector<double>{1.0, 0.0});
            const Hypermatrix e2 = Hypermatrix::vector(std::vector<double>{0.0, 1.0});
            if (w_point || w_check) {
                throw std::invalid_argument(
                    "--point/--check need a witness file; built-ins are plain tensors");
            }
            const Hypermatrix t = w_builtin == "tangent" ? attain::dsl_tangent_witness(e1, e2)
                                                         : attain::dsl_open_witness(e1, e2);
            result = attain::tensor_to_json(t);
        } else {
            if (w_input.empty()) {
                throw std::invalid_argument("witness: provide --input or --builtin");
            }
            const attain::TangentWitness w =
                attain::witness_from_json(attain::load_json_file(w_input));
            const Hypermatrix t = w_point ? attain::structured_point(w.spec, w.field, w.base)
                                          : attain::structured_tangent(w);
            if (w_check) {
                result = json{{"tensor", attain::tensor_to_json(t)},
                              {"condition",
                               attain::condition_report_to_json(attain::sufficient_condition(w))}};
            } else {
                result = attain::tensor_to_json(t);
            }
        }
        emit(result, w_out);
        return 0;
    }

    if (rank_cmd->parsed()) {
        const Hypermatrix a = attain::tensor_from_json(attain::load_json_file(r_input));
        emit(attain::certificate_to_json(attain::classify_2x2x2(a)), r_out);
        return 0;
    }

    if (approx->parsed()) {
        const Hypermatrix a = attain::tensor_from_json(attain::load_json_file(a_input));
        const attain::CpResult result = a_symmetric
                                            ? attain::symmetric_approx(a, a_rank, a_flags.options)
                                            : attain::cp_als(a, a_rank, a_flags.options);
        emit(solve_payload(result), a_out);
        return 0;
    }

    if (complete->parsed()) {
        const Hypermatrix a = attain::tensor_from_json(attain::load_json_file(c_input));
        const attain::Mask mask = attain::mask_from_json(attain::load_json_file(c_mask));
        emit(solve_payload(attain::masked_cp_als(a, mask, c_rank, c_flags.options)), c_out);
        return 0;
    }

    if (splr->parsed()) {
        const Hypermatrix a = attain::tensor_from_json(attain::load_json_file(s_input));
        attain::SparsityTarget target{s_sparsity};
        if (!s_pattern.empty()) {
            target = attain::mask_from_json(attain::load_json_file(s_pattern));
        }
        const attain::SplrResult result = attain::splr_solve(a, s_rank, target, s_flags.options);
        emit(json{{"low_rank", attain::decomposition_to_json(result.low_rank)},
                  {"sparse", attain::tensor_to_json(result.sparse)},
                  {"sum", attain::tensor_to_json(result.sum)},
                  {"report", attain::solve_report_to_json(result.report)}},
             s_out);
        return 0;
    }

    if (blockterm->parsed()) {
        const Hypermatrix a = attain::tensor_from_json(attain::load_json_file(b_input));
        const attain::BlockTermResult result =
            attain::block_term_solve(a, attain::BlockSpec{b_blocks}, b_flags.options);
        json blocks = json::array();
        for (const auto& b : result.blocks) blocks.push_back(attain::tensor_to_json(b));
        emit(json{{"blocks", std::move(blocks)},
                  {"report", attain::solve_report_to_json(result.report)}},
             b_out);
        return 0;
    }

    if (experiment->parsed()) {
        attain::ExperimentConfig config =
            attain::experiment_config_from_json(attain::load_json_file(e_config));
        if (!e_out.empty()) config.out_dir = e_out;
        const attain::ExperimentReport report = attain::run_experiment(config);
        std::cout << json{{"kind", attain::experiment_kind_name(report.config.kind)},
                          {"rows", report.rows.size()},
                          {"summary", attain::experiment_report_to_json(report)["summary"]},
                          {"out", config.out_dir}}
                         .dump(2)
                  << '\n';
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << '\n';
        return 1;
    }
}
