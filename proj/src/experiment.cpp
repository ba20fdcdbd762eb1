#include "attain/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include "attain/json_io.hpp"
#include "attain/rng.hpp"
#include "attain/solvers.hpp"
#include "attain/witness_lab.hpp"

namespace attain {

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

// Purpose ids for per-trial substreams.
constexpr std::uint64_t kStreamData = 0;
constexpr std::uint64_t kStreamSolveA = 1;
constexpr std::uint64_t kStreamSolveB = 2;

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string format_cell(const CellValue& v) {
    if (std::holds_alternative<std::int64_t>(v)) return std::to_string(std::get<std::int64_t>(v));
    if (std::holds_alternative<double>(v)) return format_double(std::get<double>(v));
    return std::get<std::string>(v);
}

double median(std::vector<double> xs) {
    if (xs.empty()) return 0.0;
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 == 1 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

Hypermatrix random_tensor(CounterRng rng, const std::vector<std::size_t>& dims, Field field) {
    Hypermatrix a(dims, field);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = field == Field::Real ? Cx(rng.gaussian(), 0.0) : rng.cgaussian();
    }
    return a;
}

/// Planted unit-column decomposition with unit weights.
CpDecomposition random_planted(CounterRng rng, const std::vector<std::size_t>& dims,
                               std::size_t rank, Field field) {
    CpDecomposition d;
    d.field = field;
    d.shape = dims;
    d.rank = rank;
    d.weights.assign(rank, 1.0);
    for (std::size_t n : dims) {
        Eigen::MatrixXcd f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
        for (Eigen::Index c = 0; c < f.cols(); ++c) {
            for (Eigen::Index r = 0; r < f.rows(); ++r) {
                f(r, c) = field == Field::Real ? Cx(rng.gaussian(), 0.0) : rng.cgaussian();
            }
            f.col(c) /= f.col(c).norm();
        }
        d.factors.push_back(std::move(f));
    }
    return d;
}

/// Random block of exact multilinear rank `ranks`: Gaussian core contracted
/// with orthonormal mode frames, scaled to the requested norm.
Hypermatrix random_tucker_block(CounterRng rng, const std::vector<std::size_t>& dims,
                                const std::vector<std::size_t>& ranks, Field field,
                                double target_norm) {
    Hypermatrix block = random_tensor(rng.stream(0), ranks, field);
    for (std::size_t j = 0; j < dims.size(); ++j) {
        Eigen::MatrixXcd q;
        if (field == Field::Real) {
            Eigen::MatrixXd g(static_cast<Eigen::Index>(dims[j]),
                              static_cast<Eigen::Index>(ranks[j]));
            CounterRng s = rng.stream(j + 1);
            for (Eigen::Index c = 0; c < g.cols(); ++c) {
                for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = s.gaussian();
            }
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
            q = (qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols())).cast<Cx>();
        } else {
            Eigen::MatrixXcd g(static_cast<Eigen::Index>(dims[j]),
                               static_cast<Eigen::Index>(ranks[j]));
            CounterRng s = rng.stream(j + 1);
            for (Eigen::Index c = 0; c < g.cols(); ++c) {
                for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = s.cgaussian();
            }
            Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
            q = qr.householderQ() * Eigen::MatrixXcd::Identity(g.rows(), g.cols());
        }
        block = mode_product(block, q, j);
    }
    const double nrm = block.norm();
    if (nrm > 0.0) block *= target_norm / nrm;
    return block;
}

using Cells = std::vector<std::pair<std::string, CellValue>>;

ExperimentRow make(Cells cells) { return ExperimentRow{std::move(cells)}; }

ExperimentRow trial_real_vs_complex(const ExperimentConfig& cfg, int trial) {
    const CounterRng trial_rng = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial));
    const Hypermatrix a = random_tensor(trial_rng.stream(kStreamData), {2, 2, 2}, Field::Real);
    const RankCertificate cert = classify_2x2x2(a);
    std::int64_t delta_sign = 0;
    if (std::abs(cert.delta) > cert.delta_threshold) {
        delta_sign = cert.delta.real() > 0.0 ? 1 : -1;
    }

    SolveOptions ro = cfg.options;
    ro.seed = trial_rng.stream(kStreamSolveA).next_u64();
    const CpResult real = cp_als(a, cfg.rank, ro);

    SolveOptions co = cfg.options;
    co.seed = trial_rng.stream(kStreamSolveB).next_u64();
    const CpResult cplx = cp_als(a.promote(), cfg.rank, co);

    return make({{"trial", std::int64_t(trial)},
                 {"delta_sign", delta_sign},
                 {"real_status", std::string(solve_status_name(real.report.status))},
                 {"real_kappa", real.report.final_kappa()},
                 {"complex_residual", cplx.report.final_residual()},
                 {"seed", std::to_string(ro.seed)},
                 {"delta", cert.delta.real()},
                 {"real_residual", real.report.final_residual()},
                 {"complex_status", std::string(solve_status_name(cplx.report.status))},
                 {"complex_kappa", cplx.report.final_kappa()},
                 {"rank_real", std::int64_t(cert.rank_over_field)},
                 {"rank_complex", std::int64_t(cert.complex_rank)},
                 {"border_rank", std::int64_t(cert.border_rank)}});
}

ExperimentRow trial_witness_limit(const ExperimentConfig& cfg, int trial, std::size_t grid_id) {
    CounterRng data = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial))
                          .stream(kStreamData);
    std::vector<double> f0(2), f1(2);
    double det = 0.0;
    do {
        for (auto& x : f0) x = data.gaussian();
        for (auto& x : f1) x = data.gaussian();
        const double n0 = std::hypot(f0[0], f0[1]);
        const double n1 = std::hypot(f1[0], f1[1]);
        for (auto& x : f0) x /= n0;
        for (auto& x : f1) x /= n1;
        det = f0[0] * f1[1] - f0[1] * f1[0];
    } while (std::abs(det) <= 1e-6);

    const Hypermatrix f0h = Hypermatrix::vector(f0);
    const Hypermatrix f1h = Hypermatrix::vector(f1);
    const Hypermatrix w = dsl_tangent_witness(f0h, f1h);
    const double t = cfg.t_grid[grid_id];
    const Hypermatrix shifted =
        Hypermatrix::vector(std::vector<double>{f0[0] + t * f1[0], f0[1] + t * f1[1]});
    Hypermatrix quotient = outer({shifted, shifted, shifted});
    quotient -= outer({f0h, f0h, f0h});
    quotient *= 1.0 / t;
    Hypermatrix diff = w;
    diff -= quotient;
    const double rel_error = diff.norm() / w.norm();

    return make({{"trial", std::int64_t(trial)},
                 {"t", t},
                 {"rel_error", rel_error},
                 {"ratio", rel_error / t},
                 {"delta", hyperdeterminant(w).real()}});
}

ExperimentRow trial_restart_uniqueness(const ExperimentConfig& cfg, int trial) {
    const CounterRng trial_rng = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial));
    const Hypermatrix a =
        random_tensor(trial_rng.stream(kStreamData), cfg.effective_dims(), Field::Complex);
    SolveOptions o = cfg.options;
    o.seed = trial_rng.stream(kStreamSolveA).next_u64();
    const CpResult result = cp_als(a, cfg.rank, o);
    const auto& finals = result.report.restart_residuals;
    const double lo = *std::min_element(finals.begin(), finals.end());
    const double hi = *std::max_element(finals.begin(), finals.end());
    const double spread = (hi - lo) / std::max(lo, 1e-300);
    return make({{"trial", std::int64_t(trial)},
                 {"best_residual", result.report.final_residual()},
                 {"spread_rel", spread},
                 {"agree", std::int64_t(spread <= 1e-4 ? 1 : 0)},
                 {"status", std::string(solve_status_name(result.report.status))},
                 {"kappa", result.report.final_kappa()},
                 {"seed", std::to_string(o.seed)}});
}

ExperimentRow trial_completion(const ExperimentConfig& cfg, int trial) {
    const CounterRng trial_rng = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial));
    const auto dims = cfg.effective_dims();
    CounterRng data = trial_rng.stream(kStreamData);
    const CpDecomposition planted = random_planted(data.stream(0), dims, cfg.rank, Field::Complex);
    const Hypermatrix a = planted.reconstruct();

    std::size_t total = a.size();
    const std::size_t observed =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.fill * static_cast<double>(total)));
    CounterRng picks = data.stream(1);
    Mask mask;
    for (std::size_t linear : picks.sample_without_replacement(total, observed)) {
        mask.indices.push_back(a.multi_index(linear));
    }

    SolveOptions o1 = cfg.options;
    o1.seed = trial_rng.stream(kStreamSolveA).next_u64();
    const CpResult first = masked_cp_als(a, mask, cfg.rank, o1);
    SolveOptions o2 = cfg.options;
    o2.seed = trial_rng.stream(kStreamSolveB).next_u64();
    const CpResult second = masked_cp_als(a, mask, cfg.rank, o2);

    const Hypermatrix b1 = first.decomposition.reconstruct();
    const Hypermatrix b2 = second.decomposition.reconstruct();
    Hypermatrix full_diff = b1;
    full_diff -= a;
    const double full_error = full_diff.norm() / a.norm();

    // Observed-entry agreement between the two independent fits.
    double num = 0.0;
    double den = 0.0;
    for (const auto& idx : mask.indices) {
        num += std::norm(b1.at(idx) - b2.at(idx));
        den += std::norm(a.at(idx));
    }
    const double ptheta_diff = std::sqrt(num) / (den > 0.0 ? std::sqrt(den) : 1.0);

    const double masked_res = first.report.final_residual();
    const bool recovered = masked_res <= 1e-6 && full_error <= 1e-4;
    return make({{"trial", std::int64_t(trial)},
                 {"masked_residual", masked_res},
                 {"full_error", full_error},
                 {"ptheta_diff", ptheta_diff},
                 {"status", std::string(solve_status_name(first.report.status))},
                 {"kappa", first.report.final_kappa()},
                 {"recovered", std::int64_t(recovered ? 1 : 0)},
                 {"seed", std::to_string(o1.seed)}});
}

ExperimentRow trial_splr(const ExperimentConfig& cfg, int trial) {
    const CounterRng trial_rng = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial));
    const auto dims = cfg.effective_dims();
    CounterRng data = trial_rng.stream(kStreamData);
    const CpDecomposition planted = random_planted(data.stream(0), dims, cfg.rank, Field::Real);
    Hypermatrix a = planted.reconstruct();

    CounterRng spikes = data.stream(1);
    Hypermatrix sparse(dims, Field::Real);
    const auto support = spikes.sample_without_replacement(a.size(), cfg.sparsity);
    for (std::size_t linear : support) {
        const double sign = spikes.uniform() < 0.5 ? -1.0 : 1.0;
        sparse[linear] = Cx(sign * (5.0 + spikes.uniform()), 0.0);
    }
    a += sparse;

    SolveOptions o = cfg.options;
    o.seed = trial_rng.stream(kStreamSolveA).next_u64();
    const SplrResult result = splr_solve(a, cfg.rank, SparsityTarget{cfg.sparsity}, o);

    // Fraction of planted spikes present in the recovered support.
    std::size_t hits = 0;
    for (std::size_t linear : support) {
        if (std::abs(result.sparse[linear]) > 0.0) ++hits;
    }
    const double support_match =
        support.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(support.size());
    const double residual = result.report.final_residual();
    return make({{"trial", std::int64_t(trial)},
                 {"residual", residual},
                 {"support_match", support_match},
                 {"status", std::string(solve_status_name(result.report.status))},
                 {"kappa", result.report.final_kappa()},
                 {"recovered", std::int64_t(residual <= 1e-6 ? 1 : 0)},
                 {"seed", std::to_string(o.seed)}});
}

ExperimentRow trial_block_term(const ExperimentConfig& cfg, int trial) {
    const CounterRng trial_rng = CounterRng(cfg.seed).stream(static_cast<std::uint64_t>(trial));
    const auto dims = cfg.effective_dims();
    const auto blocks = cfg.effective_block_ranks();
    CounterRng data = trial_rng.stream(kStreamData);
    Hypermatrix a(dims, Field::Real);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        // Distinct block scales keep the planted sum well separated.
        const double scale = 1.0 / static_cast<double>(1 << i);
        a += random_tucker_block(data.stream(i), dims, blocks[i], Field::Real, scale);
    }

    BlockSpec spec{blocks};
    SolveOptions o = cfg.options;
    o.seed = trial_rng.stream(kStreamSolveA).next_u64();
    const BlockTermResult result = block_term_solve(a, spec, o);

    bool monotone = true;
    const auto& res = result.report.residuals;
    for (std::size_t i = 1; i < res.size(); ++i) {
        if (res[i] > res[i - 1] + 1e-12) monotone = false;
    }
    const double residual = result.report.final_residual();
    return make({{"trial", std::int64_t(trial)},
                 {"residual", residual},
                 {"monotone", std::int64_t(monotone ? 1 : 0)},
                 {"status", std::string(solve_status_name(result.report.status))},
                 {"kappa", result.report.final_kappa()},
                 {"recovered", std::int64_t(residual <= 1e-4 ? 1 : 0)},
                 {"seed", std::to_string(o.seed)}});
}

int thread_count() {
    const char* env = std::getenv("TENSOR_ATTAIN_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v < 1) return 1;
    return static_cast<int>(std::min<long>(v, 64));
}

double fraction(const std::vector<ExperimentRow>& rows, const std::string& name,
                bool (*pred)(double)) {
    if (rows.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : rows) {
        if (pred(r.number(name))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

std::vector<double> column(const std::vector<ExperimentRow>& rows, const std::string& name) {
    std::vector<double> xs;
    xs.reserve(rows.size());
    for (const auto& r : rows) xs.push_back(r.number(name));
    return xs;
}

}  // namespace

const char* experiment_kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::RealVsComplex2x2x2: return "RealVsComplex2x2x2";
        case ExperimentKind::WitnessLimit: return "WitnessLimit";
        case ExperimentKind::RestartUniqueness: return "RestartUniqueness";
        case ExperimentKind::Completion: return "Completion";
        case ExperimentKind::SPLR: return "SPLR";
        case ExperimentKind::BlockTerm: return "BlockTerm";
    }
    return "RealVsComplex2x2x2";
}

ExperimentKind experiment_kind_from_name(const std::string& s) {
    for (ExperimentKind k :
         {ExperimentKind::RealVsComplex2x2x2, ExperimentKind::WitnessLimit,
          ExperimentKind::RestartUniqueness, ExperimentKind::Completion, ExperimentKind::SPLR,
          ExperimentKind::BlockTerm}) {
        if (s == experiment_kind_name(k)) return k;
    }
    throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

std::string experiment_csv_header(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::RealVsComplex2x2x2:
            return "trial,delta_sign,real_status,real_kappa,complex_residual";
        case ExperimentKind::WitnessLimit:
            return "trial,t,rel_error";
        case ExperimentKind::RestartUniqueness:
            return "trial,best_residual,spread_rel,agree";
        case ExperimentKind::Completion:
            return "trial,masked_residual,full_error,ptheta_diff,status";
        case ExperimentKind::SPLR:
            return "trial,residual,support_match,status";
        case ExperimentKind::BlockTerm:
            return "trial,residual,monotone,status";
    }
    return "";
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw std::invalid_argument("experiment config: trials must be >= 1");
    if (rank < 1) throw std::invalid_argument("experiment config: rank must be >= 1");
    if (options.max_iter < 1 || options.restarts < 1) {
        throw std::invalid_argument("experiment config: solver options out of range");
    }
    if (!(options.tol_rel_change >= 0.0) || !(options.tol_residual >= 0.0) ||
        !(options.kappa_threshold >= 1.0)) {
        throw std::invalid_argument("experiment config: solver options out of range");
    }
    const auto dims = effective_dims();
    for (std::size_t n : dims) {
        if (n == 0) throw std::invalid_argument("experiment config: zero mode extent");
    }
    switch (kind) {
        case ExperimentKind::RealVsComplex2x2x2:
        case ExperimentKind::WitnessLimit:
            if (dims != std::vector<std::size_t>{2, 2, 2}) {
                throw std::invalid_argument("experiment config: this kind is fixed to dims 2,2,2");
            }
            break;
        case ExperimentKind::RestartUniqueness:
        case ExperimentKind::Completion:
        case ExperimentKind::SPLR:
        case ExperimentKind::BlockTerm:
            if (dims.size() < 2) {
                throw std::invalid_argument("experiment config: dims must have order >= 2");
            }
            break;
    }
    if (kind == ExperimentKind::WitnessLimit) {
        if (t_grid.empty()) throw std::invalid_argument("experiment config: empty t grid");
        for (double t : t_grid) {
            if (!(t > 0.0) || !std::isfinite(t)) {
                throw std::invalid_argument("experiment config: t grid entries must be positive");
            }
        }
    }
    if (kind == ExperimentKind::Completion && !(fill > 0.0 && fill <= 1.0)) {
        throw std::invalid_argument("experiment config: fill must lie in (0, 1]");
    }
    if (kind == ExperimentKind::SPLR) {
        std::size_t total = 1;
        for (std::size_t n : dims) total *= n;
        if (sparsity > total) {
            throw std::invalid_argument("experiment config: sparsity exceeds tensor size");
        }
    }
    if (kind == ExperimentKind::BlockTerm) {
        BlockSpec spec{effective_block_ranks()};
        spec.validate(dims);
    }
}

std::vector<std::size_t> ExperimentConfig::effective_dims() const {
    if (!dims.empty()) return dims;
    switch (kind) {
        case ExperimentKind::RealVsComplex2x2x2:
        case ExperimentKind::WitnessLimit:
            return {2, 2, 2};
        case ExperimentKind::RestartUniqueness:
            return {3, 3, 3};
        case ExperimentKind::Completion:
        case ExperimentKind::SPLR:
            return {4, 4, 4};
        case ExperimentKind::BlockTerm:
            return {5, 5, 5};
    }
    return {2, 2, 2};
}

std::vector<std::vector<std::size_t>> ExperimentConfig::effective_block_ranks() const {
    if (!block_ranks.empty()) return block_ranks;
    const auto dims = effective_dims();
    std::vector<std::size_t> big(dims.size()), small(dims.size());
    for (std::size_t j = 0; j < dims.size(); ++j) {
        big[j] = std::min<std::size_t>(2, dims[j]);
        small[j] = 1;
    }
    return {big, small};
}

const CellValue& ExperimentRow::at(const std::string& name) const {
    for (const auto& [n, v] : cells) {
        if (n == name) return v;
    }
    throw std::out_of_range("experiment row has no cell '" + name + "'");
}

double ExperimentRow::number(const std::string& name) const {
    const CellValue& v = at(name);
    if (std::holds_alternative<std::int64_t>(v)) {
        return static_cast<double>(std::get<std::int64_t>(v));
    }
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    throw std::invalid_argument("experiment cell '" + name + "' is not numeric");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();

    const std::size_t rows_per_trial =
        config.kind == ExperimentKind::WitnessLimit ? config.t_grid.size() : 1;
    const std::size_t total_rows = static_cast<std::size_t>(config.trials) * rows_per_trial;
    std::vector<ExperimentRow> rows(total_rows);

    auto fill_row = [&](std::size_t i) {
        const int trial = static_cast<int>(i / rows_per_trial);
        switch (config.kind) {
            case ExperimentKind::RealVsComplex2x2x2:
                rows[i] = trial_real_vs_complex(config, trial);
                break;
            case ExperimentKind::WitnessLimit:
                rows[i] = trial_witness_limit(config, trial, i % rows_per_trial);
                break;
            case ExperimentKind::RestartUniqueness:
                rows[i] = trial_restart_uniqueness(config, trial);
                break;
            case ExperimentKind::Completion:
                rows[i] = trial_completion(config, trial);
                break;
            case ExperimentKind::SPLR:
                rows[i] = trial_splr(config, trial);
                break;
            case ExperimentKind::BlockTerm:
                rows[i] = trial_block_term(config, trial);
                break;
        }
    };

    const int threads = std::min<int>(thread_count(), static_cast<int>(total_rows));
    if (threads <= 1) {
        for (std::size_t i = 0; i < total_rows; ++i) fill_row(i);
    } else {
        // Static block partition; every row is a pure function of (config,
        // row index), so the thread count cannot change the output.
        std::vector<std::future<void>> tasks;
        const std::size_t chunk = (total_rows + threads - 1) / static_cast<std::size_t>(threads);
        for (int w = 0; w < threads; ++w) {
            const std::size_t begin = static_cast<std::size_t>(w) * chunk;
            const std::size_t end = std::min(total_rows, begin + chunk);
            if (begin >= end) break;
            tasks.push_back(std::async(std::launch::async, [&, begin, end]() {
                for (std::size_t i = begin; i < end; ++i) fill_row(i);
            }));
        }
        for (auto& t : tasks) t.get();
    }

    ExperimentReport report;
    report.artifact_version = kArtifactVersion;
    report.config = config;
    report.csv_header = experiment_csv_header(config.kind);
    {
        std::stringstream ss(report.csv_header);
        std::string col;
        while (std::getline(ss, col, ',')) report.csv_columns.push_back(col);
    }
    report.rows = std::move(rows);

    auto& summary = report.summary;
    const auto& rws = report.rows;
    switch (config.kind) {
        case ExperimentKind::RealVsComplex2x2x2: {
            std::size_t neg = 0, neg_real_div = 0, neg_cplx_ok = 0;
            for (const auto& r : rws) {
                if (r.number("delta_sign") >= 0.0) continue;
                ++neg;
                if (std::get<std::string>(r.at("real_status")) == "diverging") ++neg_real_div;
                if (r.number("complex_residual") <= 1e-6) ++neg_cplx_ok;
            }
            const double dneg = neg > 0 ? static_cast<double>(neg) : 1.0;
            summary.emplace_back("fraction_delta_negative",
                                 static_cast<double>(neg) / static_cast<double>(rws.size()));
            summary.emplace_back("fraction_negative_real_diverging",
                                 static_cast<double>(neg_real_div) / dneg);
            summary.emplace_back("fraction_negative_complex_converged",
                                 static_cast<double>(neg_cplx_ok) / dneg);
            summary.emplace_back("median_real_kappa", median(column(rws, "real_kappa")));
            break;
        }
        case ExperimentKind::WitnessLimit: {
            summary.emplace_back("max_ratio",
                                 *std::max_element(column(rws, "ratio").begin(),
                                                   column(rws, "ratio").end()));
            summary.emplace_back("fraction_within_2t",
                                 fraction(rws, "ratio", [](double x) { return x <= 2.0; }));
            break;
        }
        case ExperimentKind::RestartUniqueness: {
            summary.emplace_back("fraction_agree",
                                 fraction(rws, "agree", [](double x) { return x >= 1.0; }));
            summary.emplace_back("median_spread_rel", median(column(rws, "spread_rel")));
            summary.emplace_back("median_best_residual", median(column(rws, "best_residual")));
            break;
        }
        case ExperimentKind::Completion: {
            summary.emplace_back("fraction_recovered",
                                 fraction(rws, "recovered", [](double x) { return x >= 1.0; }));
            summary.emplace_back("fraction_ptheta_consistent",
                                 fraction(rws, "ptheta_diff", [](double x) { return x <= 1e-6; }));
            summary.emplace_back("median_full_error", median(column(rws, "full_error")));
            break;
        }
        case ExperimentKind::SPLR: {
            summary.emplace_back("fraction_recovered",
                                 fraction(rws, "recovered", [](double x) { return x >= 1.0; }));
            summary.emplace_back("median_residual", median(column(rws, "residual")));
            summary.emplace_back("median_support_match", median(column(rws, "support_match")));
            break;
        }
        case ExperimentKind::BlockTerm: {
            summary.emplace_back("fraction_recovered",
                                 fraction(rws, "recovered", [](double x) { return x >= 1.0; }));
            summary.emplace_back("fraction_monotone",
                                 fraction(rws, "monotone", [](double x) { return x >= 1.0; }));
            summary.emplace_back("median_residual", median(column(rws, "residual")));
            break;
        }
    }

    if (!config.out_dir.empty()) write_experiment_files(report, config.out_dir);
    return report;
}

std::string experiment_csv(const ExperimentReport& report) {
    std::string out = report.csv_header;
    out += '\n';
    for (const auto& row : report.rows) {
        for (std::size_t c = 0; c < report.csv_columns.size(); ++c) {
            if (c > 0) out += ',';
            out += format_cell(row.at(report.csv_columns[c]));
        }
        out += '\n';
    }
    return out;
}

void write_experiment_files(const ExperimentReport& report, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir);
    const std::string base = experiment_kind_name(report.config.kind);

    const fs::path csv_path = fs::path(dir) / (base + ".csv");
    {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path.string());
        out << experiment_csv(report);
    }

    nlohmann::json j = experiment_report_to_json(report);
    {
        char stamp[32];
        const std::time_t now = std::time(nullptr);
        std::tm tm_utc{};
        gmtime_r(&now, &tm_utc);
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
        j["generated_at"] = stamp;
    }
    const fs::path json_path = fs::path(dir) / (base + ".json");
    save_json_file(json_path.string(), j);
}

}  // namespace attain
