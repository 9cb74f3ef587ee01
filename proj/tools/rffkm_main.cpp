// Command line front end: run the RFF kernel power k-means solvers over seed
// batches, sweep RFF dimensions, and probe raw RFF approximation error.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rffkm/features.hpp"
#include "rffkm/io.hpp"
#include "rffkm/kpkm.hpp"
#include "rffkm/metrics.hpp"
#include "rffkm/mkpkm.hpp"
#include "rffkm/powermeans.hpp"

using namespace rffkm;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSolverFailure = 1;
constexpr int kExitConfigError = 2;

struct CommonOptions {
    int k = 2;
    int dim = 0;  // 0 -> recommended_dim(k)
    double sigma = 1e3;
    double s0 = 15.0;  // magnitude; the solver uses s0 = -|s0|
    double gamma = 1.04;
    int cadence = 3;
    double s_floor = 1e6;  // magnitude
    double tol = 1e-6;
    int max_iter = 300;
    std::uint64_t seed_base = 0;
    int seeds = 20;
    int jobs = 1;
    std::string out_dir;
};

std::string default_out_dir() {
    const char* env = std::getenv("RFFKM_OUT_DIR");
    return env ? env : "runs";
}

void add_common_flags(CLI::App* cmd, CommonOptions& opts, int default_cadence) {
    opts.cadence = default_cadence;
    opts.out_dir = default_out_dir();
    cmd->add_option("--k", opts.k, "number of clusters")->required();
    cmd->add_option("--dim", opts.dim,
                    "RFF dimension D (0 = ceil(4 ln(2k)^3))");
    cmd->add_option("--sigma", opts.sigma, "Gaussian kernel bandwidth");
    cmd->add_option(
        "--s0", opts.s0,
        "initial power-mean exponent magnitude; the solver runs with s0 = -|s0|");
    cmd->add_option("--gamma", opts.gamma, "annealing multiplier (>= 1)");
    cmd->add_option("--cadence", opts.cadence,
                    "iterations between annealing steps");
    cmd->add_option("--s-floor", opts.s_floor,
                    "annealing floor magnitude (s never drops below -|floor|)");
    cmd->add_option("--tol", opts.tol, "relative convergence tolerance");
    cmd->add_option("--max-iter", opts.max_iter, "iteration cap");
    cmd->add_option("--seed-base", opts.seed_base, "first seed");
    cmd->add_option("--seeds", opts.seeds, "number of consecutive seeds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", opts.jobs, "parallel seed jobs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", opts.out_dir, "output directory")
        ->envname("RFFKM_OUT_DIR");
}

PowerSchedule schedule_from(const CommonOptions& opts) {
    return PowerSchedule{-std::abs(opts.s0), opts.gamma, opts.cadence,
                         -std::abs(opts.s_floor)};
}

std::string iso_now() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&now));
    return buf;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / (v.size() - 1));
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Runs `count` seed jobs with at most `jobs` in flight; results land in seed
// order so reports are deterministic.
template <typename Fn>
auto run_seeded(int count, std::uint64_t base, int jobs, Fn&& fn) {
    using Result = decltype(fn(std::uint64_t{}));
    std::vector<Result> results(count);
    jobs = std::max(1, jobs);
    for (int start = 0; start < count; start += jobs) {
        const int end = std::min(count, start + jobs);
        std::vector<std::future<Result>> batch;
        for (int i = start; i < end; ++i) {
            batch.push_back(std::async(std::launch::async, fn, base + i));
        }
        for (int i = start; i < end; ++i) {
            results[i] = batch[i - start].get();
        }
    }
    return results;
}

struct SeedOutcome {
    RunRecord record;
    std::vector<double> alpha;  // empty for single view
};

void append_metrics(RunRecord& record, const std::vector<int>& assignments,
                    const std::vector<int>& labels, bool has_labels) {
    if (!has_labels) return;
    record.metrics["acc"] = accuracy(assignments, labels);
    record.metrics["nmi"] = nmi(assignments, labels);
    record.metrics["purity"] = purity(assignments, labels);
}

void print_summary_header(std::ostream& out, bool with_alpha, int n_views) {
    out << "dataset\tsolver\tlambda\tseeds\tacc_mean\tacc_std\tnmi_mean"
        << "\tnmi_std\tpurity_mean\tpurity_std";
    if (with_alpha) {
        for (int l = 1; l <= n_views; ++l) out << "\talpha_" << l << "_mean";
    }
    out << "\n";
}

void print_summary_row(std::ostream& out, const std::string& dataset,
                       const std::string& solver, double lambda,
                       const std::vector<SeedOutcome>& outcomes,
                       bool with_alpha, int n_views) {
    std::vector<double> acc, nm, pur;
    for (const auto& o : outcomes) {
        if (o.record.metrics.count("acc")) {
            acc.push_back(o.record.metrics.at("acc"));
            nm.push_back(o.record.metrics.at("nmi"));
            pur.push_back(o.record.metrics.at("purity"));
        }
    }
    out << dataset << "\t" << solver << "\t" << fmt(lambda) << "\t"
        << outcomes.size();
    if (acc.empty()) {
        out << "\tnan\tnan\tnan\tnan\tnan\tnan";
    } else {
        out << "\t" << fmt(mean_of(acc)) << "\t" << fmt(std_of(acc)) << "\t"
            << fmt(mean_of(nm)) << "\t" << fmt(std_of(nm)) << "\t"
            << fmt(mean_of(pur)) << "\t" << fmt(std_of(pur));
    }
    if (with_alpha) {
        for (int l = 0; l < n_views; ++l) {
            std::vector<double> a;
            for (const auto& o : outcomes) a.push_back(o.alpha[l]);
            out << "\t" << fmt(mean_of(a));
        }
    }
    out << "\n";
}

int cmd_cluster_single(const CommonOptions& opts, const std::string& data_path,
                       bool has_header,
                       const std::optional<std::string>& label_col) {
    const CsvData data = load_csv(data_path, has_header, label_col);
    const std::string dataset = fs::path(data_path).stem().string();
    const int dim = opts.dim > 0 ? opts.dim : recommended_dim(opts.k);

    auto run_one = [&](std::uint64_t seed) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::string started = iso_now();
        KpkmOptions kopts;
        kopts.k = opts.k;
        kopts.rff_dim = dim;
        kopts.kernel.bandwidth = opts.sigma;
        kopts.schedule = schedule_from(opts);
        kopts.seed = seed;
        kopts.tol = opts.tol;
        kopts.max_iter = opts.max_iter;
        const KpkmResult fit = fit_kpkm(data.X, kopts);
        const auto t1 = std::chrono::steady_clock::now();

        SeedOutcome outcome;
        RunRecord& record = outcome.record;
        record.solver = "rff-kpkm";
        record.dataset = dataset;
        record.seed = seed;
        record.config = {{"k", opts.k},          {"dim", dim},
                         {"sigma", opts.sigma},  {"s0", -std::abs(opts.s0)},
                         {"gamma", opts.gamma},  {"cadence", opts.cadence},
                         {"tol", opts.tol},      {"max_iter", opts.max_iter}};
        for (const auto& point : fit.trace) {
            record.trace.push_back({point.iteration, point.s, point.objective, {}});
        }
        record.assignments = fit.assignments;
        append_metrics(record, fit.assignments, data.labels, data.has_labels);
        record.timing.started_at = started;
        record.timing.finished_at = iso_now();
        record.timing.seconds["fit"] =
            std::chrono::duration<double>(t1 - t0).count();
        return outcome;
    };

    const auto outcomes =
        run_seeded(opts.seeds, opts.seed_base, opts.jobs, run_one);
    for (const auto& o : outcomes) write_run(o.record, opts.out_dir);

    fs::create_directories(opts.out_dir);
    std::ofstream summary(fs::path(opts.out_dir) / "summary.tsv");
    print_summary_header(summary, false, 0);
    print_summary_row(summary, dataset, "rff-kpkm", 0.0, outcomes, false, 0);
    print_summary_header(std::cout, false, 0);
    print_summary_row(std::cout, dataset, "rff-kpkm", 0.0, outcomes, false, 0);
    return kExitOk;
}

int cmd_cluster_multi(const CommonOptions& opts, const std::string& manifest,
                      double fuzziness, std::vector<double> lambdas) {
    const LoadedDataset data = load_manifest(manifest, opts.sigma);
    const int n_views = static_cast<int>(data.views.size());
    if (lambdas.empty()) lambdas.push_back(1.0);

    std::ostringstream rows;
    print_summary_header(rows, true, n_views);

    for (double lambda : lambdas) {
        auto run_one = [&, lambda](std::uint64_t seed) {
            const auto t0 = std::chrono::steady_clock::now();
            const std::string started = iso_now();
            MkpkmOptions mopts;
            mopts.k = opts.k;
            const int dim = opts.dim > 0 ? opts.dim : recommended_dim(opts.k);
            mopts.rff_dims.assign(n_views, dim);
            mopts.fuzziness = fuzziness;
            mopts.lambda = lambda;
            mopts.schedule = schedule_from(opts);
            mopts.seed = seed;
            mopts.tol = opts.tol;
            mopts.max_iter = opts.max_iter;
            std::vector<KernelSpec> specs;
            for (double s : data.sigmas) specs.push_back(KernelSpec{s});
            const MkpkmResult fit = fit_mkpkm(data.views, specs, mopts);
            const auto t1 = std::chrono::steady_clock::now();

            SeedOutcome outcome;
            RunRecord& record = outcome.record;
            record.solver = "ip-rff-mkpkm";
            record.dataset = data.name;
            record.seed = seed;
            record.config = {{"k", opts.k},
                             {"dim", dim},
                             {"sigma", opts.sigma},
                             {"s0", -std::abs(opts.s0)},
                             {"gamma", opts.gamma},
                             {"cadence", opts.cadence},
                             {"m", fuzziness},
                             {"lambda", lambda},
                             {"tol", opts.tol},
                             {"max_iter", opts.max_iter},
                             {"views", n_views}};
            for (const auto& point : fit.trace) {
                std::vector<double> alphas(point.view_weights.data(),
                                           point.view_weights.data() +
                                               point.view_weights.size());
                record.trace.push_back(
                    {point.iteration, point.s, point.objective, alphas});
            }
            record.assignments = fit.assignments;
            append_metrics(record, fit.assignments, data.labels,
                           data.has_labels);
            record.timing.started_at = started;
            record.timing.finished_at = iso_now();
            record.timing.seconds["fit"] =
                std::chrono::duration<double>(t1 - t0).count();
            outcome.alpha.assign(
                fit.state.view_weights.data(),
                fit.state.view_weights.data() + fit.state.view_weights.size());
            return outcome;
        };

        auto outcomes =
            run_seeded(opts.seeds, opts.seed_base, opts.jobs, run_one);
        // One record set per lambda; disambiguate the dataset stem.
        for (auto& o : outcomes) {
            o.record.dataset = data.name + "_lambda" + fmt(lambda);
            write_run(o.record, opts.out_dir);
        }
        print_summary_row(rows, data.name, "ip-rff-mkpkm", lambda, outcomes,
                          true, n_views);
    }

    fs::create_directories(opts.out_dir);
    std::ofstream file(fs::path(opts.out_dir) / "summary.tsv");
    file << rows.str();
    std::cout << rows.str();
    return kExitOk;
}

int cmd_dim_sweep(const CommonOptions& opts, const std::string& data_path,
                  bool has_header, const std::optional<std::string>& label_col,
                  std::vector<int> dims) {
    const CsvData data = load_csv(data_path, has_header, label_col);
    if (!data.has_labels) {
        throw InvalidInput("dim-sweep needs a labeled dataset to score ACC");
    }
    if (dims.empty()) {
        for (int d = 5; d <= 100; d += 5) dims.push_back(d);
    }
    const std::string dataset = fs::path(data_path).stem().string();

    fs::create_directories(opts.out_dir);
    std::ostringstream rows;
    rows << "D\tacc_mean\tacc_std\n";
    for (int dim : dims) {
        auto run_one = [&, dim](std::uint64_t seed) {
            KpkmOptions kopts;
            kopts.k = opts.k;
            kopts.rff_dim = dim;
            kopts.kernel.bandwidth = opts.sigma;
            kopts.schedule = schedule_from(opts);
            kopts.seed = seed;
            kopts.tol = opts.tol;
            kopts.max_iter = opts.max_iter;
            const KpkmResult fit = fit_kpkm(data.X, kopts);
            return accuracy(fit.assignments, data.labels);
        };
        const auto accs =
            run_seeded(opts.seeds, opts.seed_base, opts.jobs, run_one);
        rows << dim << "\t" << fmt(mean_of(accs)) << "\t" << fmt(std_of(accs))
             << "\n";
    }
    std::ofstream file(fs::path(opts.out_dir) / (dataset + "_dim_sweep.tsv"));
    file << rows.str();
    std::cout << rows.str();
    return kExitOk;
}

int cmd_rff_probe(int input_dim, double sigma, std::vector<int> dims,
                  int pairs, std::uint64_t seed, const std::string& out_dir) {
    if (dims.empty()) dims = {64, 256, 1024, 4096};
    const KernelSpec spec{sigma};

    // Point pairs inside the unit ball.
    std::mt19937_64 eng(mix_seed(seed, 0xabcdu));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Eigen::MatrixXd points(2 * pairs, input_dim);
    for (int i = 0; i < points.rows(); ++i) {
        for (int j = 0; j < input_dim; ++j) points(i, j) = unit(eng);
        const double norm = points.row(i).norm();
        if (norm > 1.0) points.row(i) /= norm;
    }

    std::ostringstream rows;
    rows << "D\tmax_abs_error\tmax_rel_error\n";
    for (int dim : dims) {
        const RffMap map =
            sample_rff(input_dim, dim, spec, mix_seed(seed, dim));
        const Eigen::MatrixXd phi = map_features(points, map);
        double max_abs = 0.0, max_rel = 0.0;
        for (int p = 0; p < pairs; ++p) {
            const int i = 2 * p, j = 2 * p + 1;
            const double approx = phi.row(i).dot(phi.row(j));
            const double exact = gaussian_kernel(points.row(i), points.row(j), spec);
            const double err = std::abs(approx - exact);
            max_abs = std::max(max_abs, err);
            max_rel = std::max(max_rel, err / exact);
        }
        rows << dim << "\t" << fmt(max_abs) << "\t" << fmt(max_rel) << "\n";
    }
    fs::create_directories(out_dir);
    std::ofstream file(fs::path(out_dir) / "rff_probe.tsv");
    file << rows.str();
    std::cout << rows.str();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "rffkm: scalable kernel power k-means with random Fourier features"};
    app.require_subcommand(1);

    CommonOptions single_opts, multi_opts, sweep_opts;
    std::string data_path, manifest_path, sweep_data;
    bool has_header = false, sweep_header = false;
    std::string label_col, sweep_label_col;
    double fuzziness = 2.0;
    std::vector<double> lambdas;
    std::vector<int> sweep_dims;

    auto* single = app.add_subcommand(
        "cluster-single", "run RFF-KPKM over a batch of seeds");
    single->add_option("--data", data_path, "feature CSV")->required();
    single->add_flag("--header", has_header, "CSV has a header row");
    single->add_option("--label-col", label_col,
                       "label column (name or 0-based index)");
    add_common_flags(single, single_opts, 3);

    auto* multi = app.add_subcommand(
        "cluster-multi", "run IP-RFF-MKPKM on a multi-view manifest");
    multi->add_option("--manifest", manifest_path, "dataset manifest JSON")
        ->required();
    multi->add_option("--m", fuzziness, "possibilistic fuzziness exponent");
    multi->add_option("--lambda", lambdas,
                      "entropy regularization; repeat for a sweep");
    add_common_flags(multi, multi_opts, 2);

    auto* sweep = app.add_subcommand(
        "dim-sweep", "mean ACC as a function of the RFF dimension");
    sweep->add_option("--data", sweep_data, "labeled feature CSV")->required();
    sweep->add_flag("--header", sweep_header, "CSV has a header row");
    sweep->add_option("--label-col", sweep_label_col,
                      "label column (name or 0-based index)")
        ->required();
    sweep->add_option("--dims", sweep_dims, "dimensions (default 5..100 by 5)");
    add_common_flags(sweep, sweep_opts, 3);

    auto* probe = app.add_subcommand(
        "rff-probe", "kernel-vs-RFF approximation error per dimension");
    int probe_dim = 5, probe_pairs = 100;
    double probe_sigma = 1.0;
    std::uint64_t probe_seed = 0;
    std::vector<int> probe_dims;
    std::string probe_out = default_out_dir();
    probe->add_option("--input-dim", probe_dim, "ambient dimension");
    probe->add_option("--sigma", probe_sigma, "kernel bandwidth");
    probe->add_option("--dims", probe_dims, "RFF dimensions to probe");
    probe->add_option("--pairs", probe_pairs, "number of point pairs");
    probe->add_option("--seed", probe_seed, "sampling seed");
    probe->add_option("--out", probe_out, "output directory")
        ->envname("RFFKM_OUT_DIR");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfigError;
    }

    try {
        if (single->parsed()) {
            return cmd_cluster_single(
                single_opts, data_path, has_header,
                label_col.empty() ? std::nullopt
                                  : std::optional<std::string>(label_col));
        }
        if (multi->parsed()) {
            return cmd_cluster_multi(multi_opts, manifest_path, fuzziness,
                                     lambdas);
        }
        if (sweep->parsed()) {
            return cmd_dim_sweep(
                sweep_opts, sweep_data, sweep_header,
                std::optional<std::string>(sweep_label_col), sweep_dims);
        }
        if (probe->parsed()) {
            return cmd_rff_probe(probe_dim, probe_sigma, probe_dims,
                                 probe_pairs, probe_seed, probe_out);
        }
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolverFailure;
    }
    return kExitConfigError;
}
