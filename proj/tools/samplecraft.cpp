// Command-line front end: train, generate, analyze, baseline, gradcheck.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "samplecraft/analysis.hpp"
#include "samplecraft/diff.hpp"
#include "samplecraft/io.hpp"
#include "samplecraft/program.hpp"
#include "samplecraft/samplers.hpp"
#include "samplecraft/targets.hpp"
#include "samplecraft/training.hpp"

namespace sc = samplecraft;

namespace {

// "-" writes to stdout, anything else to the named file.
void emit_points(const std::string& out, const sc::PointSet& points) {
    if (out == "-")
        sc::write_points_csv(std::cout, points);
    else
        sc::write_points_csv(out, points);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw sc::IoError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// foo.csv -> foo_3.csv; extensionless paths get the suffix appended.
std::string numbered_path(const std::string& path, int index) {
    auto slash = path.find_last_of('/');
    auto dot = path.find_last_of('.');
    std::string suffix = "_" + std::to_string(index);
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

struct TrainArgs {
    sc::TrainConfig cfg;
    std::string program_file;
    std::string out = "filter.json";
    std::string history_out;
};

int run_train(const TrainArgs& a) {
    sc::TrainConfig cfg = a.cfg;
    if (!a.program_file.empty()) cfg.program = read_text_file(a.program_file);
    if (a.out == "-")
        throw sc::UsageError("checkpoints need a file path; '-' is not supported for train --out");

    sc::TrainResult result = sc::train(cfg);

    sc::CheckpointMeta meta;
    meta.train_N = cfg.N;
    meta.program = sc::print_program(sc::parse_program(cfg.program, cfg.n));
    meta.seed = cfg.seed;
    meta.batch_index = static_cast<long>(result.history.size());
    sc::save_checkpoint(a.out, result.stack, meta);

    if (!a.history_out.empty()) {
        if (a.history_out == "-")
            sc::write_loss_history_csv(std::cout, result.history);
        else
            sc::write_loss_history_csv(a.history_out, result.history);
    }

    double final_loss = result.history.empty() ? 0.0 : result.history.back().loss;
    std::cout << "steps=" << result.history.size() << " final_loss=" << sc::format_double(final_loss)
              << " checkpoint=" << a.out << "\n";
    if (result.diverged) {
        std::cerr << "training diverged at step " << result.diverged_at
                  << "; kept the last checkpoint with a finite loss\n";
        return 2;
    }
    return 0;
}

struct GenerateArgs {
    std::string filter;
    long N = 0; // 0 = the checkpoint's training count
    uint64_t seed = 0;
    std::string init = "random";
    std::string out = "-";
    int trials = 1;
};

int run_generate(const GenerateArgs& a) {
    if (a.trials < 1) throw sc::UsageError("--trials must be >= 1");
    if (a.trials > 1 && a.out == "-")
        throw sc::UsageError("--trials > 1 needs a file path for --out (files are numbered)");

    sc::CheckpointMeta meta;
    sc::FilterStack stack = sc::load_checkpoint(a.filter, &meta);
    long N = a.N > 0 ? a.N : meta.train_N;
    if (N < 1) throw sc::UsageError("--points must be >= 1");
    sc::SamplerFn init = sc::sampler_by_name(a.init);

    for (int t = 0; t < a.trials; ++t) {
        sc::PointSet points = sc::apply_stack(init(N, stack.dim(), a.seed + t), stack);
        emit_points(a.trials == 1 ? a.out : numbered_path(a.out, t), points);
    }
    return 0;
}

struct AnalyzeArgs {
    std::string points_file;
    std::string filter;
    std::string sampler;
    std::string init = "random";
    std::string spectrum_out;
    std::string radial_out;
    std::string pcf_out;
    bool disc = false;
    int trials = 16;
    int K = 0;
    int radial_bins = 32;
    long N = 0; // 0 = 1024, or the checkpoint's training count
    int n = 2;
    uint64_t seed = 0;
};

int run_analyze(const AnalyzeArgs& a) {
    int sources = !a.points_file.empty() + !a.filter.empty() + !a.sampler.empty();
    if (sources != 1)
        throw sc::UsageError("pass exactly one of --points, --filter or --sampler");
    if (a.trials < 1) throw sc::UsageError("--trials must be >= 1");

    std::string label;
    sc::SamplerFn source;
    long N = a.N;
    int n = a.n;
    int trials = a.trials;
    if (!a.points_file.empty()) {
        sc::PointSet loaded = sc::read_points_csv(a.points_file);
        N = loaded.count();
        n = loaded.dim();
        trials = 1; // a file is a single realization
        label = "points:" + a.points_file;
        source = [loaded](long, int, uint64_t) { return loaded; };
    } else if (!a.filter.empty()) {
        sc::CheckpointMeta meta;
        auto stack = std::make_shared<sc::FilterStack>(sc::load_checkpoint(a.filter, &meta));
        sc::SamplerFn init = sc::sampler_by_name(a.init);
        n = stack->dim();
        if (N == 0) N = meta.train_N;
        label = "filter:" + a.filter;
        source = [stack, init](long count, int dim, uint64_t s) {
            return sc::apply_stack(init(count, dim, s), *stack);
        };
    } else {
        if (N == 0) N = 1024;
        label = "sampler:" + a.sampler;
        source = sc::sampler_by_name(a.sampler);
    }
    if (N < 1) throw sc::UsageError("--count must be >= 1");

    int K = a.K > 0 ? a.K : sc::default_K(N);
    std::cout << "source=" << label << " N=" << N << " n=" << n << " trials=" << trials
              << " K=" << K << "\n";

    if (!a.spectrum_out.empty() || !a.radial_out.empty()) {
        sc::Spectrum spec = sc::averaged_periodogram(source, trials, N, n, K, a.seed);
        if (!a.spectrum_out.empty()) {
            if (a.spectrum_out == "-")
                sc::write_pgm8(std::cout, sc::spectrum_image_pixels(spec));
            else
                sc::export_spectrum_image(spec, a.spectrum_out);
        }
        if (!a.radial_out.empty()) {
            sc::RadialProfile radial = sc::radial_stats(spec, a.radial_bins);
            if (a.radial_out == "-")
                sc::write_radial_profile_csv(std::cout, radial);
            else
                sc::write_radial_profile_csv(a.radial_out, radial);
        }
    }

    if (!a.pcf_out.empty()) {
        double r_max = sc::default_pcf_rmax(n);
        sc::PcfHistogram pcf = sc::measure_target_pcf(source, N, n, trials, 128, r_max,
                                                      r_max / 64.0, a.seed);
        if (a.pcf_out == "-")
            sc::write_pcf_csv(std::cout, pcf);
        else
            sc::write_pcf_csv(a.pcf_out, pcf);
    }

    if (a.disc) {
        std::vector<sc::GaussianTask> tasks = sc::sample_gaussian_tasks(64, n, sc::kAnalysisTaskSeed);
        std::vector<sc::PointSet> batch;
        batch.reserve(trials);
        for (int t = 0; t < trials; ++t) batch.push_back(source(N, n, a.seed + t));
        std::cout << "generalized_discrepancy=" << sc::format_double(sc::discrepancy_loss(batch, tasks))
                  << "\n";
        std::cout << "star_discrepancy=" << sc::format_double(sc::star_discrepancy_estimate(batch[0], 512))
                  << "\n";
    }
    return 0;
}

struct BaselineArgs {
    std::string sampler = "random";
    long N = 256;
    int n = 2;
    uint64_t seed = 0;
    std::string out = "-";
};

int run_baseline(const BaselineArgs& a) {
    emit_points(a.out, sc::sampler_by_name(a.sampler)(a.N, a.n, a.seed));
    return 0;
}

struct GradcheckArgs {
    std::string program = "bn(s) + pcf(s,random) + aniso(s) + disc(s) + task(s,checker)";
    int n = 2;
    long N = 16;
    int m = 4;
    int n_s = 2;
    int batch = 2;
    double sigma = 0.4;
    double sigma_n = 0.04;
    double gamma = 1.0;
    int K = 0;
    uint64_t seed = 0;
    double h = 1e-5;
    double tol = 1e-3;
};

int run_gradcheck(const GradcheckArgs& a) {
    sc::ProgramAst ast = sc::parse_program(a.program, a.n);
    sc::FilterStack stack = sc::make_filter_stack(a.m, a.n, a.n_s, a.sigma, a.sigma_n, a.gamma);
    stack.free_dims = sc::free_dims_mask(ast, a.n);

    // Small random weights so the nonlinear paths (denominator included)
    // carry gradient, not just the neighborhood averaging.
    sc::Xoshiro256pp rng(sc::mix_seed(a.seed, 0x7E7AULL));
    for (int l = 0; l < stack.n_s; ++l)
        for (int k = 0; k < stack.basis.m; ++k)
            stack.theta(l, k) = (sc::uniform01(rng) * 2.0 - 1.0) * 0.05;

    sc::LossContext ctx;
    ctx.K = a.K;
    sc::prepare_targets(ast, a.n, a.N, ctx);
    sc::draw_step_randomness(ast, a.n, sc::mix_seed(a.seed, sc::kStepSeedStream, 0), ctx);

    std::vector<sc::PointSet> batch;
    batch.reserve(a.batch);
    for (int b = 0; b < a.batch; ++b)
        batch.push_back(sc::random_points(a.N, a.n, sc::mix_seed(a.seed, 0, b)));

    sc::GradReport report = sc::finite_difference_check(batch, stack, ast, ctx, a.h);
    std::cout << "parameters=" << stack.theta.size()
              << " max_rel=" << sc::format_double(report.max_rel)
              << " max_abs=" << sc::format_double(report.max_abs)
              << " tol=" << sc::format_double(a.tol) << "\n";
    if (!(report.max_rel < a.tol)) {
        std::cerr << "gradcheck failed: max relative error " << sc::format_double(report.max_rel)
                  << " is not below " << sc::format_double(a.tol) << "\n";
        return 2;
    }
    std::cout << "gradcheck passed\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"samplecraft: learned toroidal point filters and sample pattern analysis"};
    app.require_subcommand(1);

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "optimize a filter stack against a loss program");
    CLI::Option* popt =
        train->add_option("--program", train_args.cfg.program, "loss program text (default: bn(s))");
    train->add_option("--program-file", train_args.program_file, "read the loss program from a file")
        ->excludes(popt);
    train->add_option("--dims", train_args.cfg.n, "point dimension");
    train->add_option("--points", train_args.cfg.N, "points per training set");
    train->add_option("--iterations", train_args.cfg.n_s, "filter iterations");
    train->add_option("--rbf-count", train_args.cfg.m, "RBFs per iteration");
    train->add_option("--receptive", train_args.cfg.sigma, "receptive field radius");
    train->add_option("--kernel-sigma", train_args.cfg.sigma_n, "RBF width");
    train->add_option("--gamma", train_args.cfg.gamma, "per-iteration receptive field shrink");
    train->add_option("--batch", train_args.cfg.batch, "point sets per step");
    train->add_option("--batches", train_args.cfg.batches, "training steps");
    train->add_option("--init", train_args.cfg.init, "initial sampler name");
    train->add_option("--lr", train_args.cfg.lr0, "initial learning rate");
    train->add_option("--decay", train_args.cfg.decay, "learning rate decay per 1000 steps");
    train->add_option("--seed", train_args.cfg.seed, "RNG seed");
    train->add_option("--K", train_args.cfg.K, "spectral lattice extent (0 = auto)");
    train->add_option("--out", train_args.out, "checkpoint path");
    train->add_option("--history-out", train_args.history_out, "loss history CSV path");

    GenerateArgs gen_args;
    CLI::App* gen = app.add_subcommand("generate", "run a trained filter on a fresh point set");
    gen->add_option("--filter", gen_args.filter, "checkpoint path")->required();
    gen->add_option("--points", gen_args.N, "point count (0 = the checkpoint's training count)");
    gen->add_option("--seed", gen_args.seed, "RNG seed");
    gen->add_option("--init", gen_args.init, "initial sampler name");
    gen->add_option("--out", gen_args.out, "points CSV path, '-' for stdout");
    gen->add_option("--trials", gen_args.trials, "realizations to emit (files are numbered)");

    AnalyzeArgs an_args;
    CLI::App* an = app.add_subcommand("analyze", "measure spectrum, PCF and discrepancy of a source");
    an->add_option("--points", an_args.points_file, "points CSV to analyze");
    an->add_option("--filter", an_args.filter, "checkpoint to analyze (composed with --init)");
    an->add_option("--sampler", an_args.sampler, "built-in sampler to analyze");
    an->add_option("--init", an_args.init, "initial sampler for --filter");
    an->add_option("--spectrum-out", an_args.spectrum_out, "power spectrum PGM path");
    an->add_option("--radial-out", an_args.radial_out, "radial profile CSV path");
    an->add_option("--pcf-out", an_args.pcf_out, "pair correlation CSV path");
    an->add_flag("--disc", an_args.disc, "print discrepancy scores");
    an->add_option("--trials", an_args.trials, "realizations to average");
    an->add_option("--K", an_args.K, "spectral lattice extent (0 = auto)");
    an->add_option("--radial-bins", an_args.radial_bins, "radial profile bin count");
    an->add_option("--count", an_args.N, "points per realization (0 = source default)");
    an->add_option("--dims", an_args.n, "point dimension for --sampler sources");
    an->add_option("--seed", an_args.seed, "RNG seed");

    BaselineArgs base_args;
    CLI::App* base = app.add_subcommand("baseline", "emit points from a built-in sampler");
    base->add_option("--sampler", base_args.sampler, "sampler name");
    base->add_option("--points", base_args.N, "point count");
    base->add_option("--dims", base_args.n, "point dimension");
    base->add_option("--seed", base_args.seed, "RNG seed");
    base->add_option("--out", base_args.out, "points CSV path, '-' for stdout");

    GradcheckArgs gc_args;
    CLI::App* gc = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    gc->set_help_flag("--help", "print help"); // frees -h for the step size below
    gc->add_option("--program", gc_args.program, "loss program text");
    gc->add_option("--dims", gc_args.n, "point dimension");
    gc->add_option("--points", gc_args.N, "points per set");
    gc->add_option("--rbf-count", gc_args.m, "RBFs per iteration");
    gc->add_option("--iterations", gc_args.n_s, "filter iterations");
    gc->add_option("--batch", gc_args.batch, "point sets in the probe batch");
    gc->add_option("--receptive", gc_args.sigma, "receptive field radius");
    gc->add_option("--kernel-sigma", gc_args.sigma_n, "RBF width");
    gc->add_option("--gamma", gc_args.gamma, "per-iteration receptive field shrink");
    gc->add_option("--K", gc_args.K, "spectral lattice extent (0 = auto)");
    gc->add_option("--seed", gc_args.seed, "RNG seed");
    gc->add_option("--h", gc_args.h, "finite-difference step");
    gc->add_option("--tol", gc_args.tol, "maximum relative error accepted");

    try {
        app.parse(argc, argv);
        if (train->parsed()) return run_train(train_args);
        if (gen->parsed()) return run_generate(gen_args);
        if (an->parsed()) return run_analyze(an_args);
        if (base->parsed()) return run_baseline(base_args);
        if (gc->parsed()) return run_gradcheck(gc_args);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // --help exits 0, any parse problem is a usage error
    } catch (const sc::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const sc::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sc::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
