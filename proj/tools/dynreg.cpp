// Command-line front end: register, bench, ablate, suite, metrics, generate.

#include "dynreg/benchmark.hpp"
#include "dynreg/config.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/eval.hpp"
#include "dynreg/io.hpp"
#include "dynreg/log.hpp"
#include "dynreg/pipeline.hpp"
#include "dynreg/synthetic.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRegistration = 3;

struct ConfigOptions {
    std::string config_path;
    std::string preset_name;
    std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigOptions& opts) {
    cmd->add_option("--config", opts.config_path, "key = value config file");
    cmd->add_option("--preset", opts.preset_name, "start from a named preset (indoor, indoor-lo, outdoor, synthetic)");
    cmd->add_option("--set", opts.overrides, "override one key, e.g. --set pipeline.max_iterations=2");
}

dynreg::PipelineConfig resolve_config(const ConfigOptions& opts) {
    dynreg::PipelineConfig config;
    if (!opts.preset_name.empty()) config = dynreg::preset(opts.preset_name);
    if (!opts.config_path.empty()) {
        if (!opts.preset_name.empty()) {
            throw dynreg::ConfigurationError("use either --preset or a 'preset' line in --config, not both");
        }
        config = dynreg::load_config(opts.config_path);
    }
    for (const std::string& kv : opts.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) throw dynreg::ConfigurationError("--set expects key=value, got '" + kv + "'");
        dynreg::apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    config.validate();
    return config;
}

struct SuiteOptions {
    std::string suite_path;
    std::string suite_name;
    std::size_t count = 20;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::string mode = "rmse";
    bool no_timing = false;
};

void add_suite_options(CLI::App* cmd, SuiteOptions& opts) {
    cmd->add_option("--suite", opts.suite_path, "suite CSV (kind,overlap,noise,outlier_region_fraction,...)");
    cmd->add_option("--suite-name", opts.suite_name, "built-in suite: easy, exact, low-overlap");
    cmd->add_option("--count", opts.count, "pairs in a built-in suite");
    cmd->add_option("--suite-seed", opts.seed, "seed of a built-in suite");
    cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--mode", opts.mode, "recall criterion: rmse or pose")->check(CLI::IsMember({"rmse", "pose"}));
    cmd->add_flag("--no-timing", opts.no_timing, "write zero wall times (reproducible reports)");
}

std::vector<dynreg::SceneSpec> resolve_suite(const SuiteOptions& opts) {
    if (opts.suite_path.empty() == opts.suite_name.empty()) {
        throw dynreg::ConfigurationError("give exactly one of --suite or --suite-name");
    }
    if (!opts.suite_path.empty()) return dynreg::parse_suite_csv(dynreg::read_text_file(opts.suite_path));
    return dynreg::make_suite(opts.suite_name, opts.count, opts.seed);
}

dynreg::BenchmarkOptions benchmark_options(const SuiteOptions& opts) {
    dynreg::BenchmarkOptions b;
    b.workers = opts.workers;
    b.mode = opts.mode == "pose" ? dynreg::RecallMode::pose_based : dynreg::RecallMode::rmse_based;
    b.record_timing = !opts.no_timing;
    return b;
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        dynreg::write_text_file(path, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    dynreg::init_logging();
    CLI::App app{"Two-stage point cloud registration with dynamic local iterations"};
    app.require_subcommand(1);

    ConfigOptions reg_cfg;
    std::string src_path;
    std::string tgt_path;
    std::string pose_out;
    std::string trace_out;
    auto* reg = app.add_subcommand("register", "register a source cloud onto a target cloud");
    reg->add_option("src", src_path, "source cloud (.ply, .xyz, .xyzn)")->required();
    reg->add_option("tgt", tgt_path, "target cloud")->required();
    reg->add_option("--out", pose_out, "write the 4x4 pose here (default stdout)");
    reg->add_option("--trace", trace_out, "write the per-stage trace CSV here");
    add_config_options(reg, reg_cfg);

    ConfigOptions bench_cfg;
    SuiteOptions bench_suite;
    std::string bench_out;
    auto* bench = app.add_subcommand("bench", "run a synthetic benchmark suite");
    add_config_options(bench, bench_cfg);
    add_suite_options(bench, bench_suite);
    bench->add_option("--out", bench_out, "report CSV (default stdout)");

    ConfigOptions ablate_cfg;
    SuiteOptions ablate_suite;
    std::string ablate_which;
    std::string ablate_out;
    auto* ablate = app.add_subcommand("ablate", "compare pipeline variants on a suite");
    ablate->add_option("--which", ablate_which, "encoder, classifier, node, iteration or scorer")
        ->required()
        ->check(CLI::IsMember({"encoder", "classifier", "node", "iteration", "scorer"}));
    add_config_options(ablate, ablate_cfg);
    add_suite_options(ablate, ablate_suite);
    ablate->add_option("--out", ablate_out, "summary CSV (default stdout)");

    std::string suite_name;
    std::size_t suite_count = 20;
    std::uint64_t suite_seed = 1;
    std::string suite_out;
    auto* suite_cmd = app.add_subcommand("suite", "write a built-in suite as CSV (editable input for --suite)");
    suite_cmd->add_option("--suite-name", suite_name, "easy, exact or low-overlap")->required();
    suite_cmd->add_option("--count", suite_count, "pairs in the suite");
    suite_cmd->add_option("--suite-seed", suite_seed, "seed of the suite");
    suite_cmd->add_option("--out", suite_out, "suite CSV (default stdout)");

    std::string est_path;
    std::string gt_path;
    auto* metrics = app.add_subcommand("metrics", "rotation/translation error between two pose files");
    metrics->add_option("--est", est_path, "estimated pose")->required();
    metrics->add_option("--gt", gt_path, "ground-truth pose")->required();

    dynreg::SceneSpec gen_spec;
    std::string gen_kind = "room";
    std::string gen_src;
    std::string gen_tgt;
    std::string gen_gt;
    auto* gen = app.add_subcommand("generate", "write a synthetic pair and its ground-truth pose");
    gen->add_option("--kind", gen_kind, "room, corridor or outdoor-strip");
    gen->add_option("--overlap", gen_spec.overlap, "target overlap in (0, 1]");
    gen->add_option("--noise", gen_spec.noise, "coordinate noise (m)");
    gen->add_option("--clutter", gen_spec.outlier_region_fraction, "clutter fraction per view");
    gen->add_option("--max-rotation", gen_spec.max_rotation_deg, "max rotation (degrees)");
    gen->add_option("--max-translation", gen_spec.max_translation, "max translation (m)");
    gen->add_option("--seed", gen_spec.seed, "generator seed");
    gen->add_option("--src", gen_src, "source cloud output")->required();
    gen->add_option("--tgt", gen_tgt, "target cloud output")->required();
    gen->add_option("--gt", gen_gt, "ground-truth pose output")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (reg->parsed()) {
            const dynreg::PipelineConfig config = resolve_config(reg_cfg);
            const dynreg::PointCloud src = dynreg::load_cloud(src_path);
            const dynreg::PointCloud tgt = dynreg::load_cloud(tgt_path);
            try {
                const dynreg::RegistrationResult result = dynreg::register_pair(src, tgt, config);
                if (!trace_out.empty()) {
                    std::ofstream out(trace_out);
                    if (!out) throw dynreg::ParseError("cannot write '" + trace_out + "'");
                    dynreg::write_trace_csv(out, result.trace);
                }
                dynreg::log_info("exit: " + dynreg::to_string(result.trace.exit_reason) + " after " +
                                 std::to_string(result.trace.stages.size()) + " stage(s), best stage " +
                                 std::to_string(result.trace.best_stage));
                write_output(pose_out, dynreg::format_pose(result.transform));
            } catch (const dynreg::PipelineFailure& e) {
                if (!trace_out.empty()) {
                    std::ofstream out(trace_out);
                    dynreg::write_trace_csv(out, e.trace());
                }
                throw;
            }
        } else if (bench->parsed()) {
            const dynreg::PipelineConfig config = resolve_config(bench_cfg);
            const auto suite = resolve_suite(bench_suite);
            const auto report = dynreg::run_benchmark(suite, config, benchmark_options(bench_suite));
            dynreg::log_info("recall " + dynreg::format_double(report.aggregate.recall) + " over " +
                             std::to_string(report.aggregate.pairs) + " pairs");
            write_output(bench_out, dynreg::emit_report_csv(report));
        } else if (ablate->parsed()) {
            const dynreg::PipelineConfig config = resolve_config(ablate_cfg);
            const auto suite = resolve_suite(ablate_suite);
            const auto results = dynreg::run_ablation(ablate_which, suite, config, benchmark_options(ablate_suite));
            write_output(ablate_out, dynreg::emit_ablation_csv(results));
        } else if (suite_cmd->parsed()) {
            write_output(suite_out, dynreg::emit_suite_csv(dynreg::make_suite(suite_name, suite_count, suite_seed)));
        } else if (metrics->parsed()) {
            const dynreg::RigidTransform est = dynreg::load_pose(est_path);
            const dynreg::RigidTransform gt = dynreg::load_pose(gt_path);
            std::cout << "rre_deg " << dynreg::format_double(dynreg::rre(est, gt)) << '\n'
                      << "rte_m " << dynreg::format_double(dynreg::rte(est, gt)) << '\n';
        } else if (gen->parsed()) {
            gen_spec.kind = dynreg::scene_kind_from_string(gen_kind);
            const dynreg::SyntheticPair pair = dynreg::generate_pair(gen_spec);
            dynreg::save_cloud(gen_src, pair.src);
            dynreg::save_cloud(gen_tgt, pair.tgt);
            dynreg::save_pose(gen_gt, pair.gt);
            dynreg::log_info("measured overlap " + dynreg::format_double(pair.measured_overlap));
        }
    } catch (const dynreg::RegistrationFailure& e) {
        dynreg::log_error(e.what());
        return kExitRegistration;
    } catch (const dynreg::ParseError& e) {
        dynreg::log_error(e.what());
        return kExitUsage;
    } catch (const dynreg::ConfigurationError& e) {
        dynreg::log_error(e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        dynreg::log_error(e.what());
        return 1;
    }
    return kExitOk;
}
