#pragma once

#include "dynreg/eval.hpp"
#include "dynreg/pipeline.hpp"
#include "dynreg/synthetic.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace dynreg {

struct BenchmarkRow {
    std::size_t pair_id = 0;
    bool registered = false;
    double rre = 0.0;
    double rte = 0.0;
    double rmse = 0.0;
    std::size_t stages = 0;        ///< stage records in the trace (0 when registration threw)
    std::size_t best_stage = 0;
    std::string exit_reason;       ///< to_string(ExitReason), or "failure"
    double overlap = 0.0;          ///< measured overlap of the generated pair
    double wall_ms = 0.0;

    friend bool operator==(const BenchmarkRow&, const BenchmarkRow&) = default;
};

struct BenchmarkAggregate {
    std::size_t pairs = 0;
    double recall = 0.0;
    double median_rre = 0.0;
    double median_rte = 0.0;
    double mean_rmse = 0.0;        ///< over pairs that did not throw
    std::size_t total_stages = 0;
    double global_exit_fraction = 0.0;  ///< share of pairs that stopped after the global stage
    double total_wall_ms = 0.0;

    friend bool operator==(const BenchmarkAggregate&, const BenchmarkAggregate&) = default;
};

struct BenchmarkReport {
    std::string config_fingerprint;
    RecallMode mode = RecallMode::rmse_based;
    std::vector<BenchmarkRow> rows;
    BenchmarkAggregate aggregate;

    friend bool operator==(const BenchmarkReport&, const BenchmarkReport&) = default;
};

struct BenchmarkOptions {
    std::size_t workers = 1;
    RecallMode mode = RecallMode::rmse_based;
    MetricConfig metrics;
    bool record_timing = true;     ///< false zeroes wall times so reports compare bit-for-bit
};

/// Recompute the aggregate row from per-pair rows.
BenchmarkAggregate aggregate_rows(const std::vector<BenchmarkRow>& rows);

/// Register one generated pair and evaluate it against its ground truth.
BenchmarkRow evaluate_pair(const SyntheticPair& pair, const PipelineConfig& config, const BenchmarkOptions& options,
                           std::size_t pair_id = 0);

/// Generate every pair of the suite (in suite order, spread over `workers` threads).
std::vector<SyntheticPair> generate_suite(const std::vector<SceneSpec>& suite, std::size_t workers = 1);

/// Register already generated pairs; row i belongs to pairs[i].
BenchmarkReport run_benchmark(const std::vector<SyntheticPair>& pairs, const PipelineConfig& config,
                              const BenchmarkOptions& options);

/**
 * @brief Generate and register every pair of the suite.
 *
 * Pairs are spread over `workers` threads; rows keep suite order, so the
 * report does not depend on the worker count. A pair whose registration
 * throws is recorded as a failed row.
 */
BenchmarkReport run_benchmark(const std::vector<SceneSpec>& suite, const PipelineConfig& config,
                              const BenchmarkOptions& options);

/// Fixed-column CSV: a `#` header with fingerprint and mode, per-pair rows, then an `aggregate` row.
std::string emit_report_csv(const BenchmarkReport& report);
BenchmarkReport parse_report_csv(std::string_view text);

/// Suite CSV: kind,overlap,noise,outlier_region_fraction,max_rotation_deg,max_translation,seed[,spacing,view_fraction]
std::vector<SceneSpec> parse_suite_csv(std::string_view text);
std::string emit_suite_csv(const std::vector<SceneSpec>& suite);

struct AblationVariant {
    std::string label;
    PipelineConfig config;
};

/// Variants for one ablation family: encoder, classifier, node, iteration, scorer.
std::vector<AblationVariant> ablation_variants(const std::string& which, const PipelineConfig& base);

struct AblationResult {
    std::string label;
    BenchmarkReport report;
};

/// Generates the suite once and benchmarks every variant on the same pairs.
std::vector<AblationResult> run_ablation(const std::string& which, const std::vector<SceneSpec>& suite,
                                         const PipelineConfig& base, const BenchmarkOptions& options);

/// One line per variant: label, recall, total stages, median RRE/RTE.
std::string emit_ablation_csv(const std::vector<AblationResult>& results);

}  // namespace dynreg
