#include "dynreg/benchmark.hpp"

#include "dynreg/config.hpp"
#include "dynreg/errors.hpp"
#include "dynreg/io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <sstream>
#include <thread>

namespace dynreg {
namespace {

constexpr const char* kRowHeader = "pair_id,registered,rre,rte,rmse,stages,best_stage,exit_reason,overlap,wall_ms";

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    for (std::string& s : out) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    }
    return out;
}

double csv_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
    return v;
}

std::uint64_t csv_u64(const std::string& s, std::size_t line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("line " + std::to_string(line) + ": not an integer: '" + s + "'");
    }
    return v;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = text.find('\n', pos);
        out.push_back(text.substr(pos, end == std::string_view::npos ? text.npos : end - pos));
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

std::string mode_name(RecallMode m) { return m == RecallMode::rmse_based ? "rmse" : "pose"; }

}  // namespace

BenchmarkAggregate aggregate_rows(const std::vector<BenchmarkRow>& rows) {
    BenchmarkAggregate a;
    a.pairs = rows.size();
    if (rows.empty()) return a;
    std::vector<double> rres;
    std::vector<double> rtes;
    double rmse_sum = 0.0;
    std::size_t ok = 0;
    std::size_t evaluated = 0;
    std::size_t global_exit = 0;
    for (const BenchmarkRow& r : rows) {
        if (r.registered) ++ok;
        a.total_stages += r.stages;
        a.total_wall_ms += r.wall_ms;
        if (r.stages == 1) ++global_exit;
        if (r.exit_reason == "failure") continue;
        ++evaluated;
        rres.push_back(r.rre);
        rtes.push_back(r.rte);
        rmse_sum += r.rmse;
    }
    a.recall = static_cast<double>(ok) / static_cast<double>(rows.size());
    a.median_rre = median(std::move(rres));
    a.median_rte = median(std::move(rtes));
    a.mean_rmse = evaluated > 0 ? rmse_sum / static_cast<double>(evaluated) : 0.0;
    a.global_exit_fraction = static_cast<double>(global_exit) / static_cast<double>(rows.size());
    return a;
}

BenchmarkRow evaluate_pair(const SyntheticPair& pair, const PipelineConfig& config, const BenchmarkOptions& options,
                           std::size_t pair_id) {
    BenchmarkRow row;
    row.pair_id = pair_id;
    row.overlap = pair.measured_overlap;
    try {
        const RegistrationResult result =
            register_pair(pair.src, pair.tgt, config, PairContext{pair.world_from_src, pair.world_from_tgt});
        PairMetrics m;
        m.rre = rre(result.transform, pair.gt);
        m.rte = rte(result.transform, pair.gt);
        m.rmse = pair.gt_correspondences.empty()
                     ? 0.0
                     : rmse(pair.gt_correspondences, pair.src, pair.tgt, result.transform);
        row.registered = is_registered(m, options.metrics, options.mode);
        row.rre = m.rre;
        row.rte = m.rte;
        row.rmse = m.rmse;
        row.stages = result.trace.stages.size();
        row.best_stage = result.trace.best_stage;
        row.exit_reason = to_string(result.trace.exit_reason);
        if (options.record_timing) {
            for (const StageRecord& s : result.trace.stages) row.wall_ms += s.wall_ms;
        }
    } catch (const ConfigurationError&) {
        throw;
    } catch (const Error&) {
        row.registered = false;
        row.exit_reason = "failure";
    }
    return row;
}

namespace {

/// Runs body(i) for i in [0, count) on up to `workers` threads; rethrows the first failure in index order.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body body) {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(workers, count));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

std::vector<SyntheticPair> generate_suite(const std::vector<SceneSpec>& suite, std::size_t workers) {
    std::vector<SyntheticPair> pairs(suite.size());
    parallel_for(suite.size(), workers, [&](std::size_t i) { pairs[i] = generate_pair(suite[i]); });
    return pairs;
}

BenchmarkReport run_benchmark(const std::vector<SyntheticPair>& pairs, const PipelineConfig& config,
                              const BenchmarkOptions& options) {
    if (pairs.empty()) throw ConfigurationError("benchmark suite is empty");
    config.validate();
    options.metrics.validate();
    BenchmarkReport report;
    report.config_fingerprint = config_fingerprint(config);
    report.mode = options.mode;
    report.rows.resize(pairs.size());
    parallel_for(pairs.size(), options.workers,
                 [&](std::size_t i) { report.rows[i] = evaluate_pair(pairs[i], config, options, i); });
    report.aggregate = aggregate_rows(report.rows);
    return report;
}

BenchmarkReport run_benchmark(const std::vector<SceneSpec>& suite, const PipelineConfig& config,
                              const BenchmarkOptions& options) {
    if (suite.empty()) throw ConfigurationError("benchmark suite is empty");
    config.validate();
    return run_benchmark(generate_suite(suite, options.workers), config, options);
}

std::string emit_report_csv(const BenchmarkReport& report) {
    std::ostringstream out;
    out << "# fingerprint=" << report.config_fingerprint << " mode=" << mode_name(report.mode) << '\n';
    out << kRowHeader << '\n';
    for (const BenchmarkRow& r : report.rows) {
        out << r.pair_id << ',' << (r.registered ? 1 : 0) << ',' << format_double(r.rre) << ','
            << format_double(r.rte) << ',' << format_double(r.rmse) << ',' << r.stages << ',' << r.best_stage << ','
            << r.exit_reason << ',' << format_double(r.overlap) << ',' << format_double(r.wall_ms) << '\n';
    }
    const BenchmarkAggregate& a = report.aggregate;
    out << "aggregate,pairs=" << a.pairs << ",recall=" << format_double(a.recall)
        << ",median_rre=" << format_double(a.median_rre) << ",median_rte=" << format_double(a.median_rte)
        << ",mean_rmse=" << format_double(a.mean_rmse) << ",total_stages=" << a.total_stages
        << ",global_exit_fraction=" << format_double(a.global_exit_fraction)
        << ",total_wall_ms=" << format_double(a.total_wall_ms) << '\n';
    return out.str();
}

BenchmarkReport parse_report_csv(std::string_view text) {
    BenchmarkReport report;
    const auto lines = lines_of(text);
    bool saw_header = false;
    bool saw_aggregate = false;
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string_view line = lines[n];
        const std::size_t line_no = n + 1;
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream ss{std::string(line.substr(1))};
            std::string token;
            while (ss >> token) {
                if (token.rfind("fingerprint=", 0) == 0) report.config_fingerprint = token.substr(12);
                if (token.rfind("mode=", 0) == 0) {
                    const std::string m = token.substr(5);
                    if (m != "rmse" && m != "pose") throw ParseError("line " + std::to_string(line_no) + ": bad mode");
                    report.mode = m == "rmse" ? RecallMode::rmse_based : RecallMode::pose_based;
                }
            }
            continue;
        }
        if (line == kRowHeader) {
            saw_header = true;
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.front() == "aggregate") {
            BenchmarkAggregate& a = report.aggregate;
            for (std::size_t c = 1; c < cells.size(); ++c) {
                const std::size_t eq = cells[c].find('=');
                if (eq == std::string::npos) throw ParseError("line " + std::to_string(line_no) + ": bad aggregate");
                const std::string key = cells[c].substr(0, eq);
                const std::string value = cells[c].substr(eq + 1);
                if (key == "pairs") a.pairs = csv_u64(value, line_no);
                else if (key == "recall") a.recall = csv_double(value, line_no);
                else if (key == "median_rre") a.median_rre = csv_double(value, line_no);
                else if (key == "median_rte") a.median_rte = csv_double(value, line_no);
                else if (key == "mean_rmse") a.mean_rmse = csv_double(value, line_no);
                else if (key == "total_stages") a.total_stages = csv_u64(value, line_no);
                else if (key == "global_exit_fraction") a.global_exit_fraction = csv_double(value, line_no);
                else if (key == "total_wall_ms") a.total_wall_ms = csv_double(value, line_no);
                else throw ParseError("line " + std::to_string(line_no) + ": unknown aggregate field '" + key + "'");
            }
            saw_aggregate = true;
            continue;
        }
        if (!saw_header) throw ParseError("line " + std::to_string(line_no) + ": row before the column header");
        if (cells.size() != 10) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 10 columns, found " +
                             std::to_string(cells.size()));
        }
        BenchmarkRow r;
        r.pair_id = csv_u64(cells[0], line_no);
        r.registered = csv_u64(cells[1], line_no) != 0;
        r.rre = csv_double(cells[2], line_no);
        r.rte = csv_double(cells[3], line_no);
        r.rmse = csv_double(cells[4], line_no);
        r.stages = csv_u64(cells[5], line_no);
        r.best_stage = csv_u64(cells[6], line_no);
        r.exit_reason = cells[7];
        r.overlap = csv_double(cells[8], line_no);
        r.wall_ms = csv_double(cells[9], line_no);
        report.rows.push_back(std::move(r));
    }
    if (!saw_aggregate) throw ParseError("report has no aggregate row");
    return report;
}

std::vector<SceneSpec> parse_suite_csv(std::string_view text) {
    std::vector<SceneSpec> suite;
    const auto lines = lines_of(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string_view line = lines[n];
        if (line.empty() || line.front() == '#' || line.rfind("kind,", 0) == 0) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 7 && cells.size() != 9) {
            throw ParseError("line " + std::to_string(n + 1) + ": suite rows need 7 or 9 columns, found " +
                             std::to_string(cells.size()));
        }
        SceneSpec s;
        try {
            s.kind = scene_kind_from_string(cells[0]);
        } catch (const ConfigurationError& e) {
            throw ParseError("line " + std::to_string(n + 1) + ": " + e.what());
        }
        s.overlap = csv_double(cells[1], n + 1);
        s.noise = csv_double(cells[2], n + 1);
        s.outlier_region_fraction = csv_double(cells[3], n + 1);
        s.max_rotation_deg = csv_double(cells[4], n + 1);
        s.max_translation = csv_double(cells[5], n + 1);
        s.seed = csv_u64(cells[6], n + 1);
        if (cells.size() == 9) {
            s.spacing = csv_double(cells[7], n + 1);
            s.view_fraction = csv_double(cells[8], n + 1);
        }
        try {
            s.validate();
        } catch (const ConfigurationError& e) {
            throw ParseError("line " + std::to_string(n + 1) + ": " + e.what());
        }
        suite.push_back(s);
    }
    return suite;
}

std::string emit_suite_csv(const std::vector<SceneSpec>& suite) {
    std::string out =
        "kind,overlap,noise,outlier_region_fraction,max_rotation_deg,max_translation,seed,spacing,view_fraction\n";
    for (const SceneSpec& s : suite) {
        out += to_string(s.kind) + ',' + format_double(s.overlap) + ',' + format_double(s.noise) + ',' +
               format_double(s.outlier_region_fraction) + ',' + format_double(s.max_rotation_deg) + ',' +
               format_double(s.max_translation) + ',' + std::to_string(s.seed) + ',' + format_double(s.spacing) +
               ',' + format_double(s.view_fraction) + '\n';
    }
    return out;
}

std::vector<AblationVariant> ablation_variants(const std::string& which, const PipelineConfig& base) {
    std::vector<AblationVariant> out;
    if (which == "encoder") {
        for (bool unique : {false, true}) {
            PipelineConfig c = base;
            c.unique_params = unique;
            out.push_back({unique ? "unique-params=on" : "unique-params=off", c});
        }
    } else if (which == "classifier") {
        for (bool enabled : {false, true}) {
            PipelineConfig c = base;
            c.classifier.enabled = enabled;
            out.push_back({enabled ? "classifier=on" : "classifier=off", c});
        }
    } else if (which == "node") {
        for (NodeStrategy s : {NodeStrategy::random, NodeStrategy::average_center, NodeStrategy::dbscan}) {
            PipelineConfig c = base;
            c.refine.strategy = s;
            out.push_back({"node=" + to_string(s), c});
        }
    } else if (which == "iteration") {
        for (int i = 0; i <= 4; ++i) {
            PipelineConfig c = base;
            c.max_iterations = i;
            out.push_back({"iterations=" + std::to_string(i), c});
        }
    } else if (which == "scorer") {
        for (Scorer s : {Scorer::ir, Scorer::sc, Scorer::sc2}) {
            PipelineConfig c = base;
            c.classifier.scorer = s;
            out.push_back({"scorer=" + to_string(s), c});
        }
    } else {
        throw ConfigurationError("unknown ablation '" + which + "' (encoder, classifier, node, iteration, scorer)");
    }
    return out;
}

std::vector<AblationResult> run_ablation(const std::string& which, const std::vector<SceneSpec>& suite,
                                         const PipelineConfig& base, const BenchmarkOptions& options) {
    const std::vector<AblationVariant> variants = ablation_variants(which, base);
    if (suite.empty()) throw ConfigurationError("benchmark suite is empty");
    for (const AblationVariant& v : variants) v.config.validate();
    const std::vector<SyntheticPair> pairs = generate_suite(suite, options.workers);
    std::vector<AblationResult> out;
    for (const AblationVariant& v : variants) out.push_back({v.label, run_benchmark(pairs, v.config, options)});
    return out;
}

std::string emit_ablation_csv(const std::vector<AblationResult>& results) {
    std::string out = "variant,pairs,recall,total_stages,global_exit_fraction,median_rre,median_rte,mean_rmse\n";
    for (const AblationResult& r : results) {
        const BenchmarkAggregate& a = r.report.aggregate;
        out += r.label + ',' + std::to_string(a.pairs) + ',' + format_double(a.recall) + ',' +
               std::to_string(a.total_stages) + ',' + format_double(a.global_exit_fraction) + ',' +
               format_double(a.median_rre) + ',' + format_double(a.median_rte) + ',' + format_double(a.mean_rmse) +
               '\n';
    }
    return out;
}

}  // namespace dynreg
