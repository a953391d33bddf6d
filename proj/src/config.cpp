#include "dynreg/config.hpp"

#include "dynreg/errors.hpp"
#include "dynreg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

namespace dynreg {
namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigurationError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a finite number");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    int base = 10;
    std::size_t skip = 0;
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
        base = 16;
        skip = 2;
    }
    const auto [ptr, ec] = std::from_chars(v.data() + skip, v.data() + v.size(), out, base);
    if (v.size() == skip || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
    return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    bad_value(key, v, "a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const std::size_t comma = v.find(',', start);
        const std::string item = trim(std::string_view(v).substr(start, comma == std::string::npos ? v.npos : comma - start));
        if (item.empty()) bad_value(key, v, "a comma-separated list of numbers");
        out.push_back(to_double(key, item));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string from_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0) out += ", ";
        out += format_double(values[i]);
    }
    return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

struct Entry {
    std::string key;
    std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <typename Member>
Entry real_entry(std::string key, Member member) {
    return {std::move(key),
            [member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = to_double(k, v); },
            [member](const PipelineConfig& c) { return format_double(member(const_cast<PipelineConfig&>(c))); }};
}

template <typename Member>
Entry size_entry(std::string key, Member member) {
    return {std::move(key),
            [member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = to_size(k, v); },
            [member](const PipelineConfig& c) { return std::to_string(member(const_cast<PipelineConfig&>(c))); }};
}

template <typename Member>
Entry int_entry(std::string key, Member member) {
    return {std::move(key),
            [member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = to_int(k, v); },
            [member](const PipelineConfig& c) { return std::to_string(member(const_cast<PipelineConfig&>(c))); }};
}

template <typename Member>
Entry u64_entry(std::string key, Member member) {
    return {std::move(key),
            [member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = to_u64(k, v); },
            [member](const PipelineConfig& c) { return std::to_string(member(const_cast<PipelineConfig&>(c))); }};
}

template <typename Member>
Entry bool_entry(std::string key, Member member) {
    return {std::move(key),
            [member](PipelineConfig& c, const std::string& k, const std::string& v) { member(c) = to_bool(k, v); },
            [member](const PipelineConfig& c) { return from_bool(member(const_cast<PipelineConfig&>(c))); }};
}

void add_matching(std::vector<Entry>& r, const std::string& prefix, MatchingParams PipelineConfig::*field) {
    r.push_back(size_entry(prefix + ".k", [field](PipelineConfig& c) -> std::size_t& { return (c.*field).k; }));
    r.push_back(size_entry(prefix + ".patch_cap",
                           [field](PipelineConfig& c) -> std::size_t& { return (c.*field).patch_cap; }));
    r.push_back(int_entry(prefix + ".sinkhorn_iterations",
                          [field](PipelineConfig& c) -> int& { return (c.*field).sinkhorn_iterations; }));
    r.push_back(real_entry(prefix + ".dustbin_logit",
                           [field](PipelineConfig& c) -> double& { return (c.*field).dustbin_logit; }));
    r.push_back(real_entry(prefix + ".kernel_scale",
                           [field](PipelineConfig& c) -> double& { return (c.*field).kernel_scale; }));
    r.push_back(real_entry(prefix + ".temperature",
                           [field](PipelineConfig& c) -> double& { return (c.*field).temperature; }));
}

const std::vector<Entry>& registry() {
    static const std::vector<Entry> entries = [] {
        std::vector<Entry> r;
        using C = PipelineConfig;
        r.push_back(real_entry("sampling.base_voxel", [](C& c) -> double& { return c.sampling.base_voxel; }));
        r.push_back(size_entry("sampling.levels", [](C& c) -> std::size_t& { return c.sampling.levels; }));
        r.push_back({"sampling.node_level",
                     [](C& c, const std::string& k, const std::string& v) {
                         if (v == "auto") {
                             c.sampling.node_level.reset();
                         } else {
                             c.sampling.node_level = to_size(k, v);
                         }
                     },
                     [](const C& c) {
                         return c.sampling.node_level ? std::to_string(*c.sampling.node_level) : std::string("auto");
                     }});
        r.push_back(size_entry("sampling.fine_level", [](C& c) -> std::size_t& { return c.sampling.fine_level; }));
        r.push_back(size_entry("sampling.local_fine_level",
                               [](C& c) -> std::size_t& { return c.sampling.local_fine_level; }));

        r.push_back({"descriptor.kind",
                     [](C& c, const std::string&, const std::string& v) {
                         c.descriptor.kind = descriptor_kind_from_string(v);
                     },
                     [](const C& c) { return to_string(c.descriptor.kind); }});
        r.push_back(real_entry("descriptor.histogram.radius",
                               [](C& c) -> double& { return c.descriptor.histogram.radius; }));
        r.push_back(int_entry("descriptor.histogram.angle_bins",
                              [](C& c) -> int& { return c.descriptor.histogram.angle_bins; }));
        r.push_back(int_entry("descriptor.histogram.radial_bins",
                              [](C& c) -> int& { return c.descriptor.histogram.radial_bins; }));
        r.push_back(real_entry("descriptor.histogram.radius_factor",
                               [](C& c) -> double& { return c.histogram_radius_factor; }));
        r.push_back(int_entry("descriptor.oracle.width", [](C& c) -> int& { return c.descriptor.oracle.width; }));
        r.push_back(real_entry("descriptor.oracle.bandwidth",
                               [](C& c) -> double& { return c.descriptor.oracle.bandwidth; }));
        r.push_back(real_entry("descriptor.oracle.bandwidth_factor",
                               [](C& c) -> double& { return c.oracle_bandwidth_factor; }));
        r.push_back(real_entry("descriptor.oracle.noise", [](C& c) -> double& { return c.descriptor.oracle.noise; }));
        r.push_back(real_entry("descriptor.oracle.outlier_fraction",
                               [](C& c) -> double& { return c.descriptor.oracle.outlier_fraction; }));
        r.push_back(u64_entry("descriptor.oracle.seed",
                              [](C& c) -> std::uint64_t& { return c.descriptor.oracle.seed; }));
        r.push_back(u64_entry("descriptor.oracle.basis_seed",
                              [](C& c) -> std::uint64_t& { return c.descriptor.oracle.basis_seed; }));

        add_matching(r, "global", &C::global_matching);
        add_matching(r, "local", &C::local_matching);
        r.push_back(bool_entry("local.unique_params", [](C& c) -> bool& { return c.unique_params; }));

        r.push_back(real_entry("solver.acceptance_threshold",
                               [](C& c) -> double& { return c.solver.acceptance_threshold; }));
        r.push_back(int_entry("solver.refinement_rounds", [](C& c) -> int& { return c.solver.refinement_rounds; }));

        r.push_back(real_entry("cluster.eps", [](C& c) -> double& { return c.cluster.eps; }));
        r.push_back(size_entry("cluster.min_pts", [](C& c) -> std::size_t& { return c.cluster.min_pts; }));
        r.push_back(real_entry("cluster.eps_growth", [](C& c) -> double& { return c.cluster.eps_growth; }));
        r.push_back(size_entry("cluster.min_pts_step", [](C& c) -> std::size_t& { return c.cluster.min_pts_step; }));
        r.push_back({"cluster.similarity_floor",
                     [](C& c, const std::string& k, const std::string& v) {
                         if (v == "auto") {
                             c.cluster.similarity_floor.reset();
                         } else {
                             c.cluster.similarity_floor = to_double(k, v);
                         }
                     },
                     [](const C& c) {
                         return c.cluster.similarity_floor ? format_double(*c.cluster.similarity_floor)
                                                           : std::string("auto");
                     }});
        r.push_back(bool_entry("cluster.weighted_distance", [](C& c) -> bool& { return c.cluster.weighted_distance; }));
        r.push_back({"cluster.radius_schedule",
                     [](C& c, const std::string& k, const std::string& v) { c.radius_schedule = to_list(k, v); },
                     [](const C& c) { return from_list(c.radius_schedule); }});

        r.push_back(size_entry("refine.node_budget", [](C& c) -> std::size_t& { return c.refine.node_budget; }));
        r.push_back(size_entry("refine.search_level", [](C& c) -> std::size_t& { return c.refine.search_level; }));
        r.push_back({"refine.strategy",
                     [](C& c, const std::string&, const std::string& v) {
                         c.refine.strategy = node_strategy_from_string(v);
                     },
                     [](const C& c) { return to_string(c.refine.strategy); }});

        r.push_back(real_entry("classifier.sigma_d", [](C& c) -> double& { return c.classifier.sigma_d; }));
        r.push_back(real_entry("classifier.global_threshold",
                               [](C& c) -> double& { return c.classifier.global_threshold; }));
        r.push_back({"classifier.local_thresholds",
                     [](C& c, const std::string& k, const std::string& v) {
                         if (v == "auto") {
                             c.classifier.local_thresholds.clear();
                         } else {
                             c.classifier.local_thresholds = to_list(k, v);
                         }
                     },
                     [](const C& c) {
                         return c.classifier.local_thresholds.empty() ? std::string("auto")
                                                                      : from_list(c.classifier.local_thresholds);
                     }});
        r.push_back(real_entry("classifier.local_start_fraction",
                               [](C& c) -> double& { return c.classifier.local_start_fraction; }));
        r.push_back(real_entry("classifier.local_step", [](C& c) -> double& { return c.classifier.local_step; }));
        r.push_back(bool_entry("classifier.compare_deltas",
                               [](C& c) -> bool& { return c.classifier.compare_deltas; }));
        r.push_back(bool_entry("classifier.enabled", [](C& c) -> bool& { return c.classifier.enabled; }));
        r.push_back({"classifier.scorer",
                     [](C& c, const std::string&, const std::string& v) { c.classifier.scorer = scorer_from_string(v); },
                     [](const C& c) { return to_string(c.classifier.scorer); }});

        r.push_back(int_entry("pipeline.max_iterations", [](C& c) -> int& { return c.max_iterations; }));
        r.push_back(u64_entry("pipeline.seed", [](C& c) -> std::uint64_t& { return c.seed; }));
        return r;
    }();
    return entries;
}

const Entry& find_entry(const std::string& key) {
    for (const Entry& e : registry()) {
        if (e.key == key) return e;
    }
    throw ConfigurationError("unknown config key '" + key + "'");
}

}  // namespace

void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value) {
    find_entry(key).set(config, key, value);
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Entry& e : registry()) keys.push_back(e.key);
    return keys;
}

std::string config_value(const PipelineConfig& config, const std::string& key) { return find_entry(key).get(config); }

PipelineConfig parse_config(std::string_view text, const std::string& source) {
    struct Line {
        std::size_t number;
        std::string key;
        std::string value;
    };
    std::vector<Line> lines;
    std::optional<Line> preset_line;
    std::set<std::string> seen;

    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find('\n', pos);
        std::string_view raw = text.substr(pos, end == std::string_view::npos ? text.npos : end - pos);
        ++number;
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        const std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string where = source + ":" + std::to_string(number) + ": ";
        if (eq == std::string::npos) throw ConfigurationError(where + "expected 'key = value'");
        Line l{number, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
        if (l.key.empty()) throw ConfigurationError(where + "empty key");
        if (!seen.insert(l.key).second) throw ConfigurationError(where + "duplicate key '" + l.key + "'");
        if (l.key == "preset") {
            preset_line = l;
        } else {
            lines.push_back(std::move(l));
        }
    }

    PipelineConfig config;
    try {
        if (preset_line) config = preset(preset_line->value);
    } catch (const ConfigurationError& e) {
        throw ConfigurationError(source + ":" + std::to_string(preset_line->number) + ": " + e.what());
    }
    for (const Line& l : lines) {
        try {
            apply_setting(config, l.key, l.value);
        } catch (const ConfigurationError& e) {
            throw ConfigurationError(source + ":" + std::to_string(l.number) + ": " + e.what());
        }
    }
    try {
        config.validate();
    } catch (const ConfigurationError& e) {
        throw ConfigurationError(source + ": " + e.what());
    }
    return config;
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

std::string emit_config(const PipelineConfig& config) {
    std::string out;
    for (const Entry& e : registry()) out += e.key + " = " + e.get(config) + "\n";
    return out;
}

std::string config_fingerprint(const PipelineConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace dynreg
