#include "dynreg/io.hpp"

#include "dynreg/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

namespace dynreg {
namespace {

/// Line-by-line reader that remembers where each line starts.
class LineReader {
public:
    LineReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

    bool next(std::string_view& line) {
        if (pos_ >= text_.size()) return false;
        line_start_ = pos_;
        ++line_no_;
        const std::size_t end = text_.find('\n', pos_);
        const std::size_t stop = end == std::string_view::npos ? text_.size() : end;
        line = text_.substr(pos_, stop - pos_);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos_ = end == std::string_view::npos ? text_.size() : end + 1;
        return true;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(source_ + ": line " + std::to_string(line_no_) + " (byte offset " +
                         std::to_string(line_start_) + "): " + what);
    }

    [[noreturn]] void fail_eof(const std::string& what) const {
        throw ParseError(source_ + ": unexpected end of file at byte offset " + std::to_string(text_.size()) +
                         " after line " + std::to_string(line_no_) + ": " + what);
    }

private:
    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    std::size_t line_start_ = 0;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool blank_or_comment(std::string_view line) {
    for (char c : line) {
        if (c == '#') return true;
        if (c != ' ' && c != '\t') return false;
    }
    return true;
}

double parse_number(std::string_view token, const LineReader& reader) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) {
        reader.fail("not a number: '" + std::string(token) + "'");
    }
    if (!std::isfinite(v)) reader.fail("non-finite value '" + std::string(token) + "'");
    return v;
}

Vec3 unit_normal(const Vec3& n, const LineReader& reader) {
    const double len = n.norm();
    if (!(len > 1e-12)) reader.fail("zero-length normal");
    return n / len;
}

PointCloud parse_rows(std::string_view text, bool with_normals, const std::string& source) {
    LineReader reader(text, source);
    PointCloud cloud;
    std::size_t width = 0;
    std::string_view line;
    while (reader.next(line)) {
        if (blank_or_comment(line)) continue;
        const auto tokens = split_ws(line);
        if (width == 0) {
            width = tokens.size();
            const std::size_t need = with_normals ? 6 : 3;
            if (width != need) {
                reader.fail("expected " + std::to_string(need) + " values per row, found " + std::to_string(width));
            }
        } else if (tokens.size() != width) {
            reader.fail("row has " + std::to_string(tokens.size()) + " values, previous rows have " +
                        std::to_string(width));
        }
        cloud.points.emplace_back(parse_number(tokens[0], reader), parse_number(tokens[1], reader),
                                  parse_number(tokens[2], reader));
        if (with_normals) {
            cloud.normals.push_back(unit_normal(
                Vec3(parse_number(tokens[3], reader), parse_number(tokens[4], reader), parse_number(tokens[5], reader)),
                reader));
        }
    }
    return cloud;
}

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
};

PointCloud parse_ply(std::string_view text, const std::string& source) {
    LineReader reader(text, source);
    std::string_view line;
    if (!reader.next(line) || line != "ply") reader.fail("missing 'ply' magic");
    std::vector<PlyElement> elements;
    bool ascii = false;
    bool header_done = false;
    while (reader.next(line)) {
        const auto tokens = split_ws(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "end_header") {
            header_done = true;
            break;
        }
        if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
        if (tokens[0] == "format") {
            if (tokens.size() < 2 || tokens[1] != "ascii") reader.fail("only ascii ply is supported");
            ascii = true;
        } else if (tokens[0] == "element") {
            if (tokens.size() != 3) reader.fail("malformed element line");
            PlyElement e;
            e.name = std::string(tokens[1]);
            std::size_t count = 0;
            const auto [ptr, ec] = std::from_chars(tokens[2].data(), tokens[2].data() + tokens[2].size(), count);
            if (ec != std::errc() || ptr != tokens[2].data() + tokens[2].size()) reader.fail("bad element count");
            e.count = count;
            elements.push_back(std::move(e));
        } else if (tokens[0] == "property") {
            if (elements.empty()) reader.fail("property before any element");
            if (tokens.size() < 3) reader.fail("malformed property line");
            elements.back().properties.emplace_back(tokens.back());
        } else {
            reader.fail("unknown header keyword '" + std::string(tokens[0]) + "'");
        }
    }
    if (!header_done) reader.fail_eof("header has no end_header");
    if (!ascii) reader.fail("ply header lacks a format line");

    PointCloud cloud;
    bool seen_vertex = false;
    for (const PlyElement& e : elements) {
        if (e.name != "vertex") {
            for (std::size_t r = 0; r < e.count; ++r) {
                if (!reader.next(line)) reader.fail_eof("missing '" + e.name + "' rows");
            }
            continue;
        }
        seen_vertex = true;
        auto find = [&](const char* name) -> int {
            for (std::size_t i = 0; i < e.properties.size(); ++i) {
                if (e.properties[i] == name) return static_cast<int>(i);
            }
            return -1;
        };
        const int ix = find("x"), iy = find("y"), iz = find("z");
        const int inx = find("nx"), iny = find("ny"), inz = find("nz");
        if (ix < 0 || iy < 0 || iz < 0) reader.fail("vertex element lacks x/y/z");
        const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
        cloud.points.reserve(e.count);
        for (std::size_t r = 0; r < e.count; ++r) {
            if (!reader.next(line)) {
                reader.fail_eof("expected " + std::to_string(e.count) + " vertices, found " + std::to_string(r));
            }
            const auto tokens = split_ws(line);
            if (tokens.size() != e.properties.size()) {
                reader.fail("vertex row has " + std::to_string(tokens.size()) + " values, header declares " +
                            std::to_string(e.properties.size()));
            }
            cloud.points.emplace_back(parse_number(tokens[ix], reader), parse_number(tokens[iy], reader),
                                      parse_number(tokens[iz], reader));
            if (normals) {
                cloud.normals.push_back(unit_normal(Vec3(parse_number(tokens[inx], reader),
                                                         parse_number(tokens[iny], reader),
                                                         parse_number(tokens[inz], reader)),
                                                    reader));
            }
        }
    }
    if (!seen_vertex) reader.fail("ply has no vertex element");
    return cloud;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

std::string to_string(CloudFormat f) {
    switch (f) {
        case CloudFormat::ply_ascii: return "ply";
        case CloudFormat::xyz: return "xyz";
        case CloudFormat::xyzn: return "xyzn";
    }
    return "xyz";
}

CloudFormat cloud_format_from_string(const std::string& name) {
    if (name == "ply" || name == "ply-ascii") return CloudFormat::ply_ascii;
    if (name == "xyz") return CloudFormat::xyz;
    if (name == "xyzn") return CloudFormat::xyzn;
    throw ParseError("unknown cloud format '" + name + "'");
}

CloudFormat cloud_format_from_path(const std::string& path) {
    if (ends_with(path, ".ply")) return CloudFormat::ply_ascii;
    if (ends_with(path, ".xyzn")) return CloudFormat::xyzn;
    if (ends_with(path, ".xyz") || ends_with(path, ".txt")) return CloudFormat::xyz;
    throw ParseError("cannot infer cloud format from '" + path + "'");
}

PointCloud parse_cloud(std::string_view text, CloudFormat format, const std::string& source) {
    switch (format) {
        case CloudFormat::ply_ascii: return parse_ply(text, source);
        case CloudFormat::xyz: return parse_rows(text, false, source);
        case CloudFormat::xyzn: return parse_rows(text, true, source);
    }
    return {};
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ParseError("write to '" + path + "' failed");
}

PointCloud load_cloud(const std::string& path, std::optional<CloudFormat> format) {
    return parse_cloud(read_text_file(path), format.value_or(cloud_format_from_path(path)), path);
}

std::string format_cloud(const PointCloud& cloud, CloudFormat format) {
    cloud.validate();
    std::string out;
    const bool normals = cloud.has_normals() && format != CloudFormat::xyz;
    if (format == CloudFormat::xyzn && !cloud.has_normals() && !cloud.empty()) {
        throw InvalidInputError("xyzn output needs normals");
    }
    if (format == CloudFormat::ply_ascii) {
        out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
               "\nproperty double x\nproperty double y\nproperty double z\n";
        if (normals) out += "property double nx\nproperty double ny\nproperty double nz\n";
        out += "end_header\n";
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        out += format_double(p.x()) + ' ' + format_double(p.y()) + ' ' + format_double(p.z());
        if (normals) {
            const Vec3& n = cloud.normals[i];
            out += ' ' + format_double(n.x()) + ' ' + format_double(n.y()) + ' ' + format_double(n.z());
        }
        out += '\n';
    }
    return out;
}

void save_cloud(const std::string& path, const PointCloud& cloud, std::optional<CloudFormat> format) {
    write_text_file(path, format_cloud(cloud, format.value_or(cloud_format_from_path(path))));
}

RigidTransform parse_pose(std::string_view text, const std::string& source) {
    LineReader reader(text, source);
    Mat4 m;
    int row = 0;
    std::string_view line;
    while (reader.next(line)) {
        if (blank_or_comment(line)) continue;
        if (row == 4) reader.fail("pose has more than 4 rows");
        const auto tokens = split_ws(line);
        if (tokens.size() != 4) reader.fail("pose row needs 4 values, found " + std::to_string(tokens.size()));
        for (int c = 0; c < 4; ++c) m(row, c) = parse_number(tokens[static_cast<std::size_t>(c)], reader);
        ++row;
    }
    if (row != 4) reader.fail_eof("pose needs 4 rows, found " + std::to_string(row));
    try {
        return RigidTransform::from_matrix(m);
    } catch (const InvalidInputError& e) {
        throw ParseError(source + ": " + e.what());
    }
}

RigidTransform load_pose(const std::string& path) { return parse_pose(read_text_file(path), path); }

std::string format_pose(const RigidTransform& transform) {
    const Mat4 m = transform.matrix();
    std::string out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (c > 0) out += ' ';
            out += format_double(m(r, c));
        }
        out += '\n';
    }
    return out;
}

void save_pose(const std::string& path, const RigidTransform& transform) {
    write_text_file(path, format_pose(transform));
}

void write_trace_csv(std::ostream& out, const IterationTrace& trace, bool timing) {
    out << "stage,completed,nodes_src,nodes_tgt,candidates,inliers,score,decision,best,wall_ms";
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) out << ",t" << r << c;
    }
    out << ",note\n";
    for (std::size_t s = 0; s < trace.stages.size(); ++s) {
        const StageRecord& st = trace.stages[s];
        out << st.stage << ',' << (st.completed ? 1 : 0) << ',' << st.node_count_src << ',' << st.node_count_tgt << ','
            << st.candidate_count << ',' << st.inlier_count << ',' << format_double(st.score) << ','
            << to_string(st.decision) << ',' << (s == trace.best_stage ? 1 : 0) << ','
            << format_double(timing ? st.wall_ms : 0.0);
        const Mat4 m = st.transform.matrix();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) out << ',' << format_double(m(r, c));
        }
        std::string note = st.note;
        for (char& ch : note) {
            if (ch == ',' || ch == '\n') ch = ';';
        }
        out << ',' << note << '\n';
    }
}

}  // namespace dynreg
