#include "pamic/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <vector>

#include "json_util.hpp"
#include "pamic/error.hpp"

namespace pamic {

using detail::json;

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
    std::filesystem::path p = csv_path;
    p += ".json";
    return p;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string csv_header(std::size_t grid_count) {
    std::string h;
    char buf[32];
    for (const char* suffix : {"amp", "phi"}) {
        for (std::size_t i = 1; i <= grid_count; ++i) {
            std::snprintf(buf, sizeof buf, "f%04zu_%s,", i, suffix);
            h += buf;
        }
    }
    h += "label";
    return h;
}

void write_dataset_csv(const Dataset& d, std::ostream& out) {
    if (d.feature_count != 2 * d.grid.count()) {
        throw DimensionError("dataset feature count disagrees with its grid");
    }
    out << csv_header(d.grid.count()) << '\n';
    std::string line;
    char buf[32];
    for (std::size_t r = 0; r < d.size(); ++r) {
        line.clear();
        for (double v : d.row(r)) {
            const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
            line.append(buf, res.ptr);
            line += ',';
        }
        line += static_cast<char>('0' + d.labels[r]);
        line += '\n';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
}

namespace {

json sidecar_json(const Dataset& d) {
    json specs = json::array();
    for (const auto& s : d.specs) specs.push_back(detail::spec_to_json(s));
    json j;
    j["schema_version"] = kDatasetSchemaVersion;
    j["grid"] = detail::grid_to_json(d.grid);
    j["specs"] = specs;
    j["norm_max_abs"] = d.norm ? json(d.norm->max_abs) : json(nullptr);
    j["normalized"] = d.normalized;
    j["seed"] = d.seed;
    j["record_count"] = d.size();
    j["feature_count"] = d.feature_count;
    j["provenance"] = d.provenance();
    return j;
}

}  // namespace

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        std::vector<char> buffer(1 << 20);
        out.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        write_dataset_csv(d, out);
        out.flush();
        if (!out) throw IoError("failed writing " + path.string());
    }
    const auto side = sidecar_path(path);
    std::ofstream js(side, std::ios::binary);
    if (!js) throw IoError("cannot open " + side.string() + " for writing");
    js << sidecar_json(d).dump(2) << '\n';
    if (!js) throw IoError("failed writing " + side.string());
}

namespace {

json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(p.string() + ": " + e.what());
    }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    const json side = read_json_file(sidecar_path(path));
    if (detail::get_field<int>(side, "schema_version") != kDatasetSchemaVersion) {
        throw SchemaError("unsupported dataset schema version");
    }
    Dataset d;
    d.grid = detail::grid_from_json(detail::get_field<json>(side, "grid"));
    for (const auto& s : detail::get_field<json>(side, "specs")) d.specs.push_back(detail::spec_from_json(s));
    d.seed = detail::get_field<std::uint64_t>(side, "seed");
    d.normalized = detail::get_field<bool>(side, "normalized");
    d.feature_count = 2 * d.grid.count();
    if (detail::get_field<std::size_t>(side, "feature_count") != d.feature_count) {
        throw SchemaError("sidecar feature_count disagrees with its grid");
    }
    const auto record_count = detail::get_field<std::size_t>(side, "record_count");
    const json& norm = side.at("norm_max_abs");
    if (!norm.is_null()) {
        d.norm = NormStats{detail::get_field<std::vector<double>>(side, "norm_max_abs")};
        if (d.norm->max_abs.size() != d.feature_count) {
            throw SchemaError("norm_max_abs length disagrees with the feature count");
        }
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> buffer(1 << 20);
    in.rdbuf()->pubsetbuf(buffer.data(), static_cast<std::streamsize>(buffer.size()));

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header");
    if (line != csv_header(d.grid.count())) {
        std::size_t cols = 1;
        for (char c : line) cols += c == ',' ? 1 : 0;
        throw SchemaError(path.string() + ": header has " + std::to_string(cols) +
                          " columns, sidecar implies " + std::to_string(d.feature_count + 1));
    }

    d.features.reserve(record_count * d.feature_count);
    d.labels.reserve(record_count);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (in.eof()) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             " is not newline-terminated (truncated file)");
        }
        const char* p = line.data();
        const char* end = p + line.size();
        for (std::size_t i = 0; i < d.feature_count; ++i) {
            double v;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc() || res.ptr == end || *res.ptr != ',') {
                throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                                 ": bad or missing feature " + std::to_string(i + 1));
            }
            d.features.push_back(v);
            p = res.ptr + 1;
        }
        int label = -1;
        const auto res = std::from_chars(p, end, label);
        if (res.ec != std::errc() || res.ptr != end) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                             ": bad label field");
        }
        if (label < 0 || label >= static_cast<int>(kNumClasses)) {
            throw SchemaError(path.string() + ": line " + std::to_string(line_no) +
                              ": label outside {0,1,2}");
        }
        d.labels.push_back(static_cast<std::uint8_t>(label));
    }
    if (d.size() < record_count) {
        throw ParseError(path.string() + ": truncated, " + std::to_string(d.size()) + " of " +
                         std::to_string(record_count) + " records");
    }
    if (d.size() > record_count) {
        throw SchemaError(path.string() + ": more records than the sidecar declares");
    }
    return d;
}

}  // namespace pamic
