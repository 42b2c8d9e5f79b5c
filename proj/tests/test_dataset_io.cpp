#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "pamic/dataset_io.hpp"
#include "pamic/error.hpp"
#include "tmpdir.hpp"

using namespace pamic;
namespace fs = std::filesystem;

namespace {

Dataset small_dataset() {
    std::vector<ClassGridSpec> specs = default_grid_specs();
    for (auto& s : specs) {
        s.f2_values.resize(1);
        s.f3_count = 2;
        s.f4_count = 2;
        s.xi_values = {0.015, 0.99};
    }
    Dataset d = build_dataset(specs, FrequencyGrid::linear(20.0, 20000.0, 6));
    d.seed = 99;
    d.norm = compute_norm_stats(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

}  // namespace

TEST(DatasetIo, Header) {
    EXPECT_EQ(csv_header(2), "f0001_amp,f0002_amp,f0001_phi,f0002_phi,label");
    const std::string h = csv_header(150);
    EXPECT_EQ(h.substr(0, 10), "f0001_amp,");
    EXPECT_NE(h.find("f0150_phi,label"), std::string::npos);
}

TEST(DatasetIo, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, -2.718281828459045, 1e-300, 6.02214076e23,
                     std::numeric_limits<double>::denorm_min(), 0.0}) {
        EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
    }
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(DatasetIo, RoundTrip) {
    TempDir tmp;
    const Dataset d = small_dataset();
    save_dataset(d, tmp / "d.csv");
    EXPECT_TRUE(fs::exists(tmp / "d.csv.json"));
    const Dataset back = load_dataset(tmp / "d.csv");
    EXPECT_EQ(back.features, d.features);
    EXPECT_EQ(back.labels, d.labels);
    EXPECT_EQ(back.grid, d.grid);
    EXPECT_EQ(back.norm, d.norm);
    EXPECT_EQ(back.specs, d.specs);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.feature_count, 12u);
    EXPECT_FALSE(back.normalized);
    EXPECT_EQ(back.provenance(), d.provenance());
}

TEST(DatasetIo, FileLayout) {
    TempDir tmp;
    const Dataset d = small_dataset();
    save_dataset(d, tmp / "d.csv");
    std::ifstream in(tmp / "d.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, csv_header(6));
    std::getline(in, line);
    EXPECT_EQ(line.back(), '0');
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
    EXPECT_EQ(line.find(' '), std::string::npos);
    std::size_t rows = 0;
    in.seekg(0);
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, d.size() + 1);
}

TEST(DatasetIo, SaveTwiceIsByteIdentical) {
    TempDir tmp;
    const Dataset d = small_dataset();
    save_dataset(d, tmp / "a.csv");
    save_dataset(d, tmp / "b.csv");
    EXPECT_EQ(slurp(tmp / "a.csv"), slurp(tmp / "b.csv"));
    EXPECT_EQ(slurp(tmp / "a.csv.json"), slurp(tmp / "b.csv.json"));
}

TEST(DatasetIo, MissingFilesAreIoErrors) {
    TempDir tmp;
    EXPECT_THROW(load_dataset(tmp / "nope.csv"), IoError);
    const Dataset d = small_dataset();
    save_dataset(d, tmp / "d.csv");
    fs::remove(tmp / "d.csv");
    EXPECT_THROW(load_dataset(tmp / "d.csv"), IoError);
    EXPECT_THROW(save_dataset(d, tmp / "no-such-dir" / "d.csv"), IoError);
}

TEST(DatasetIo, WrongFeatureCountIsSchemaError) {
    TempDir tmp;
    save_dataset(small_dataset(), tmp / "d.csv");
    std::string text = slurp(tmp / "d.csv");
    const auto eol = text.find('\n');
    text.replace(0, eol, csv_header(5));
    spit(tmp / "d.csv", text);
    EXPECT_THROW(load_dataset(tmp / "d.csv"), SchemaError);
}

TEST(DatasetIo, TruncatedFileIsParseError) {
    TempDir tmp;
    save_dataset(small_dataset(), tmp / "d.csv");
    const std::string text = slurp(tmp / "d.csv");
    // Cut mid-record.
    spit(tmp / "d.csv", text.substr(0, text.size() - 20));
    EXPECT_THROW(load_dataset(tmp / "d.csv"), ParseError);
    // Cut on a line boundary: fewer records than declared.
    const auto last = text.rfind('\n', text.size() - 2);
    spit(tmp / "d.csv", text.substr(0, last + 1));
    EXPECT_THROW(load_dataset(tmp / "d.csv"), ParseError);
    spit(tmp / "d.csv", "");
    EXPECT_THROW(load_dataset(tmp / "d.csv"), ParseError);
}

TEST(DatasetIo, MalformedValues) {
    TempDir tmp;
    save_dataset(small_dataset(), tmp / "d.csv");
    const std::string text = slurp(tmp / "d.csv");
    const auto second = text.find('\n') + 1;

    std::string bad = text;
    bad.replace(second, 1, "x");
    spit(tmp / "d.csv", bad);
    EXPECT_THROW(load_dataset(tmp / "d.csv"), ParseError);

    bad = text;
    const auto eol = bad.find('\n', second);
    bad[eol - 1] = '7';
    spit(tmp / "d.csv", bad);
    EXPECT_THROW(load_dataset(tmp / "d.csv"), SchemaError);

    spit(tmp / "d.csv", text + text.substr(second, text.find('\n', second) - second + 1));
    EXPECT_THROW(load_dataset(tmp / "d.csv"), SchemaError);
}

TEST(DatasetIo, SidecarErrors) {
    TempDir tmp;
    save_dataset(small_dataset(), tmp / "d.csv");
    const std::string side = slurp(tmp / "d.csv.json");
    spit(tmp / "d.csv.json", "{ not json");
    EXPECT_THROW(load_dataset(tmp / "d.csv"), ParseError);
    spit(tmp / "d.csv.json", "{}");
    EXPECT_THROW(load_dataset(tmp / "d.csv"), SchemaError);
    std::string v2 = side;
    v2.replace(v2.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
    spit(tmp / "d.csv.json", v2);
    EXPECT_THROW(load_dataset(tmp / "d.csv"), SchemaError);
}
