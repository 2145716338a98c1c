#include "hopfgeom/io.hpp"

#include "hopfgeom/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hopf {

std::string num(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

CsvTable::CsvTable(std::initializer_list<std::string_view> columns) : width_(columns.size()) {
    bool first = true;
    for (std::string_view c : columns) {
        if (!first) text_ += ',';
        text_ += c;
        first = false;
    }
    text_ += '\n';
}

void CsvTable::add_row(const std::vector<double>& values) {
    if (values.size() != width_) throw Error("cli_reports", "CSV row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) text_ += ',';
        text_ += num(values[i]);
    }
    text_ += '\n';
    ++rows_;
}

std::string CsvTable::str() const { return text_; }

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cli_reports", "cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace hopf
