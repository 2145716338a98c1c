#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace hopf {

// Round-trip decimal form of a double ("%.17g"); "nan"/"inf"/"-inf" for
// non-finite values. Every CSV/JSON number goes through this so reruns are
// byte-identical.
std::string num(double value);

// Minimal CSV builder: fixed header, rows of numbers.
class CsvTable {
public:
    explicit CsvTable(std::initializer_list<std::string_view> columns);
    void add_row(const std::vector<double>& values);
    std::string str() const;
    std::size_t rows() const { return rows_; }

private:
    std::size_t width_;
    std::size_t rows_ = 0;
    std::string text_;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace hopf
