#ifndef RHOSPHERE_CLI_FORMAT_HPP
#define RHOSPHERE_CLI_FORMAT_HPP

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhosphere/error.hpp"

namespace rhosphere::cli {

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_number(std::size_t v) { return std::to_string(v); }

class IoError : public Error {
public:
    using Error::Error;
};

/// CSV file with a header row and LF line endings.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header)
        : CsvWriter(path, std::vector<std::string>(header.begin(), header.end())) {}

    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
        if (!out_) throw IoError("cannot write " + path.string());
        write_row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_)
            throw IoError(path_.string() + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(columns_));
        write_row(cells);
    }

    void close() {
        out_.flush();
        if (!out_) throw IoError("write failed: " + path_.string());
        out_.close();
    }

private:
    void write_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
};

/// Ordered key = value document.
class Metadata {
public:
    void set(std::string key, std::string value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = std::move(value);
                return;
            }
        entries_.emplace_back(std::move(key), std::move(value));
    }
    void set(std::string key, double value) { set(std::move(key), format_number(value)); }
    void set(std::string key, std::size_t value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
    void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    void write(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
        out.flush();
        if (!out) throw IoError("write failed: " + path.string());
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace rhosphere::cli

#endif  // RHOSPHERE_CLI_FORMAT_HPP
