#pragma once

// Internal helpers for delimited text files.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kgaudit/error.hpp"

namespace kgaudit::text {

/// Iterates non-empty, non-comment lines and splits them on `delim`.
class RowReader {
public:
    RowReader(std::istream& in, char delim, std::string_view source) : in_(in), delim_(delim), source_(source) {}

    bool next() {
        while (std::getline(in_, line_)) {
            ++line_no_;
            if (!line_.empty() && line_.back() == '\r') line_.pop_back();
            if (line_.empty() || line_.front() == '#') continue;
            fields_.clear();
            std::string_view rest(line_);
            for (;;) {
                auto pos = rest.find(delim_);
                fields_.push_back(rest.substr(0, pos));
                if (pos == std::string_view::npos) break;
                rest.remove_prefix(pos + 1);
            }
            return true;
        }
        return false;
    }

    const std::vector<std::string_view>& fields() const noexcept { return fields_; }
    std::size_t line() const noexcept { return line_no_; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(std::string(source_), line_no_, what); }

    void expect_arity(std::size_t n) const {
        if (fields_.size() != n)
            fail("expected " + std::to_string(n) + " fields, got " + std::to_string(fields_.size()));
    }

    double to_double(std::size_t i) const {
        auto f = fields_[i];
        double v = 0;
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || p != f.data() + f.size()) fail("field " + std::to_string(i + 1) + " is not numeric");
        return v;
    }

    std::int64_t to_int(std::size_t i) const {
        auto f = fields_[i];
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || p != f.data() + f.size()) fail("field " + std::to_string(i + 1) + " is not an integer");
        return v;
    }

private:
    std::istream& in_;
    char delim_;
    std::string_view source_;
    std::string line_;
    std::size_t line_no_ = 0;
    std::vector<std::string_view> fields_;
};

inline std::ifstream open_input(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("cannot open input file " + p.string());
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write output file " + p.string());
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace kgaudit::text
