#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

namespace criot::csv {

/// Numbers use 12 significant digits; non-finite values print as nan/inf/-inf.
inline std::string number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string boolean(bool b) { return b ? "true" : "false"; }

/// Accumulates rows of one CSV document.
class Table {
public:
    explicit Table(std::vector<std::string> header) : columns_(header.size()) { append(header); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw std::logic_error("csv row width does not match header");
        append(cells);
    }

    const std::string& str() const noexcept { return text_; }

private:
    void append(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    std::size_t columns_;
    std::string text_;
};

/// A set of output files published together: everything is written to
/// temporaries first and renamed into place only once all writes succeeded,
/// so a failure never leaves a truncated file behind. If a rename fails, the
/// files already published by this commit are removed again.
class OutputSet {
public:
    void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

    std::vector<std::filesystem::path> commit(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

        std::vector<fs::path> temps;
        std::vector<fs::path> finals;
        auto cleanup = [&] {
            for (const auto& t : temps) fs::remove(t, ec);
        };
        for (const auto& [name, content] : files_) {
            const fs::path target = dir / name;
            const fs::path temp = dir / (name + ".tmp");
            temps.push_back(temp);
            std::ofstream os(temp, std::ios::binary | std::ios::trunc);
            os << content;
            os.close();
            if (!os) {
                cleanup();
                throw std::runtime_error("cannot write " + temp.string());
            }
            finals.push_back(target);
        }
        for (std::size_t i = 0; i < temps.size(); ++i) {
            fs::rename(temps[i], finals[i], ec);
            if (ec) {
                const std::string msg = "cannot publish " + finals[i].string() + ": " + ec.message();
                cleanup();
                for (std::size_t k = 0; k < i; ++k) fs::remove(finals[k], ec);
                throw std::runtime_error(msg);
            }
        }
        return finals;
    }

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace criot::csv
