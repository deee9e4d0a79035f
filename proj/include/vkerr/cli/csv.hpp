#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "vkerr/errors.hpp"

namespace vkerr::cli {

// 17 significant digits round-trips every double.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> header) : out_(path, std::ios::binary) {
        if (!out_) throw InvalidParameter("cannot write '" + path + "'");
        columns_ = header.size();
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw InternalInconsistency("CSV row width does not match header");
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (k) out_ << ',';
            out_ << cells[k];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

}  // namespace vkerr::cli
