#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "signest/errors.hpp"

// CSV output with one header row and 17-significant-digit numeric cells,
// which round-trip 64-bit floats exactly. Identical inputs produce
// byte-identical files.

namespace signest {

/// Decimal form of a double that parses back to the same bits.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::trunc) {
        if (!out_) throw IoError("csv: cannot open '" + path + "' for writing");
    }

    void header(const std::vector<std::string>& cols) { line(cols); }

    void row(const std::vector<std::string>& cells) { line(cells); }

  private:
    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw IoError("csv: write failed");
    }

    std::ofstream out_;
};

}  // namespace signest
