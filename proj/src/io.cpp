#include "qcmv/io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace qcmv {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& header) : os_(os), cols_(header.size()) {
    for (const auto& h : header) cell(h);
    end_row();
}

std::string CsvWriter::quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char c : s) {
        if (c == '"') r += '"';
        r += c;
    }
    return r + "\"";
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    if (cur_ > 0) os_ << ',';
    os_ << quote(s);
    ++cur_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(fmt_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (cur_ != cols_) throw std::logic_error("csv row has " + std::to_string(cur_) + " cells, header has " +
                                             std::to_string(cols_));
    os_ << "\r\n";
    cur_ = 0;
}

}  // namespace qcmv
