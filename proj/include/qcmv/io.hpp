#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace qcmv {

// 17 significant digits, round-trips every double.
std::string fmt_double(double v);

// RFC-4180 writer: CRLF line ends, fields quoted only when needed.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::vector<std::string>& header);
    CsvWriter& cell(const std::string& s);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(bool v) { return cell(std::string(v ? "true" : "false")); }
    void end_row();

    static std::string quote(const std::string& s);

private:
    std::ostream& os_;
    std::size_t cols_;
    std::size_t cur_ = 0;
};

}  // namespace qcmv
