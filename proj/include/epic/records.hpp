#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "epic/errors.hpp"

namespace epic {

// One labeled, geolocated, month-stamped sequence. `month` is the index
// within the study window (0 = earliest month in the corpus); `month_label`
// keeps the original YYYY-MM for round-tripping through the TSV format.
struct SequenceRecord {
    std::string id;
    std::string sequence;
    std::string country;
    int month = 0;
    std::string month_label;
    std::string lineage;
};

namespace detail {

// "YYYY-MM" -> absolute month number
inline int parse_month_label(const std::string& s) {
    if (s.size() != 7 || s[4] != '-' ||
        !std::all_of(s.begin(), s.begin() + 4, [](char c) { return c >= '0' && c <= '9'; }) ||
        !std::all_of(s.begin() + 5, s.end(), [](char c) { return c >= '0' && c <= '9'; }))
        throw IoError("bad month '" + s + "', expected YYYY-MM");
    const int year = std::stoi(s.substr(0, 4));
    const int mon = std::stoi(s.substr(5, 2));
    if (mon < 1 || mon > 12) throw IoError("bad month '" + s + "', expected YYYY-MM");
    return year * 12 + (mon - 1);
}

inline std::string format_month_label(int absolute) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", absolute / 12, absolute % 12 + 1);
    return buf;
}

} // namespace detail

// Dataset file format: tab-separated, one record per line,
// id<TAB>sequence<TAB>country<TAB>month<TAB>lineage with month as YYYY-MM.
// Lines starting with '#' are comments. Month indices are rebased so the
// earliest month in the file becomes 0.
inline std::vector<SequenceRecord> read_tsv(std::istream& in) {
    std::vector<SequenceRecord> records;
    std::vector<int> absolute;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cols;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == '\t') {
                cols.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cols.size() != 5)
            throw IoError("line " + std::to_string(lineno) + ": expected 5 tab-separated columns, got " +
                          std::to_string(cols.size()));
        SequenceRecord r;
        r.id = cols[0];
        r.sequence = cols[1];
        r.country = cols[2];
        r.month_label = cols[3];
        r.lineage = cols[4];
        if (r.sequence.empty()) throw IoError("line " + std::to_string(lineno) + ": empty sequence");
        absolute.push_back(detail::parse_month_label(r.month_label));
        records.push_back(std::move(r));
    }
    if (!records.empty()) {
        const int base = *std::min_element(absolute.begin(), absolute.end());
        for (std::size_t i = 0; i < records.size(); ++i) records[i].month = absolute[i] - base;
    }
    return records;
}

inline std::vector<SequenceRecord> read_tsv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file '" + path + "'");
    return read_tsv(in);
}

inline void write_tsv(std::ostream& out, const std::vector<SequenceRecord>& records) {
    out << "# id\tsequence\tcountry\tmonth\tlineage\n";
    for (const auto& r : records)
        out << r.id << '\t' << r.sequence << '\t' << r.country << '\t' << r.month_label << '\t' << r.lineage
            << '\n';
}

inline void write_tsv_file(const std::string& path, const std::vector<SequenceRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file '" + path + "'");
    write_tsv(out, records);
    out.flush();
    if (!out) throw IoError("error writing dataset file '" + path + "'");
}

inline std::vector<std::string> distinct_countries(const std::vector<SequenceRecord>& records) {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.country);
    return {s.begin(), s.end()};
}

inline std::vector<int> distinct_months(const std::vector<SequenceRecord>& records) {
    std::set<int> s;
    for (const auto& r : records) s.insert(r.month);
    return {s.begin(), s.end()};
}

inline std::vector<std::string> distinct_lineages(const std::vector<SequenceRecord>& records) {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.lineage);
    return {s.begin(), s.end()};
}

} // namespace epic
