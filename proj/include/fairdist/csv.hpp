#pragma once

#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include "fairdist/common.hpp"

namespace fairdist::csv {

/// Parsed CSV: header row plus data rows, all fields as raw strings.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        throw Error("csv: column '" + name + "' not found");
    }

    bool has_column(const std::string& name) const {
        for (const auto& h : header)
            if (h == name) return true;
        return false;
    }
};

// RFC-4180 field splitting: quoted fields may contain commas, newlines and
// doubled quotes. Accepts both LF and CRLF line endings.
inline std::vector<std::vector<std::string>> parse_records(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    bool record_started = false;
    int c;
    while ((c = in.get()) != EOF) {
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            in_quotes = true;
            field_started = true;
            record_started = true;
            break;
        case ',':
            record.push_back(field);
            field.clear();
            field_started = false;
            record_started = true;
            break;
        case '\r':
            break;
        case '\n':
            if (record_started || field_started || !field.empty()) {
                record.push_back(field);
                records.push_back(record);
            }
            field.clear();
            record.clear();
            field_started = false;
            record_started = false;
            break;
        default:
            field.push_back(ch);
            record_started = true;
            break;
        }
    }
    ensure(!in_quotes, "csv: unterminated quoted field");
    if (record_started || !field.empty()) {
        record.push_back(field);
        records.push_back(record);
    }
    return records;
}

inline Table read(std::istream& in) {
    auto records = parse_records(in);
    ensure(!records.empty(), "csv: no header row");
    Table t;
    t.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        ensure(records[i].size() == t.header.size(),
               "csv: row ", i, " has ", records[i].size(), " fields, expected ", t.header.size());
        t.rows.push_back(std::move(records[i]));
    }
    return t;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    ensure(in.good(), "csv: cannot open '", path, "'");
    return read(in);
}

inline std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += "\"";
    return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << quote_if_needed(fields[i]);
    }
    out << '\n';
}

} // namespace fairdist::csv
