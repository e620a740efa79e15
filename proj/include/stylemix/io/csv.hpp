#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "stylemix/error.hpp"

namespace stylemix::io {

/// Fields are quoted only when they hold a comma, quote, CR or LF; records end in CRLF.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : width_(header.size()) { row(header); }

    void row(const std::vector<std::string>& fields) {
        if (fields.size() != width_) {
            throw FormatError("csv row has " + std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(width_));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out_ += ',';
            }
            append_field(fields[i]);
        }
        out_ += "\r\n";
    }

    const std::string& str() const noexcept { return out_; }

private:
    void append_field(std::string_view f) {
        if (f.find_first_of(",\"\r\n") == std::string_view::npos) {
            out_ += f;
            return;
        }
        out_ += '"';
        for (char c : f) {
            if (c == '"') {
                out_ += '"';
            }
            out_ += c;
        }
        out_ += '"';
    }

    std::size_t width_;
    std::string out_;
};

/// Shortest text that reads back as the same double; "nan" for NaN.
inline std::string fmt(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    char buf[32];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) {
            break;
        }
    }
    return buf;
}

/// RFC-4180 parser for files written by CsvWriter and by common tools.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            if (!field.empty()) {
                throw FormatError("csv: quote inside an unquoted field");
            }
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) {
        throw FormatError("csv: unterminated quoted field");
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace stylemix::io
