#pragma once

// Deterministic table emission.  Both writers share one Table shape: named
// columns, typed cells, and an ordered metadata block.  Floats are printed
// with %.{precision}g so identical inputs always produce identical bytes;
// CSV carries the metadata as trailing #-prefixed lines, JSON as a "meta"
// object next to "rows".

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace optomech {

// FNV-1a, 64-bit: tiny, stable, good enough to fingerprint a config string.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

inline std::string format_double(double v, int precision = 15) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return std::string(buf);
}

// One table cell; numbers and booleans are stored pre-formatted so the two
// writers cannot disagree about a value's spelling.
struct Cell {
    enum class Kind { number, text, boolean, empty } kind = Kind::empty;
    std::string value;

    Cell() = default;
    static Cell num(double v, int precision) { return {Kind::number, format_double(v, precision)}; }
    static Cell integer(long long v) { return {Kind::number, std::to_string(v)}; }
    static Cell text(std::string s) { return {Kind::text, std::move(s)}; }
    static Cell boolean(bool b) { return {Kind::boolean, b ? "true" : "false"}; }
    static Cell none() { return {}; }

private:
    Cell(Kind k, std::string v) : kind(k), value(std::move(v)) {}
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::pair<std::string, Cell>> meta;  // emitted in insertion order

    void add_meta(std::string key, Cell value) {
        meta.emplace_back(std::move(key), std::move(value));
    }
};

namespace detail {

inline bool csv_needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\n") != std::string::npos;
}

inline void write_csv_field(std::ostream& os, const std::string& s) {
    if (!csv_needs_quotes(s)) {
        os << s;
        return;
    }
    os << '"';
    for (const char c : s) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

inline void write_json_string(std::ostream& os, const std::string& s) {
    os << '"';
    for (const char c : s) {
        switch (c) {
            case '"': os << "\\\""; break;
            case '\\': os << "\\\\"; break;
            case '\n': os << "\\n"; break;
            case '\r': os << "\\r"; break;
            case '\t': os << "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    os << buf;
                } else {
                    os << c;
                }
        }
    }
    os << '"';
}

inline void write_json_cell(std::ostream& os, const Cell& c) {
    switch (c.kind) {
        case Cell::Kind::number:
        case Cell::Kind::boolean: os << c.value; break;
        case Cell::Kind::text: write_json_string(os, c.value); break;
        case Cell::Kind::empty: os << "null"; break;
    }
}

}  // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) os << ',';
        detail::write_csv_field(os, t.columns[i]);
    }
    os << '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            detail::write_csv_field(os, row[i].value);
        }
        os << '\n';
    }
    for (const auto& [key, value] : t.meta) os << "# " << key << '=' << value.value << '\n';
}

inline void write_json(std::ostream& os, const Table& t) {
    os << "{\n  \"meta\": {";
    for (std::size_t i = 0; i < t.meta.size(); ++i) {
        os << (i ? ",\n    " : "\n    ");
        detail::write_json_string(os, t.meta[i].first);
        os << ": ";
        detail::write_json_cell(os, t.meta[i].second);
    }
    os << "\n  },\n  \"rows\": [";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << (r ? ",\n    {" : "\n    {");
        for (std::size_t i = 0; i < t.rows[r].size(); ++i) {
            os << (i ? ", " : "");
            detail::write_json_string(os, t.columns[i]);
            os << ": ";
            detail::write_json_cell(os, t.rows[r][i]);
        }
        os << '}';
    }
    os << "\n  ]\n}\n";
}

inline void write_table(std::ostream& os, const Table& t, const std::string& format) {
    if (format == "json")
        write_json(os, t);
    else
        write_csv(os, t);
}

}  // namespace optomech
