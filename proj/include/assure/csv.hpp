#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace assure {

// RFC-4180-style CSV emission plus '#' provenance/metadata comment lines.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void comment(const std::string& text) { out_ << "# " << text << "\n"; }

    void header(const std::vector<std::string>& cols) { emit_row(cols); }

    void row(const std::vector<std::string>& fields) { emit_row(fields); }

    static std::string field(const std::string& s) { return s; }
    static std::string field(const char* s) { return s; }
    static std::string field(int v) { return std::to_string(v); }
    static std::string field(long v) { return std::to_string(v); }
    static std::string field(unsigned long v) { return std::to_string(v); }
    static std::string field(unsigned long long v) { return std::to_string(v); }

    // Fixed shortest-round-trip-ish formatting so identical runs emit
    // identical bytes.
    static std::string field(double v, const char* fmt = "%.10g") {
        char buf[64];
        std::snprintf(buf, sizeof buf, fmt, v);
        return buf;
    }

  private:
    void emit_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quoted(fields[i]);
        }
        out_ << "\n";
    }

    static std::string quoted(const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        q += '"';
        return q;
    }

    std::ostream& out_;
};

}  // namespace assure
