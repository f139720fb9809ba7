#pragma once

// Locale-independent CSV output.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "hetvar/harness.hpp"

namespace hetvar::io {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc{}) throw std::logic_error("format_double: buffer too small");
    return std::string(buf, res.ptr);
}

inline std::string format_uint(std::uint64_t x) { return std::to_string(x); }

/// Quotes a field only when it holds a separator, quote or newline.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << csv_field(fields[i]);
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

inline const std::vector<std::string>& trial_summary_header() {
    static const std::vector<std::string> h{"algorithm", "instance_id", "n",        "m",      "epsilon",
                                            "delta",     "trials",      "failures", "failure_rate",
                                            "ci_lo",     "ci_hi",       "mean_samples", "stddev", "seed_base"};
    return h;
}

inline std::vector<std::string> trial_summary_row(const TrialSummary& s) {
    return {s.algorithm,
            s.instance_id,
            format_uint(s.n),
            format_uint(s.m),
            format_double(s.epsilon),
            format_double(s.delta),
            format_uint(s.trials),
            format_uint(s.failures),
            format_double(s.failure_rate),
            format_double(s.wilson_ci95.first),
            format_double(s.wilson_ci95.second),
            format_double(s.mean_samples),
            format_double(s.samples_stddev),
            format_uint(s.seed_base)};
}

}  // namespace hetvar::io
