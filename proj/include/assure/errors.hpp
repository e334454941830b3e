#pragma once

#include <stdexcept>
#include <string>

namespace assure {

struct InvalidDesignError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidPriorError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MissingDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values encountered mid-computation; what() carries the diagnostic.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A search target could not be reached on the given grid.
struct NotAchievableError : std::runtime_error {
    double max_estimate;
    int at_n_total;
    NotAchievableError(const std::string& msg, double max_est, int n_total)
        : std::runtime_error(msg), max_estimate(max_est), at_n_total(n_total) {}
};

// Config-file problem; line < 0 means no specific line.
struct ConfigError : std::runtime_error {
    int line;
    explicit ConfigError(const std::string& msg, int line_no = -1)
        : std::runtime_error(line_no >= 0 ? "line " + std::to_string(line_no) + ": " + msg
                                          : msg),
          line(line_no) {}
};

}  // namespace assure
