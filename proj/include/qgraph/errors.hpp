#ifndef QGRAPH_ERRORS_HPP
#define QGRAPH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qgraph {

/// Error while reading a graph description or a surgery string.
/// Carries a 1-based line/column where known (0 = not applicable).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string message, int line = 0, int column = 0)
        : std::runtime_error(format(message, line, column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& message, int line, int column) {
        if (line <= 0) return message;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) +
               ": " + message;
    }

    int line_;
    int column_;
};

/// Failure inside assembly or the eigenvalue solve (bad mass matrix,
/// unsatisfiable residual tolerance, k out of range, ...).
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& message) : std::runtime_error(message) {}
};

/// A graph transformation that is not applicable to the given vertices
/// or conditions (wrong condition family, decoupled endpoint, ...).
class SurgeryError : public std::runtime_error {
public:
    explicit SurgeryError(const std::string& message) : std::runtime_error(message) {}
};

}  // namespace qgraph

#endif
