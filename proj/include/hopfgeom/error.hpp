#pragma once

#include <stdexcept>
#include <string>

namespace hopf {

// Root of every exception thrown by the library. `module()` names the
// component that raised it so the CLI can attribute failures.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

// Syntax error in a metric spec file or expression. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error("metric_kernel", "line " + std::to_string(line) + ", column " +
                                     std::to_string(column) + ": " + msg),
          line_(line), column_(column) {}
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class InvariantError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// A mathematical premise (no conjugate points, monotonicity, lemma
// hypothesis) is not met by the data. Distinct from operational failure.
class PremiseViolation : public Error {
public:
    using Error::Error;
};

}  // namespace hopf
