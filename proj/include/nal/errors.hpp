#pragma once

#include <stdexcept>
#include <string>

namespace nal {

// Exit codes follow the CLI contract: 1 validation, 2 not regular, 3 accuracy,
// 4 non-convergence, 5 decomposition failure.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int code) : std::runtime_error(what), code_(code) {}
    int exit_code() const { return code_; }

private:
    int code_;
};

struct InputError : Error {
    explicit InputError(const std::string& w) : Error(w, 1) {}
};
struct NotRegularError : Error {
    explicit NotRegularError(const std::string& w) : Error(w, 2) {}
};
struct AccuracyError : Error {
    AccuracyError(const std::string& w, double partial, double estimate)
        : Error(w, 3), partial_value(partial), error_estimate(estimate) {}
    double partial_value;
    double error_estimate;
};
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& w) : Error(w, 4) {}
};
struct DecompositionError : Error {
    explicit DecompositionError(const std::string& w) : Error(w, 5) {}
};

}  // namespace nal
