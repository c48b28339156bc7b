#pragma once

#include <stdexcept>
#include <string>

namespace dcdc {

/// det ξ(λ) is not a nonzero constant, so the adjugate closed-form solver
/// does not apply.
class NotConstantDeterminant : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The leading coefficient matrix is already nonsingular; no ω₀ step exists.
class NotSingularLeading : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row compression failed to produce an invertible P.
class SingularP : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A simulation state stopped being finite (instability or a step size that
/// is too large). Carries the time of failure.
class NonFiniteState : public std::runtime_error {
public:
    NonFiniteState(const std::string& what, double t)
        : std::runtime_error(what), time(t) {}
    double time;
};

/// The tuner exhausted its budget without finding a stable gain set.
class NoFeasiblePoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sweep axis does not name a real field of the parameter or gain structs.
class UnknownAxis : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Configuration file or override could not be parsed / validated.
/// line == 0 means the error is not tied to a specific line.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + what
                                         : what),
          line(line_no) {}
    int line;
};

} // namespace dcdc
