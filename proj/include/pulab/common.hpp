#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace pulab {

using cplx = std::complex<double>;
using cplxl = std::complex<long double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;
inline constexpr cplx I{0.0, 1.0};

inline constexpr const char* version_string = "pulab 1.0.0";

/// Failure categories; the CLI maps them onto distinct exit codes.
enum class ErrorKind { config, degenerate, accuracy, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Input violates a documented precondition.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error(ErrorKind::config, w) {}
};

/// Double zero of the characteristic function, or a vanishing derivative at a root.
struct DegenerateModes : Error {
    explicit DegenerateModes(const std::string& w) : Error(ErrorKind::degenerate, w) {}
};

/// Argument-principle count differs from the number of roots found.
struct ContourMiss : Error {
    explicit ContourMiss(const std::string& w) : Error(ErrorKind::accuracy, w) {}
};

/// A special-function evaluation could not certify its accuracy.
struct AccuracyLoss : Error {
    explicit AccuracyLoss(const std::string& w) : Error(ErrorKind::accuracy, w) {}
};

/// Evaluation exactly at a pole of a meromorphic expression.
struct PoleHit : Error {
    explicit PoleHit(const std::string& w) : Error(ErrorKind::degenerate, w) {}
};

/// Harmonic kernel requested at a focal time (sin(wt) = 0).
struct CausticError : Error {
    explicit CausticError(const std::string& w) : Error(ErrorKind::degenerate, w) {}
};

struct OverflowGuard : Error {
    explicit OverflowGuard(const std::string& w) : Error(ErrorKind::accuracy, w) {}
};

/// Linear solve or composition failed.
struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& w) : Error(ErrorKind::internal, w) {}
};

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline double rel_err(cplx a, cplx b) {
    double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}

}  // namespace pulab
