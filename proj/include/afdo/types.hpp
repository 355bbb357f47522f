#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

namespace afdo {

inline constexpr double pi = std::numbers::pi;
inline constexpr double sqrt2 = std::numbers::sqrt2;

/// One instance of the asymmetrically forced damped Duffing oscillator
///
///   x' = y
///   y' = x - x^3 + (x - beta x^2) eps gamma cos(omega t) - eps delta y
struct Params {
    double epsilon = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double omega = 1.0;
    double beta = 0.0;

    double period() const { return 2.0 * pi / omega; }

    bool valid() const
    {
        return std::isfinite(epsilon) && std::isfinite(delta) && std::isfinite(gamma) &&
               std::isfinite(omega) && std::isfinite(beta) && omega > 0.0;
    }

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const
    {
        if (!valid()) {
            throw std::invalid_argument("afdo::Params: fields must be finite and omega > 0");
        }
    }

    Params with_epsilon(double e) const
    {
        Params q = *this;
        q.epsilon = e;
        return q;
    }
};

struct PhaseState {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PhaseState&, const PhaseState&) = default;
};

inline PhaseState operator+(PhaseState a, PhaseState b) { return {a.x + b.x, a.y + b.y}; }
inline PhaseState operator-(PhaseState a, PhaseState b) { return {a.x - b.x, a.y - b.y}; }
inline PhaseState operator*(double s, PhaseState a) { return {s * a.x, s * a.y}; }
inline double dot(PhaseState a, PhaseState b) { return a.x * b.x + a.y * b.y; }
inline double cross(PhaseState a, PhaseState b) { return a.x * b.y - a.y * b.x; }
inline double norm(PhaseState a) { return std::hypot(a.x, a.y); }
inline double distance(PhaseState a, PhaseState b) { return norm(a - b); }

/// Which homoclinic loop of the saddle: left (x < 0) or right (x > 0).
enum class Side { left, right };

inline constexpr std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }
inline constexpr Side opposite(Side s) { return s == Side::left ? Side::right : Side::left; }
inline constexpr double sign_of(Side s) { return s == Side::left ? -1.0 : 1.0; }

/// Thrown when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Thrown by the integrator when a trajectory leaves the escape box.
class EscapeError : public std::runtime_error {
public:
    EscapeError(double time, PhaseState last, int iterate = -1)
        : std::runtime_error("trajectory escaped at t=" + std::to_string(time)),
          time_(time), last_(last), iterate_(iterate)
    {
    }

    double time() const { return time_; }
    PhaseState last_state() const { return last_; }
    /// Poincare iterate index reached, or -1 for a plain integration.
    int iterate() const { return iterate_; }

    EscapeError with_iterate(int k) const { return EscapeError(time_, last_, k); }

private:
    double time_;
    PhaseState last_;
    int iterate_;
};

/// Newton or continuation failure; carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double t0, double epsilon)
        : std::runtime_error(what), t0_(t0), epsilon_(epsilon)
    {
    }
    double t0() const { return t0_; }
    double epsilon() const { return epsilon_; }

private:
    double t0_;
    double epsilon_;
};

} // namespace afdo
