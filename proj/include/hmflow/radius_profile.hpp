#pragma once

#include <string>

namespace hmflow {

/// Prescribed radius rho(t) of a round source metric g_t = rho(t)^2 g_unit.
class RadiusProfile {
public:
    enum class Kind { Constant, Sinusoid, RicciShrinking };

    static RadiusProfile constant(double value);
    /// base + amplitude * sin(frequency * t)
    static RadiusProfile sinusoid(double base, double amplitude, double frequency);
    /// sqrt(1 - 2t): round 2-sphere under Ricci flow, defined for t < 1/2.
    static RadiusProfile ricci_shrinking();

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double value(double t) const;
    [[nodiscard]] double derivative(double t) const;
    /// Largest t for which the profile is defined and positive (infinity when unbounded).
    [[nodiscard]] double max_time() const noexcept;
    [[nodiscard]] bool is_static() const noexcept;
    [[nodiscard]] std::string describe() const;

    [[nodiscard]] double base() const noexcept { return base_; }
    [[nodiscard]] double amplitude() const noexcept { return amplitude_; }
    [[nodiscard]] double frequency() const noexcept { return frequency_; }

private:
    RadiusProfile(Kind kind, double base, double amplitude, double frequency);

    Kind kind_;
    double base_;
    double amplitude_;
    double frequency_;
};

}  // namespace hmflow
