#include "hmflow/radius_profile.hpp"

#include "hmflow/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace hmflow {

RadiusProfile::RadiusProfile(Kind kind, double base, double amplitude, double frequency)
    : kind_(kind), base_(base), amplitude_(amplitude), frequency_(frequency) {}

RadiusProfile RadiusProfile::constant(double value) {
    if (!(value > 0.0)) fail(ErrorCode::InvalidArgument, "radius must be positive");
    return RadiusProfile(Kind::Constant, value, 0.0, 0.0);
}

RadiusProfile RadiusProfile::sinusoid(double base, double amplitude, double frequency) {
    if (!(base - std::abs(amplitude) > 0.0)) {
        fail(ErrorCode::InvalidArgument, "sinusoidal radius must stay positive: need base > |amplitude|");
    }
    return RadiusProfile(Kind::Sinusoid, base, amplitude, frequency);
}

RadiusProfile RadiusProfile::ricci_shrinking() { return RadiusProfile(Kind::RicciShrinking, 1.0, 0.0, 0.0); }

double RadiusProfile::value(double t) const {
    switch (kind_) {
        case Kind::Constant: return base_;
        case Kind::Sinusoid: return base_ + amplitude_ * std::sin(frequency_ * t);
        case Kind::RicciShrinking: return std::sqrt(1.0 - 2.0 * t);
    }
    return base_;
}

double RadiusProfile::derivative(double t) const {
    switch (kind_) {
        case Kind::Constant: return 0.0;
        case Kind::Sinusoid: return amplitude_ * frequency_ * std::cos(frequency_ * t);
        case Kind::RicciShrinking: return -1.0 / std::sqrt(1.0 - 2.0 * t);
    }
    return 0.0;
}

double RadiusProfile::max_time() const noexcept {
    return kind_ == Kind::RicciShrinking ? 0.5 : std::numeric_limits<double>::infinity();
}

bool RadiusProfile::is_static() const noexcept {
    return kind_ == Kind::Constant || (kind_ == Kind::Sinusoid && (amplitude_ == 0.0 || frequency_ == 0.0));
}

std::string RadiusProfile::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::Constant: os << "constant(" << base_ << ")"; break;
        case Kind::Sinusoid: os << base_ << "+" << amplitude_ << "*sin(" << frequency_ << "t)"; break;
        case Kind::RicciShrinking: os << "sqrt(1-2t)"; break;
    }
    return os.str();
}

}  // namespace hmflow
