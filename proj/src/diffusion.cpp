#include "swave/diffusion.hpp"

#include <algorithm>
#include <sstream>

namespace swave {

double DiffusionSpec::lipschitz() const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Linear: return std::abs(slope);
        case Kind::SmoothedAbs: return 1.0;
    }
    return 0.0;
}

double DiffusionSpec::growth_constant() const {
    switch (kind) {
        case Kind::Zero: return 0.0;
        case Kind::Linear: return std::max(slope * slope, 1.0);
        case Kind::SmoothedAbs: return std::max(1.0, epsilon);
    }
    return 0.0;
}

std::string DiffusionSpec::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::Zero: os << "zero"; break;
        case Kind::Linear: os << "linear(c=" << slope << ")"; break;
        case Kind::SmoothedAbs: os << "smoothed_abs(eps=" << epsilon << ")"; break;
    }
    return os.str();
}

}  // namespace swave
