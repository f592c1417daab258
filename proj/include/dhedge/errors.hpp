#pragma once

#include <stdexcept>
#include <string>

namespace dhedge {

struct NonMonotoneBreakpoints : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NegativeValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DiscontinuousTail : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateVariance : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InfiniteEnvelope : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BracketingFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OverflowGuard : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResolutionTooCoarse : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ToleranceFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidParameter : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace dhedge
