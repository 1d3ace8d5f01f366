#pragma once

#include <stdexcept>
#include <string>

namespace kgdecay {

enum class ErrorKind {
    InvalidArgument,
    ConditionViolated,
    GridTooSmall,
    SupportTooLarge,
    NewtonDiverged,
    NonFinite,
    ProfileOutOfRange,
    NoSnapshot,
    NonpositiveTime,
    TraceIncomplete,
    SnapshotsTooSparse,
    DegenerateDenominator,
    IntervalUncovered,
    BadTheta,
    TimeTooSmall,
    NotIncoming,
    TooFewPoints,
    DegenerateSeries,
    ThresholdNeverReached,
    ConfigInvalid,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ConditionViolated: return "ConditionViolated";
        case ErrorKind::GridTooSmall: return "GridTooSmall";
        case ErrorKind::SupportTooLarge: return "SupportTooLarge";
        case ErrorKind::NewtonDiverged: return "NewtonDiverged";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::ProfileOutOfRange: return "ProfileOutOfRange";
        case ErrorKind::NoSnapshot: return "NoSnapshot";
        case ErrorKind::NonpositiveTime: return "NonpositiveTime";
        case ErrorKind::TraceIncomplete: return "TraceIncomplete";
        case ErrorKind::SnapshotsTooSparse: return "SnapshotsTooSparse";
        case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorKind::IntervalUncovered: return "IntervalUncovered";
        case ErrorKind::BadTheta: return "BadTheta";
        case ErrorKind::TimeTooSmall: return "TimeTooSmall";
        case ErrorKind::NotIncoming: return "NotIncoming";
        case ErrorKind::TooFewPoints: return "TooFewPoints";
        case ErrorKind::DegenerateSeries: return "DegenerateSeries";
        case ErrorKind::ThresholdNeverReached: return "ThresholdNeverReached";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    }
    return "Unknown";
}

/// Every failure raised by the library. `node` is the grid index involved
/// (or -1), `iteration` the Newton iteration count for NewtonDiverged.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, int node = -1, int iteration = -1)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what),
          kind_(kind), node_(node), iteration_(iteration) {}

    ErrorKind kind() const noexcept { return kind_; }
    int node() const noexcept { return node_; }
    int iteration() const noexcept { return iteration_; }

private:
    ErrorKind kind_;
    int node_;
    int iteration_;
};

}  // namespace kgdecay
