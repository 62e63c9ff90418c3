#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fso {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
    InvalidArgument,
    SetValuedSwitch,   // epsilon = 0 and z = 0: lambda is only known to lie in [-1, 1]
    ChartError,        // layer chart requested with epsilon = 0, or |u| > 1 + tol
    MissedEvent,       // integrator left the layer chart without a LayerExit event
    StepUnderflow,
    Infeasible,        // step budget exhausted under the oracle step cap
    NoCrossing,
    OutsideSliding,
    NonHyperbolic,
    Singular,
    Domain,
    SmallArcRegime,
    LargeArcRegime,
    FoldBand,
    NonTermination,
    NoLayerEntry,
};

inline std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument: return "invalid_argument";
        case ErrorKind::SetValuedSwitch: return "set_valued_switch";
        case ErrorKind::ChartError: return "chart_error";
        case ErrorKind::MissedEvent: return "missed_event";
        case ErrorKind::StepUnderflow: return "step_underflow";
        case ErrorKind::Infeasible: return "infeasible";
        case ErrorKind::NoCrossing: return "no_crossing";
        case ErrorKind::OutsideSliding: return "outside_sliding";
        case ErrorKind::NonHyperbolic: return "non_hyperbolic";
        case ErrorKind::Singular: return "singular";
        case ErrorKind::Domain: return "domain";
        case ErrorKind::SmallArcRegime: return "small_arc_regime";
        case ErrorKind::LargeArcRegime: return "large_arc_regime";
        case ErrorKind::FoldBand: return "fold_band";
        case ErrorKind::NonTermination: return "non_termination";
        case ErrorKind::NoLayerEntry: return "no_layer_entry";
    }
    return "?";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, std::string_view what) {
    if (!ok) {
        fail(kind, std::string(what));
    }
}

}  // namespace fso
