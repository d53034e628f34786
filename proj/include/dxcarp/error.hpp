#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dxcarp {

enum class ErrorCode {
    DuplicateId,
    DanglingEndpoint,
    DisconnectedGraph,
    NoDepot,
    NoDemand,
    Unreachable,
    IllegalDirection,
    UnknownLink,
    CapacityExceeded,
    InfeasibleBalance,
    NoFeasibleInsertion,
    SchemaError,
    DegenerateInstance,
    TooLarge,
    Infeasible,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DanglingEndpoint: return "DanglingEndpoint";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NoDepot: return "NoDepot";
    case ErrorCode::NoDemand: return "NoDemand";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::IllegalDirection: return "IllegalDirection";
    case ErrorCode::UnknownLink: return "UnknownLink";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::InfeasibleBalance: return "InfeasibleBalance";
    case ErrorCode::NoFeasibleInsertion: return "NoFeasibleInsertion";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DegenerateInstance: return "DegenerateInstance";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    }
    return "Unknown";
}

// Every failure the library reports carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace dxcarp
