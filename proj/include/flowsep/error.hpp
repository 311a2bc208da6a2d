#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowsep {

enum class ErrorCode {
    MalformedRecord,
    DuplicateCanId,
    SenderIsReceiver,
    EmptyReceivers,
    PriorityOutOfRange,
    DomainMismatch,
    DomainOutOfRange,
    TopicOutOfRange,
    CanIdOutOfRange,
    PayloadOutOfRange,
    UnknownCanId,
    InfeasibleParams,
    TopicSpaceExhausted,
    UnattachedEcu,
    DuplicateEcu,
    DuplicateNode,
    DisconnectedGraph,
    DuplicateAddress,
    DuplicatePort,
    UnknownNode,
    UnknownEcu,
    EcuPlacementMismatch,
    UnreachableNode,
    DomainNotVlanRepresentable,
    DomainNotIpRepresentable,
    BadEtherType,
    MissingVlanTag,
    MacIdMismatch,
    TruncatedFrame,
    BadLength,
    BadChecksum,
    BadDestination,
    BadPort,
    BadHeader,
    InvalidFrame,
    MalformedTraceLine,
    UnmappedBus,
    UnknownCf,
    DuplicateRule,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every module reports failures through this type. `subject` names the
/// offending entity (CAN id, ECU, node, line number) so callers can render
/// machine-readable diagnostics.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string subject, const std::string& detail = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& subject() const noexcept { return subject_; }

private:
    ErrorCode code_;
    std::string subject_;
};

}  // namespace flowsep
