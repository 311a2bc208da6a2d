#include "flowsep/error.hpp"

namespace flowsep {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateCanId: return "DuplicateCanId";
    case ErrorCode::SenderIsReceiver: return "SenderIsReceiver";
    case ErrorCode::EmptyReceivers: return "EmptyReceivers";
    case ErrorCode::PriorityOutOfRange: return "PriorityOutOfRange";
    case ErrorCode::DomainMismatch: return "DomainMismatch";
    case ErrorCode::DomainOutOfRange: return "DomainOutOfRange";
    case ErrorCode::TopicOutOfRange: return "TopicOutOfRange";
    case ErrorCode::CanIdOutOfRange: return "CanIdOutOfRange";
    case ErrorCode::PayloadOutOfRange: return "PayloadOutOfRange";
    case ErrorCode::UnknownCanId: return "UnknownCanId";
    case ErrorCode::InfeasibleParams: return "InfeasibleParams";
    case ErrorCode::TopicSpaceExhausted: return "TopicSpaceExhausted";
    case ErrorCode::UnattachedEcu: return "UnattachedEcu";
    case ErrorCode::DuplicateEcu: return "DuplicateEcu";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DuplicateAddress: return "DuplicateAddress";
    case ErrorCode::DuplicatePort: return "DuplicatePort";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::UnknownEcu: return "UnknownEcu";
    case ErrorCode::EcuPlacementMismatch: return "EcuPlacementMismatch";
    case ErrorCode::UnreachableNode: return "UnreachableNode";
    case ErrorCode::DomainNotVlanRepresentable: return "DomainNotVlanRepresentable";
    case ErrorCode::DomainNotIpRepresentable: return "DomainNotIpRepresentable";
    case ErrorCode::BadEtherType: return "BadEtherType";
    case ErrorCode::MissingVlanTag: return "MissingVlanTag";
    case ErrorCode::MacIdMismatch: return "MacIdMismatch";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::BadLength: return "BadLength";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::BadDestination: return "BadDestination";
    case ErrorCode::BadPort: return "BadPort";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::InvalidFrame: return "InvalidFrame";
    case ErrorCode::MalformedTraceLine: return "MalformedTraceLine";
    case ErrorCode::UnmappedBus: return "UnmappedBus";
    case ErrorCode::UnknownCf: return "UnknownCf";
    case ErrorCode::DuplicateRule: return "DuplicateRule";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& subject, const std::string& detail) {
    std::string msg(to_string(code));
    msg += '(';
    msg += subject;
    msg += ')';
    if (!detail.empty()) {
        msg += ": ";
        msg += detail;
    }
    return msg;
}

}  // namespace

Error::Error(ErrorCode code, std::string subject, const std::string& detail)
    : std::runtime_error(format_message(code, subject, detail)),
      code_(code),
      subject_(std::move(subject)) {}

}  // namespace flowsep
