#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flowsep/net.hpp"

namespace flowsep {

inline constexpr CanId kMaxExtendedId = (CanId{1} << 29) - 1;
inline constexpr CanId kMaxStandardId = (CanId{1} << 11) - 1;
inline constexpr std::uint16_t kMaxDomain = 4094;
inline constexpr std::uint8_t kMaxPriority = 7;
inline constexpr std::uint8_t kMaxCanPayload = 8;

/// One ECU as declared by the matrix. Zone and bus are optional here; the
/// topology owns the authoritative attachment. A domain of 0 means the ECU
/// never sends and its domain is unknown.
struct EcuInfo {
    std::string name;
    std::string zone;
    std::string bus;
    std::uint16_t domain = 0;

    bool operator==(const EcuInfo&) const = default;
};

struct ControlFlow {
    CanId can_id = 0;
    bool extended = false;
    std::string sender;
    std::set<std::string> receivers;
    std::uint16_t domain = 0;
    std::uint16_t topic = 0;
    std::uint8_t priority = 0;
    std::uint8_t payload_len = kMaxCanPayload;
    std::optional<std::uint32_t> cycle_ms;

    bool operator==(const ControlFlow&) const = default;
};

/// Immutable, validated vehicle communication matrix. Flows keep their input
/// order; lookups by CAN id go through an index.
class CommMatrix {
public:
    CommMatrix() = default;

    /// Validates every invariant; throws Error on the first violation. Flows
    /// without a topic (topic == 0) receive fresh singleton topic labels.
    CommMatrix(std::vector<EcuInfo> ecus, std::vector<ControlFlow> flows);

    const std::vector<ControlFlow>& flows() const { return flows_; }
    const std::map<std::string, EcuInfo>& ecus() const { return ecus_; }
    const ControlFlow* find(CanId id) const;
    const ControlFlow& at(CanId id) const;

    std::set<std::uint16_t> domains() const;
    std::set<std::uint16_t> topics() const;

    bool operator==(const CommMatrix& other) const { return ecus_ == other.ecus_ && flows_ == other.flows_; }

private:
    std::map<std::string, EcuInfo> ecus_;
    std::vector<ControlFlow> flows_;
    std::map<CanId, std::size_t> index_;
};

enum class MatrixFormat { Json, Csv };

CommMatrix parse_matrix(std::string_view text, MatrixFormat format);
std::string serialize_matrix(const CommMatrix& matrix, MatrixFormat format);

/// Regroups flows into topics. Flows named in `grouping` take the given label;
/// every other flow gets its own fresh label that no group uses.
CommMatrix assign_topics(const CommMatrix& matrix, const std::map<CanId, std::uint16_t>& grouping);

/// Topics whose flows span more than one domain. Empty iff the topic
/// partition refines the domain partition.
std::vector<std::uint16_t> topics_spanning_domains(const CommMatrix& matrix);

}  // namespace flowsep
