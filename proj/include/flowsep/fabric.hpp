#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "flowsep/codec.hpp"
#include "flowsep/matrix.hpp"
#include "flowsep/separation.hpp"
#include "flowsep/topology.hpp"

namespace flowsep {

enum class DropReason { UnknownCf, WrongBusForSender, NoNf, NoRule, DecodeError, HopLimit };
std::string_view to_string(DropReason reason);

enum class FilterMode { Off, On };

struct FabricOptions {
    /// Gateways re-emit received frames only onto buses that hold a receiver.
    FilterMode filter = FilterMode::On;
    /// Gateways drop frames whose matrix sender is not on the arrival bus.
    bool strict_ingress = false;
};

enum class EventKind { BusRx, Embed, SwitchForward, Drop, GatewayRx, FilterDrop, BusTx };
std::string_view to_string(EventKind kind);

struct SimEvent {
    std::uint64_t seq = 0;
    std::int64_t time_us = 0;
    EventKind kind = EventKind::BusRx;
    std::string node;
    CanId can_id = 0;
    std::string detail;
};

struct FlowRecord {
    std::size_t frames = 0;
    std::size_t embedded = 0;
    std::size_t local_deliveries = 0;
    std::map<std::string, std::size_t> origins;
    std::map<std::string, std::size_t> received_at;
    std::map<std::string, std::size_t> delivered_at;
};

struct LinkCounter {
    std::size_t packets = 0;
    std::size_t bytes = 0;
};

/// Per-copy accounting on multicast trees: every copy put on a link ends
/// as forwarded (consumed by a switch), delivered (at an edge node) or dropped.
struct BranchCounters {
    std::size_t emitted = 0;
    std::size_t forwarded = 0;
    std::size_t delivered = 0;
    std::size_t dropped = 0;

    bool balanced() const { return emitted == forwarded + delivered + dropped; }
};

using NodePair = std::pair<std::string, std::string>;  // (origin, destination)

struct DeliveryLog {
    std::vector<SimEvent> events;
    std::map<CanId, FlowRecord> flows;
    std::map<std::string, LinkCounter> links;
    std::map<std::string, std::size_t> drops;
    /// Distinct control flows received at the destination's egress.
    std::map<NodePair, std::set<CanId>> received;
    std::map<NodePair, std::size_t> received_messages;
    /// Distinct control flows that reached at least one matrix receiver.
    std::map<NodePair, std::set<CanId>> useful;
    std::size_t backbone_packets = 0;
    BranchCounters branches;
};

struct TraceRecord {
    std::int64_t time_us = 0;
    std::string bus;
    codec::CanFrame frame;
    std::size_t line = 0;
};

/// candump log lines: `(<seconds.micros>) <bus> <hex id>#<hex data>`.
std::vector<TraceRecord> parse_trace(std::string_view text);

struct BusBinding {
    std::string gateway;
    std::string bus;
};
using BusMap = std::map<std::string, BusBinding>;

/// `{"<trace bus>": {"gateway": "...", "bus": "..."}}`, checked against the topology.
BusMap parse_bus_map(std::string_view text, const Topology& topo);

struct Packet {
    std::vector<std::uint8_t> bytes;
    CanId can_id = 0;
    std::string origin;
    std::string nf_id;
};

struct IngressResult {
    enum class Outcome { Embedded, Local, Dropped };
    Outcome outcome = Outcome::Dropped;
    Packet packet;
    DropReason reason = DropReason::NoNf;
};

struct EgressResult {
    bool decoded = false;
    CanId can_id = 0;
    bool has_receiver = false;
    std::vector<std::pair<std::string, codec::CanFrame>> deliveries;  // (bus, frame); hosts use ""
};

/// Zero-latency forwarding simulation of one deployment. Holds references to
/// its inputs, which must outlive it. All methods are const and deterministic.
class Fabric {
public:
    Fabric(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment, FabricOptions options = {});

    IngressResult gateway_ingress(std::string_view gw, std::string_view bus, const codec::CanFrame& frame) const;
    std::variant<std::set<int>, DropReason> switch_forward(std::string_view sw, int in_port,
                                                           std::span<const std::uint8_t> packet) const;
    EgressResult gateway_egress(std::string_view gw, std::span<const std::uint8_t> packet) const;

    DeliveryLog replay(const std::vector<TraceRecord>& trace, const BusMap& bus_map) const;
    /// One frame per matrix flow, sent by its specified ECU.
    DeliveryLog emit_all() const;
    /// A single spoofed emission of `id` by `from`, keyed as `from` would key
    /// it. Returns the edge nodes whose egress records reception.
    std::set<std::string> inject(std::string_view from, CanId id) const;

    static codec::CanFrame frame_for(const ControlFlow& cf);

private:
    void process_frame(const std::string& gw, const std::string& bus, const codec::CanFrame& frame,
                       std::int64_t time_us, DeliveryLog& log) const;
    void transmit(const Packet& packet, std::int64_t time_us, DeliveryLog* log, std::set<std::string>* reached) const;
    std::vector<std::uint8_t> encode_as(const ControlFlow& cf, const codec::CanFrame& frame, const Node& sender) const;

    const CommMatrix& matrix_;
    const Topology& topo_;
    const Deployment& deployment_;
    FabricOptions options_;
    std::map<std::pair<std::string, MatchKey>, const NetworkFlow*> nf_index_;
};

}  // namespace flowsep
