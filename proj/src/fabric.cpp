#include "flowsep/fabric.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

#include <nlohmann/json.hpp>

#include "flowsep/error.hpp"

namespace flowsep {

std::string_view to_string(DropReason reason) {
    switch (reason) {
    case DropReason::UnknownCf: return "UnknownCf";
    case DropReason::WrongBusForSender: return "WrongBusForSender";
    case DropReason::NoNf: return "NoNf";
    case DropReason::NoRule: return "NoRule";
    case DropReason::DecodeError: return "DecodeError";
    case DropReason::HopLimit: return "HopLimit";
    }
    return "?";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::BusRx: return "bus_rx";
    case EventKind::Embed: return "embed";
    case EventKind::SwitchForward: return "switch_forward";
    case EventKind::Drop: return "drop";
    case EventKind::GatewayRx: return "gateway_rx";
    case EventKind::FilterDrop: return "filter_drop";
    case EventKind::BusTx: return "bus_tx";
    }
    return "?";
}

// --- trace input --------------------------------------------------------------

namespace {

constexpr int kHopLimit = 64;

bool parse_hex(std::string_view s, std::uint32_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, 16);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_dec(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out, 10);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

TraceRecord parse_trace_line(std::string_view line, std::size_t line_no) {
    const auto where = "line " + std::to_string(line_no);
    auto bad = [&](const char* why) { return Error(ErrorCode::MalformedTraceLine, where, why); };

    auto t = tokens(line);
    if (t.size() != 3) throw bad("expected (time) bus id#data");
    auto stamp = t[0];
    if (stamp.size() < 3 || stamp.front() != '(' || stamp.back() != ')') throw bad("timestamp must be parenthesised");
    stamp = stamp.substr(1, stamp.size() - 2);
    const auto dot = stamp.find('.');
    std::int64_t secs = 0, frac = 0;
    if (dot == std::string_view::npos) {
        if (!parse_dec(stamp, secs)) throw bad("bad timestamp");
    } else {
        auto frac_text = stamp.substr(dot + 1);
        if (frac_text.size() > 6 || !parse_dec(stamp.substr(0, dot), secs) || !parse_dec(frac_text, frac))
            throw bad("bad timestamp");
        for (auto n = frac_text.size(); n < 6; ++n) frac *= 10;
    }
    if (secs < 0 || frac < 0) throw bad("negative timestamp");

    TraceRecord rec;
    rec.line = line_no;
    rec.time_us = secs * 1000000 + frac;
    rec.bus = std::string(t[1]);

    const auto body = t[2];
    const auto hash = body.find('#');
    if (hash == std::string_view::npos) throw bad("missing '#'");
    const auto id_text = body.substr(0, hash);
    auto data_text = body.substr(hash + 1);
    std::uint32_t id = 0;
    if (!parse_hex(id_text, id)) throw bad("bad identifier");
    if (!data_text.empty() && (data_text.front() == 'R' || data_text.front() == '#'))
        throw bad("remote and CAN FD frames are not supported");
    if (data_text.size() % 2 != 0 || data_text.size() > 16) throw bad("bad data field");
    rec.frame.can_id = id;
    rec.frame.extended = id_text.size() == 8 || id > kMaxStandardId;
    for (std::size_t i = 0; i < data_text.size(); i += 2) {
        std::uint32_t byte = 0;
        if (!parse_hex(data_text.substr(i, 2), byte)) throw bad("bad data byte");
        rec.frame.data.push_back(static_cast<std::uint8_t>(byte));
    }
    try {
        rec.frame.validate();
    } catch (const Error&) {
        throw bad("identifier out of range");
    }
    return rec;
}

}  // namespace

std::vector<TraceRecord> parse_trace(std::string_view text) {
    std::vector<TraceRecord> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (tokens(line).empty()) continue;
        out.push_back(parse_trace_line(line, line_no));
    }
    return out;
}

BusMap parse_bus_map(std::string_view text, const Topology& topo) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& ex) {
        throw Error(ErrorCode::MalformedRecord, "offset " + std::to_string(ex.byte), ex.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::MalformedRecord, "bus_map", "top level must be an object");
    BusMap map;
    for (const auto& [name, entry] : doc.items()) {
        BusBinding b;
        try {
            b.gateway = entry.at("gateway").get<std::string>();
            b.bus = entry.value("bus", std::string{});
        } catch (const nlohmann::json::exception& ex) {
            throw Error(ErrorCode::MalformedRecord, name, ex.what());
        }
        const auto* node = topo.find_node(b.gateway);
        if (!node || node->kind == NodeKind::Switch) throw Error(ErrorCode::UnmappedBus, name, "unknown gateway " + b.gateway);
        const auto buses = topo.buses_of(b.gateway);
        if (node->kind == NodeKind::Gateway && std::find(buses.begin(), buses.end(), b.bus) == buses.end())
            throw Error(ErrorCode::UnmappedBus, name, b.gateway + " has no bus " + b.bus);
        map.emplace(name, std::move(b));
    }
    return map;
}

// --- fabric -------------------------------------------------------------------

Fabric::Fabric(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment, FabricOptions options)
    : matrix_(matrix), topo_(topo), deployment_(deployment), options_(options) {
    for (const auto& nf : deployment_.nfs) nf_index_.emplace(std::make_pair(nf.source, nf.key), &nf);
}

codec::CanFrame Fabric::frame_for(const ControlFlow& cf) {
    codec::CanFrame f{cf.can_id, cf.extended, {}};
    for (std::uint8_t i = 0; i < cf.payload_len; ++i) f.data.push_back(static_cast<std::uint8_t>(cf.can_id + i));
    return f;
}

std::vector<std::uint8_t> Fabric::encode_as(const ControlFlow& cf, const codec::CanFrame& frame,
                                            const Node& sender) const {
    const auto meta = codec::FlowMeta::of(cf);
    if (deployment_.strategy == Strategy::Message) return codec::encode_l2(meta, frame, sender.mac);
    return codec::encode_someip(meta, frame, codec::Endpoint{sender.mac, sender.ip},
                                tunnel_group(cf, deployment_.strategy));
}

IngressResult Fabric::gateway_ingress(std::string_view gw, std::string_view bus, const codec::CanFrame& frame) const {
    IngressResult r;
    const auto& node = topo_.node(gw);
    const auto* cf = matrix_.find(frame.can_id);
    if (!cf) {
        r.reason = DropReason::UnknownCf;
        return r;
    }
    if (options_.strict_ingress) {
        const auto at = topo_.attachment(cf->sender);
        if (!at || at->node != gw || at->bus != bus) {
            r.reason = DropReason::WrongBusForSender;
            return r;
        }
    }
    if (deployment_.placement.local.at(cf->can_id)) {
        r.outcome = IngressResult::Outcome::Local;
        return r;
    }
    auto it = nf_index_.find({node.name, header_key(*cf, deployment_.strategy, node)});
    if (it == nf_index_.end()) {
        r.reason = DropReason::NoNf;
        return r;
    }
    r.outcome = IngressResult::Outcome::Embedded;
    r.packet = Packet{encode_as(*cf, frame, node), frame.can_id, node.name, it->second->id};
    return r;
}

std::variant<std::set<int>, DropReason> Fabric::switch_forward(std::string_view sw, int in_port,
                                                               std::span<const std::uint8_t> packet) const {
    auto table = deployment_.rules.find(std::string(sw));
    if (table == deployment_.rules.end()) return DropReason::NoRule;
    codec::HeaderView headers;
    try {
        headers = codec::peek_headers(packet);
    } catch (const Error&) {
        return DropReason::NoRule;
    }
    for (const auto& rule : table->second)
        if (rule.in_port == in_port && key_matches(rule.key, headers)) return rule.out_ports;
    return DropReason::NoRule;
}

EgressResult Fabric::gateway_egress(std::string_view gw, std::span<const std::uint8_t> packet) const {
    EgressResult r;
    codec::CanFrame frame;
    try {
        frame = deployment_.strategy == Strategy::Message ? codec::decode_l2(packet).frame
                                                          : codec::decode_someip(packet).frame;
    } catch (const Error&) {
        return r;
    }
    r.decoded = true;
    r.can_id = frame.can_id;

    const auto& node = topo_.node(gw);
    const auto* cf = matrix_.find(frame.can_id);
    auto holds_receiver = [&](const std::string& bus) {
        if (!cf) return false;
        for (const auto& ecu : cf->receivers) {
            auto at = topo_.attachment(ecu);
            if (at && at->node == node.name && at->bus == bus) return true;
        }
        return false;
    };

    if (node.kind == NodeKind::Host) {
        r.has_receiver = holds_receiver("");
        if (r.has_receiver || options_.filter == FilterMode::Off) r.deliveries.emplace_back("", frame);
        return r;
    }
    for (const auto& bus : topo_.buses_of(gw)) {
        const bool wanted = holds_receiver(bus);
        r.has_receiver = r.has_receiver || wanted;
        if (wanted || options_.filter == FilterMode::Off) r.deliveries.emplace_back(bus, frame);
    }
    return r;
}

void Fabric::transmit(const Packet& packet, std::int64_t time_us, DeliveryLog* log,
                      std::set<std::string>* reached) const {
    struct Copy {
        std::string node;
        int in_port;
        int hops;
    };
    std::deque<Copy> pending;
    auto put_on_link = [&](const std::string& from, const PortPeer& p, int hops) {
        if (log) {
            const auto& [a, ap, b, bp] = from < p.peer ? std::tuple(from, p.port, p.peer, p.peer_port)
                                                       : std::tuple(p.peer, p.peer_port, from, p.port);
            auto& c = log->links[a + ":" + std::to_string(ap) + "-" + b + ":" + std::to_string(bp)];
            ++c.packets;
            c.bytes += packet.bytes.size();
            ++log->branches.emitted;
        }
        pending.push_back(Copy{p.peer, p.peer_port, hops});
    };
    auto event = [&](EventKind kind, const std::string& node, std::string detail = {}) {
        if (log)
            log->events.push_back(
                SimEvent{log->events.size(), time_us, kind, node, packet.can_id, std::move(detail)});
    };
    auto drop = [&](const std::string& node, DropReason reason) {
        if (!log) return;
        ++log->branches.dropped;
        ++log->drops[std::string(to_string(reason))];
        event(EventKind::Drop, node, std::string(to_string(reason)));
    };

    for (const auto& p : topo_.ports(packet.origin)) put_on_link(packet.origin, p, 1);

    while (!pending.empty()) {
        auto copy = std::move(pending.front());
        pending.pop_front();
        const auto& node = topo_.node(copy.node);

        if (node.kind == NodeKind::Switch) {
            if (copy.hops > kHopLimit) {
                drop(node.name, DropReason::HopLimit);
                continue;
            }
            auto result = switch_forward(node.name, copy.in_port, packet.bytes);
            if (const auto* reason = std::get_if<DropReason>(&result)) {
                drop(node.name, *reason);
                continue;
            }
            const auto& out_ports = std::get<std::set<int>>(result);
            if (log) ++log->branches.forwarded;
            event(EventKind::SwitchForward, node.name, "in " + std::to_string(copy.in_port));
            for (int port : out_ports)
                if (const auto* p = topo_.port(node.name, port)) put_on_link(node.name, *p, copy.hops + 1);
            continue;
        }

        auto egress = gateway_egress(node.name, packet.bytes);
        if (!egress.decoded) {
            drop(node.name, DropReason::DecodeError);
            continue;
        }
        if (reached) reached->insert(node.name);
        if (!log) continue;
        ++log->branches.delivered;
        event(EventKind::GatewayRx, node.name, packet.nf_id);
        const NodePair pair{packet.origin, node.name};
        log->received[pair].insert(egress.can_id);
        ++log->received_messages[pair];
        auto& rec = log->flows[egress.can_id];
        ++rec.received_at[node.name];
        if (egress.has_receiver) log->useful[pair].insert(egress.can_id);
        if (egress.deliveries.empty()) event(EventKind::FilterDrop, node.name);
        for (const auto& [bus, frame] : egress.deliveries) {
            ++rec.delivered_at[node.name];
            event(EventKind::BusTx, node.name, bus);
        }
    }
}

void Fabric::process_frame(const std::string& gw, const std::string& bus, const codec::CanFrame& frame,
                           std::int64_t time_us, DeliveryLog& log) const {
    auto event = [&](EventKind kind, const std::string& node, std::string detail = {}) {
        log.events.push_back(SimEvent{log.events.size(), time_us, kind, node, frame.can_id, std::move(detail)});
    };
    auto& rec = log.flows[frame.can_id];
    ++rec.frames;
    ++rec.origins[gw];
    event(EventKind::BusRx, gw, bus);

    auto ingress = gateway_ingress(gw, bus, frame);
    if (ingress.outcome == IngressResult::Outcome::Dropped &&
        (ingress.reason == DropReason::UnknownCf || ingress.reason == DropReason::WrongBusForSender)) {
        ++log.drops[std::string(to_string(ingress.reason))];
        event(EventKind::Drop, gw, std::string(to_string(ingress.reason)));
        return;
    }

    // Gateway-local routing onto the other buses of the arrival zone.
    const auto& cf = matrix_.at(frame.can_id);
    for (const auto& other : topo_.buses_of(gw)) {
        if (other == bus) continue;
        bool wanted = false;
        for (const auto& ecu : topo_.ecus_on(gw, other)) wanted = wanted || cf.receivers.contains(ecu);
        if (wanted || options_.filter == FilterMode::Off) {
            ++rec.local_deliveries;
            event(EventKind::BusTx, gw, other);
        }
    }

    switch (ingress.outcome) {
    case IngressResult::Outcome::Local:
        return;
    case IngressResult::Outcome::Dropped:
        ++log.drops[std::string(to_string(ingress.reason))];
        event(EventKind::Drop, gw, std::string(to_string(ingress.reason)));
        return;
    case IngressResult::Outcome::Embedded:
        ++rec.embedded;
        ++log.backbone_packets;
        event(EventKind::Embed, gw, ingress.packet.nf_id);
        transmit(ingress.packet, time_us, &log, nullptr);
        return;
    }
}

DeliveryLog Fabric::replay(const std::vector<TraceRecord>& trace, const BusMap& bus_map) const {
    for (const auto& rec : trace)
        if (!bus_map.contains(rec.bus)) throw Error(ErrorCode::UnmappedBus, rec.bus, "line " + std::to_string(rec.line));

    std::vector<const TraceRecord*> order;
    for (const auto& rec : trace) order.push_back(&rec);
    std::stable_sort(order.begin(), order.end(),
                     [](const TraceRecord* a, const TraceRecord* b) { return a->time_us < b->time_us; });

    DeliveryLog log;
    for (const auto* rec : order) {
        const auto& binding = bus_map.at(rec->bus);
        process_frame(binding.gateway, binding.bus, rec->frame, rec->time_us, log);
    }
    return log;
}

DeliveryLog Fabric::emit_all() const {
    DeliveryLog log;
    for (const auto& cf : matrix_.flows()) {
        const auto at = topo_.attachment(cf.sender);
        if (!at) throw Error(ErrorCode::UnknownEcu, cf.sender);
        process_frame(at->node, at->bus, frame_for(cf), 0, log);
    }
    return log;
}

std::set<std::string> Fabric::inject(std::string_view from, CanId id) const {
    const auto& node = topo_.node(from);
    if (node.kind == NodeKind::Switch) throw Error(ErrorCode::InvalidArgument, node.name, "switches do not originate traffic");
    std::set<std::string> reached;
    const auto* cf = matrix_.find(id);
    if (!cf) return reached;
    const auto frame = frame_for(*cf);
    transmit(Packet{encode_as(*cf, frame, node), id, node.name, "inject"}, 0, nullptr, &reached);
    return reached;
}

}  // namespace flowsep
