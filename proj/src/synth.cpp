#include "flowsep/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>

#include "flowsep/error.hpp"

namespace flowsep {

namespace {

/// Rejection-sampled bounded draw. std::uniform_int_distribution is not
/// portable across standard libraries; this keeps seeds reproducible.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }
    int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

std::string zone_label(int i, int n) {
    static const char* const kCorners[] = {"FL", "FR", "RL", "RR"};
    if (n <= 4) return kCorners[i];
    const auto num = std::to_string(i + 1);
    return (num.size() < 2 ? "Z0" : "Z") + num;
}

std::string switch_label(int i, int n) {
    if (n == 1) return "SW";
    if (n == 2) return i == 0 ? "SWF" : "SWR";
    return "SW" + std::to_string(i + 1);
}

}  // namespace

SynthResult synth_matrix(const SynthParams& p, std::uint64_t seed) {
    const int pool = p.n_ecus + p.n_hosts;
    if (p.n_zones < 1 || p.n_ecus < p.n_zones || p.n_hosts < 0)
        throw Error(ErrorCode::InfeasibleParams, "n_ecus", "need n_ecus >= n_zones >= 1");
    if (p.n_flows < 1) throw Error(ErrorCode::InfeasibleParams, "n_flows", "need at least one flow");
    if (p.max_receivers < 1 || p.max_receivers > pool - 1)
        throw Error(ErrorCode::InfeasibleParams, "max_receivers", "need 1 <= max_receivers < number of ECUs");
    if (p.n_domains < 1 || p.n_domains > kMaxDomain)
        throw Error(ErrorCode::InfeasibleParams, "n_domains", "need 1..4094 domains");
    if (p.n_topics < p.n_domains || p.n_topics > 65535)
        throw Error(ErrorCode::InfeasibleParams, "n_topics", "need n_domains <= n_topics <= 65535");
    if (!(p.local_fraction >= 0.0 && p.local_fraction <= 1.0))
        throw Error(ErrorCode::InfeasibleParams, "local_fraction", "must lie in [0, 1]");
    if (p.n_flows > 0x7FF - 0x80 + (1 << 20))
        throw Error(ErrorCode::InfeasibleParams, "n_flows", "too many flows for the identifier plan");

    Draw draw(seed);

    const bool host_domain = p.n_hosts > 0 && p.n_domains > 1;
    const int can_domains = host_domain ? p.n_domains - 1 : p.n_domains;

    // --- topology -----------------------------------------------------------
    std::vector<std::string> zones;
    for (int z = 0; z < p.n_zones; ++z) zones.push_back(zone_label(z, p.n_zones));

    const int edge_count = p.n_zones + p.n_hosts;
    const int n_switches = edge_count < 2 ? 0 : std::max(1, p.n_zones / 2);

    std::vector<Node> nodes;
    std::vector<std::string> host_names;
    for (const auto& z : zones) nodes.push_back(Node{"ZC" + z, NodeKind::Gateway, z, {}, {}});
    for (int h = 0; h < p.n_hosts; ++h) {
        host_names.push_back("HPC" + std::to_string(h + 1));
        nodes.push_back(Node{host_names.back(), NodeKind::Host, {}, {}, {}});
    }
    for (int s = 0; s < n_switches; ++s) nodes.push_back(Node{switch_label(s, n_switches), NodeKind::Switch, {}, {}, {}});

    std::vector<Link> links;
    for (int s = 0; s + 1 < n_switches; ++s)
        links.push_back(Link{switch_label(s, n_switches), 0, switch_label(s + 1, n_switches), 0});
    if (n_switches > 0) {
        for (int z = 0; z < p.n_zones; ++z)
            links.push_back(Link{"ZC" + zones[z], 0, switch_label(std::min(z / 2, n_switches - 1), n_switches), 0});
        for (const auto& h : host_names) links.push_back(Link{h, 0, switch_label(0, n_switches), 0});
    }

    // --- ECUs ---------------------------------------------------------------
    struct Ecu {
        std::string name;
        int zone;  // -1 for hosts
        std::uint16_t domain;
    };
    std::vector<Ecu> ecus;
    const int width = p.n_ecus >= 100 ? 3 : 2;
    for (int i = 0; i < p.n_ecus; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "E%0*d", width, i + 1);
        const int zone = i < p.n_zones ? i : static_cast<int>(draw.below(p.n_zones));
        const auto domain = static_cast<std::uint16_t>(1 + draw.below(can_domains));
        ecus.push_back(Ecu{buf, zone, domain});
    }
    for (const auto& h : host_names)
        ecus.push_back(Ecu{h, -1, static_cast<std::uint16_t>(host_domain ? p.n_domains : 1 + draw.below(p.n_domains))});

    std::map<std::pair<int, std::uint16_t>, std::vector<std::string>> bus_members;
    for (const auto& e : ecus)
        if (e.zone >= 0) bus_members[{e.zone, e.domain}].push_back(e.name);
    std::vector<Topology::Bus> buses;
    for (const auto& [key, members] : bus_members)
        buses.push_back(Topology::Bus{zones[key.first], zones[key.first] + "." + std::to_string(key.second), members});

    Topology topo(zones, std::move(nodes), std::move(links), std::move(buses));

    // --- flows --------------------------------------------------------------
    std::vector<std::vector<std::uint16_t>> topics_of_domain(p.n_domains + 1);
    for (int t = 1; t <= p.n_topics; ++t) topics_of_domain[1 + (t - 1) % p.n_domains].push_back(static_cast<std::uint16_t>(t));

    static const std::uint32_t kCycles[] = {10, 20, 40, 50, 100, 200, 500, 1000};
    std::vector<ControlFlow> flows;
    CanId next_id = 0x80;
    bool extended = false;
    for (int f = 0; f < p.n_flows; ++f) {
        ControlFlow cf;
        next_id += static_cast<CanId>(draw.between(1, 4));
        if (!extended && next_id > kMaxStandardId) {
            extended = true;
            next_id = 0x18DA0000;
        }
        cf.can_id = next_id;
        cf.extended = extended;

        const auto& sender = ecus[draw.below(ecus.size())];
        cf.sender = sender.name;
        cf.domain = sender.domain;
        const auto& topics = topics_of_domain[cf.domain];
        cf.topic = topics[draw.below(topics.size())];
        cf.priority = static_cast<std::uint8_t>(draw.below(8));
        cf.payload_len = static_cast<std::uint8_t>(draw.between(1, 8));
        cf.cycle_ms = kCycles[draw.below(std::size(kCycles))];

        std::vector<const Ecu*> same_zone, elsewhere;
        for (const auto& e : ecus) {
            if (e.name == sender.name) continue;
            (sender.zone >= 0 && e.zone == sender.zone ? same_zone : elsewhere).push_back(&e);
        }
        bool want_local = draw.unit() < p.local_fraction;
        if (same_zone.empty()) want_local = false;
        if (elsewhere.empty()) want_local = true;

        const auto& primary = want_local ? same_zone : elsewhere;
        const int k = draw.between(1, p.max_receivers);
        cf.receivers.insert(primary[draw.below(primary.size())]->name);
        // Local flows stay local; backbone flows may add receivers anywhere.
        std::vector<const Ecu*> extra = primary;
        if (!want_local) extra.insert(extra.end(), same_zone.begin(), same_zone.end());
        while (static_cast<int>(cf.receivers.size()) < k && cf.receivers.size() < extra.size())
            cf.receivers.insert(extra[draw.below(extra.size())]->name);
        flows.push_back(std::move(cf));
    }

    std::vector<EcuInfo> infos;
    for (const auto& e : ecus) {
        auto at = topo.attachment(e.name);
        infos.push_back(EcuInfo{e.name, at->zone, at->bus, e.domain});
    }
    return SynthResult{CommMatrix(std::move(infos), std::move(flows)), std::move(topo)};
}

}  // namespace flowsep
