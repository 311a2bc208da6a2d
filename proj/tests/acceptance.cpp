#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "flowsep/cli.hpp"
#include "flowsep/codec.hpp"
#include "flowsep/metrics.hpp"
#include "flowsep/separation.hpp"
#include "flowsep/synth.hpp"

using namespace flowsep;
using namespace fixtures;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool subset(const CfSet& a, const CfSet& b) { return std::includes(b.begin(), b.end(), a.begin(), a.end()); }

SynthResult vehicle(std::uint64_t seed) {
    SynthParams p;
    p.n_zones = 2 + static_cast<int>(seed % 3);
    p.n_flows = 242;
    p.n_hosts = static_cast<int>(seed % 2);
    return synth_matrix(p, seed);
}

// Backbone flows and their source edge node, straight from the wiring.
std::map<CanId, std::string> backbone_sources(const CommMatrix& m, const Topology& t) {
    std::map<CanId, std::string> out;
    for (const auto& cf : m.flows()) {
        const auto src = t.attachment(cf.sender)->node;
        for (const auto& r : cf.receivers)
            if (t.attachment(r)->node != src) out[cf.can_id] = src;
    }
    return out;
}

Outcome by_message_isolation() {
    Outcome o;
    const auto start = Clock::now();
    std::size_t pairs = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = vehicle(seed);
        for (const auto& pm : relation_table(r.matrix, r.topology, Strategy::Message).pairs) {
            ++pairs;
            if (pm.received != pm.legitimate || !pm.oversupplied.empty() || pm.permitted != pm.legitimate)
                o.fail("seed " + std::to_string(seed) + " pair " + pm.src + "->" + pm.dst);
        }
    }
    const double took = seconds_since(start);
    if (took >= 30) o.fail("took " + std::to_string(took) + " s");
    if (o.pass) o.detail = std::to_string(pairs) + " pairs over 100 matrices in " + std::to_string(took) + " s";
    return o;
}

Outcome nf_count_laws() {
    Outcome o;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = vehicle(seed);
        const auto sources = backbone_sources(r.matrix, r.topology);
        std::set<std::pair<std::string, std::uint16_t>> by_domain, by_topic;
        for (const auto& [id, src] : sources) {
            by_domain.emplace(src, r.matrix.at(id).domain);
            by_topic.emplace(src, r.matrix.at(id).topic);
        }
        const std::map<Strategy, std::size_t> expected = {
            {Strategy::Message, sources.size()}, {Strategy::Domain, by_domain.size()}, {Strategy::Topic, by_topic.size()}};
        for (auto s : kAllStrategies) {
            const auto d = deploy(r.matrix, r.topology, s);
            std::size_t carried = 0;
            for (const auto& nf : d.nfs) carried += nf.carried.size();
            const auto tag = "seed " + std::to_string(seed) + " " + std::string(to_string(s));
            if (d.nfs.size() != expected.at(s)) o.fail(tag + ": NF count " + std::to_string(d.nfs.size()));
            if (carried != sources.size()) o.fail(tag + ": carried " + std::to_string(carried));
        }
    }
    if (o.pass) o.detail = "100 matrices, 3 strategies";
    return o;
}

Outcome vehicle_arithmetic() {
    Outcome o;
    const auto m = df2_matrix();
    const auto t = df2_topology();
    const auto backbone = backbone_sources(m, t).size();
    for (auto s : kAllStrategies) {
        const auto table = relation_table(m, t, s);
        const auto n = table.nodes.size();
        for (const auto& pm : table.pairs) {
            const auto c = Counts::of(pm);
            if (c.maximum != backbone) o.fail("pair maximum " + std::to_string(c.maximum));
            // legitimate, oversupplied, permitted excess and forbidden partition the maximum
            if (c.legitimate + c.oversupplied + (c.permitted - c.received) + c.forbidden != c.maximum)
                o.fail("buckets of " + pm.src + "->" + pm.dst + " do not partition");
            if (bucket_shares(c).sum() != 100) o.fail("shares of " + pm.src + "->" + pm.dst);
        }
        for (const auto& [dst, c] : table.per_destination) {
            if (c.maximum != (n - 1) * backbone) o.fail("destination maximum at " + dst);
            if (bucket_shares(c).sum() != 100) o.fail("shares at " + dst);
        }
        if (table.network.maximum != n * (n - 1) * backbone) o.fail("network maximum");
        if (bucket_shares(table.network).sum() != 100) o.fail("network shares");
    }
    if (o.pass)
        o.detail = std::to_string(backbone) + " backbone flows, destination maximum " +
                   std::to_string((t.edge_nodes().size() - 1) * backbone);
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    const auto start = Clock::now();
    std::vector<std::pair<std::string, SynthResult>> cases;
    cases.emplace_back("DF1", SynthResult{df1_matrix(), df1_topology()});
    cases.emplace_back("DF2", SynthResult{df2_matrix(), df2_topology()});
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        SynthParams p;
        p.n_zones = 2 + static_cast<int>(seed % 3);
        p.n_ecus = 20;
        p.n_flows = 60;
        p.n_domains = 4;
        p.n_topics = 15;
        p.n_hosts = static_cast<int>(seed % 2);
        cases.emplace_back("seed " + std::to_string(seed), synth_matrix(p, seed));
    }
    for (const auto& [name, r] : cases)
        for (auto s : kAllStrategies) {
            const auto res = oracle_check(r.matrix, r.topology, s);
            if (name != "DF2" && res.backbone > 60) o.fail(name + " has " + std::to_string(res.backbone) + " backbone flows");
            if (!res.equal()) o.fail(name + " " + std::string(to_string(s)) + ": " + res.discrepancies.front().describe());
        }
    const double took = seconds_since(start);
    if (took >= 60) o.fail("took " + std::to_string(took) + " s");
    if (o.pass) o.detail = std::to_string(cases.size()) + " matrices x 3 strategies in " + std::to_string(took) + " s";
    return o;
}

Outcome codec_round_trip() {
    Outcome o;
    std::mt19937_64 rng(5);
    auto pick = [&](std::uint64_t n) { return static_cast<std::uint32_t>(rng() % n); };
    const CanId extremes[] = {0, 0x7FF, 0x800, 0x1FFFFFFF};
    std::size_t l2_frames = 0, someip_frames = 0;
    for (int i = 0; i < 12000; ++i) {
        codec::CanFrame f;
        f.extended = pick(2) == 1;
        f.can_id = i < 8 ? extremes[i % 4] : pick(std::uint64_t{f.extended ? kMaxExtendedId : kMaxStandardId} + 1);
        if (f.can_id > kMaxStandardId) f.extended = true;
        f.data.resize(i < 8 ? (i < 4 ? 0 : 8) : pick(9));
        for (auto& b : f.data) b = static_cast<std::uint8_t>(pick(256));
        const codec::FlowMeta meta{f.can_id, f.extended, static_cast<std::uint16_t>(1 + pick(300)),
                                   static_cast<std::uint16_t>(1 + pick(2000)), static_cast<std::uint8_t>(pick(8))};
        const MacAddr mac{{0x02, 0, 0, 0, 0, static_cast<std::uint8_t>(pick(256))}};

        const auto l2 = codec::encode_l2(meta, f, mac);
        const auto back = codec::decode_l2(l2);
        if (!(back.frame == f) || back.vlan_id != meta.domain || back.pcp != meta.priority) o.fail("L2 frame " + std::to_string(i));
        if (l2.size() < codec::kMinFrameLen || l2.size() > codec::kMaxFrameLen) o.fail("L2 size");
        if (f.dlc() == 8) {
            const auto payload = l2.size() - codec::kTaggedHeaderLen - codec::kFcsLen;
            const bool tagged = l2[12] == 0x81 && l2[13] == 0x00 && l2[16] == 0x88 && l2[17] == 0xB5;
            if (l2.size() != 64 || payload != 42 || !tagged) o.fail("L2 dlc 8 layout");
        }
        ++l2_frames;

        const codec::TunnelGroup group = i % 2 ? codec::TunnelGroup{codec::GroupKind::Domain, meta.domain}
                                               : codec::TunnelGroup{codec::GroupKind::Topic, meta.topic};
        const auto s = codec::encode_someip(meta, f, {mac, Ipv4Addr::from_octets(10, 0, 0, 1)}, group);
        const auto sback = codec::decode_someip(s);
        if (!(sback.frame == f) || !(sback.group == group) || sback.priority() != meta.priority) o.fail("SOME/IP frame " + std::to_string(i));
        if (s.size() < codec::kMinFrameLen || s.size() > codec::kMaxFrameLen) o.fail("SOME/IP size");
        ++someip_frames;
    }
    if (o.pass) o.detail = std::to_string(l2_frames) + " L2 and " + std::to_string(someip_frames) + " SOME/IP frames";
    return o;
}

Outcome monotonicity() {
    Outcome o;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = vehicle(seed);
        std::map<Strategy, RelationTable> tables;
        for (auto s : kAllStrategies) tables[s] = relation_table(r.matrix, r.topology, s);
        for (std::size_t i = 0; i < tables.at(Strategy::Message).pairs.size(); ++i) {
            const auto& msg = tables.at(Strategy::Message).pairs[i];
            const auto& top = tables.at(Strategy::Topic).pairs[i];
            const auto& dom = tables.at(Strategy::Domain).pairs[i];
            if (!subset(msg.permitted, top.permitted) || !subset(top.permitted, dom.permitted))
                o.fail("seed " + std::to_string(seed) + " pair " + msg.src + "->" + msg.dst);
        }
        if (!check_monotonicity(r.matrix, r.topology).ok()) o.fail("seed " + std::to_string(seed) + " reported");
    }
    // Move c5 (domain 2) into the topic of c6 (domain 1).
    const auto df1 = df1_matrix();
    auto flows = df1.flows();
    for (auto& f : flows)
        if (f.can_id == c5) f.topic = 4;
    std::vector<EcuInfo> ecus;
    for (const auto& [name, info] : df1.ecus()) ecus.push_back(info);
    const auto report = check_monotonicity(CommMatrix(ecus, flows), df1_topology());
    if (report.ok() || report.topics_refine_domains || report.violations.empty())
        o.fail("spanning topic not reported");
    if (o.pass)
        o.detail = "20 refining matrices hold; spanning topic gives " + std::to_string(report.violations.size()) +
                   " violation(s)";
    return o;
}

Outcome case_study() {
    Outcome o;
    const auto m = df1_matrix();
    const auto t = df1_topology();
    const auto gw = parse_compromise("gw:ZCFR");
    const auto by_msg = attack_reachability(m, t, Strategy::Message, c1, gw);
    const auto by_dom = attack_reachability(m, t, Strategy::Domain, c1, gw);
    if (!by_msg.compromised_reach.empty()) o.fail("message reach not empty");
    if (by_dom.compromised_reach.empty()) o.fail("domain reach empty");
    if (!std::includes(by_dom.compromised_reach.begin(), by_dom.compromised_reach.end(),
                       by_msg.compromised_reach.begin(), by_msg.compromised_reach.end()))
        o.fail("domain reach not a superset");
    for (auto s : kAllStrategies) {
        const auto r = attack_reachability(m, t, s, c1, parse_compromise("ecu:E"));
        if (!r.bus_unpreventable.contains("E") || !r.compromised_unpreventable) o.fail("E not flagged under " + std::string(to_string(s)));
    }
    if (o.pass) o.detail = "gw:ZCFR reaches " + std::to_string(by_dom.compromised_reach.size()) + " nodes by domain, none by message";
    return o;
}

Outcome determinism() {
    Outcome o;
    const std::vector<std::string> common = {"--matrix", path("df2_matrix.json"), "--topology", path("df2_topology.json")};
    std::vector<std::vector<std::string>> commands;
    for (const auto* fmt : {"json", "csv", "md"}) {
        commands.push_back({"analyze", "--strategy", "all", "--format", fmt});
        commands.push_back({"derive", "--strategy", "all", "--format", fmt});
    }
    for (const auto* s : {"message", "domain", "topic"})
        commands.push_back({"replay", "--strategy", s, "--matrix", path("df1_matrix.json"), "--topology",
                            path("df1_topology.json"), "--trace", path("df1_trace.log"), "--bus-map",
                            path("df1_bus_map.json")});
    for (auto args : commands) {
        if (args[0] != "replay") args.insert(args.end(), common.begin(), common.end());
        std::string first;
        for (int i = 0; i < 3; ++i) {
            std::ostringstream out, err;
            if (run_cli(args, out, err) != kExitOk) o.fail(args[0] + " failed: " + err.str());
            if (i == 0) first = out.str();
            else if (out.str() != first) o.fail(args[0] + " output differs between runs");
        }
    }
    if (o.pass) o.detail = std::to_string(commands.size()) + " commands x 3 runs identical";
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"by-message isolation", by_message_isolation},
        {"network flow count laws", nf_count_laws},
        {"vehicle-scale arithmetic", vehicle_arithmetic},
        {"oracle equivalence", oracle_equivalence},
        {"codec round trip", codec_round_trip},
        {"monotonicity", monotonicity},
        {"case study", case_study},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failed;
        std::cout << "criterion " << i + 1 << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail << std::endl;
    }
    return failed ? 1 : 0;
}
