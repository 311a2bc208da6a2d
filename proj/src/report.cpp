#include "flowsep/report.hpp"

#include <sstream>

#include "flowsep/error.hpp"

namespace flowsep {

using nlohmann::ordered_json;

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_field(fields[i]);
    }
    return out + "\n";
}

std::string md_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + c + " |";
    return out + "\n";
}

std::string md_rule(std::size_t n) {
    std::string out = "|";
    for (std::size_t i = 0; i < n; ++i) out += "---|";
    return out + "\n";
}

template <typename T>
std::string joined(const T& items, const char* sep = "|") {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += sep;
        if constexpr (std::is_same_v<typename T::value_type, CanId>)
            out += format_can_id(item);
        else if constexpr (std::is_same_v<typename T::value_type, int>)
            out += std::to_string(item);
        else
            out += item;
    }
    return out;
}

ordered_json ids(const CfSet& s) {
    auto out = ordered_json::array();
    for (auto id : s) out.push_back(format_can_id(id));
    return out;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string cell(std::size_t count, std::size_t whole) {
    return std::to_string(count) + " (" + std::to_string(percent(count, whole)) + "%)";
}

std::string fixed2(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

}  // namespace

Format parse_format(std::string_view text) {
    if (text == "json") return Format::Json;
    if (text == "csv") return Format::Csv;
    if (text == "md") return Format::Md;
    throw Error(ErrorCode::InvalidArgument, std::string(text), "format must be json, csv or md");
}

Analysis analyze(const CommMatrix& matrix, const Topology& topo, Strategy strategy) {
    const auto d = deploy(matrix, topo, strategy);
    return {strategy, nf_stats(d.nfs), relation_table(matrix, topo, d)};
}

// --- JSON ---------------------------------------------------------------------

ordered_json to_json(const NetworkFlow& nf) {
    ordered_json j;
    j["id"] = nf.id;
    j["strategy"] = to_string(nf.strategy);
    j["group"] = nf.strategy == Strategy::Message ? ordered_json(format_can_id(nf.group)) : ordered_json(nf.group);
    j["key"] = describe(nf.key);
    j["source"] = nf.source;
    j["dests"] = nf.dests;
    j["carried"] = ids(nf.carried);
    if (nf.udp_src_port) j["udp_src_port"] = *nf.udp_src_port;
    auto binding = ordered_json::array();
    for (const auto& [sw, port] : nf.ingress_binding) binding.push_back({{"switch", sw}, {"in_port", port}});
    j["ingress_binding"] = binding;
    return j;
}

ordered_json to_json(const FlowRule& rule) {
    ordered_json j;
    j["switch"] = rule.switch_name;
    j["priority"] = rule.priority;
    j["in_port"] = rule.in_port;
    j["match"] = describe(rule.key);
    j["out_ports"] = rule.out_ports;
    j["nf"] = rule.nf_id;
    return j;
}

ordered_json to_json(const NfStats& s) {
    ordered_json j;
    j["n_nfs"] = s.n_nfs;
    j["n_nfs_multi"] = s.n_nfs_multi;
    j["min_cfs"] = s.min_cfs;
    j["avg_cfs"] = s.avg_cfs;
    j["max_cfs"] = s.max_cfs;
    ordered_json h = ordered_json::object();
    for (const auto& [dests, count] : s.dest_histogram) h[std::to_string(dests)] = count;
    j["dest_histogram"] = h;
    return j;
}

ordered_json to_json(const Counts& c) {
    return {{"maximum", c.maximum},     {"legitimate", c.legitimate}, {"received", c.received},
            {"oversupplied", c.oversupplied}, {"permitted", c.permitted},   {"forbidden", c.forbidden}};
}

ordered_json to_json(const Shares& s) {
    return {{"legitimate", s.legitimate},
            {"oversupplied", s.oversupplied},
            {"permitted_excess", s.permitted_excess},
            {"forbidden", s.forbidden}};
}

ordered_json to_json(const PairMetrics& m) {
    ordered_json j;
    j["src"] = m.src;
    j["dst"] = m.dst;
    j["counts"] = to_json(Counts::of(m));
    j["shares"] = to_json(bucket_shares(m));
    j["legitimate"] = ids(m.legitimate);
    j["received"] = ids(m.received);
    j["oversupplied"] = ids(m.oversupplied);
    j["permitted"] = ids(m.permitted);
    j["forbidden"] = ids(m.forbidden);
    return j;
}

ordered_json to_json(const Analysis& a) {
    ordered_json j;
    j["strategy"] = to_string(a.strategy);
    j["nf_stats"] = to_json(a.stats);
    j["backbone"] = ids(CfSet(a.table.backbone.begin(), a.table.backbone.end()));
    j["nodes"] = a.table.nodes;
    auto pairs = ordered_json::array();
    for (const auto& p : a.table.pairs) pairs.push_back(to_json(p));
    j["pairs"] = pairs;
    ordered_json per_dest = ordered_json::object();
    for (const auto& [dst, c] : a.table.per_destination) {
        auto entry = to_json(c);
        entry["shares"] = to_json(bucket_shares(c));
        per_dest[dst] = entry;
    }
    j["per_destination"] = per_dest;
    j["network"] = to_json(a.table.network);
    j["network"]["shares"] = to_json(bucket_shares(a.table.network));
    return j;
}

ordered_json to_json(const DeliveryLog& log) {
    ordered_json j;
    auto events = ordered_json::array();
    for (const auto& e : log.events)
        events.push_back({{"seq", e.seq},
                          {"time_us", e.time_us},
                          {"kind", to_string(e.kind)},
                          {"node", e.node},
                          {"can_id", format_can_id(e.can_id)},
                          {"detail", e.detail}});
    j["events"] = events;
    ordered_json flows = ordered_json::object();
    for (const auto& [id, r] : log.flows)
        flows[format_can_id(id)] = {{"frames", r.frames},
                                    {"embedded", r.embedded},
                                    {"local_deliveries", r.local_deliveries},
                                    {"origins", r.origins},
                                    {"received_at", r.received_at},
                                    {"delivered_at", r.delivered_at}};
    j["flows"] = flows;
    ordered_json links = ordered_json::object();
    for (const auto& [name, c] : log.links) links[name] = {{"packets", c.packets}, {"bytes", c.bytes}};
    j["links"] = links;
    j["drops"] = log.drops;
    auto received = ordered_json::array();
    for (const auto& [pair, cfs] : log.received) {
        auto it = log.useful.find(pair);
        received.push_back({{"src", pair.first},
                            {"dst", pair.second},
                            {"cfs", ids(cfs)},
                            {"messages", log.received_messages.at(pair)},
                            {"useful", ids(it == log.useful.end() ? CfSet{} : it->second)}});
    }
    j["received"] = received;
    j["backbone_packets"] = log.backbone_packets;
    j["branches"] = {{"emitted", log.branches.emitted},
                     {"forwarded", log.branches.forwarded},
                     {"delivered", log.branches.delivered},
                     {"dropped", log.branches.dropped}};
    return j;
}

ordered_json to_json(const AttackReport& r) {
    ordered_json j;
    j["target_cf"] = format_can_id(r.target_cf);
    j["strategy"] = to_string(r.strategy);
    j["compromised"] = {{"kind", r.compromised.kind == Compromise::Kind::Ecu ? "ecu" : "gw"},
                        {"name", r.compromised.name},
                        {"node", r.compromised_node}};
    j["source_gateway"] = r.source_gateway;
    j["dest_gateways"] = r.dest_gateways;
    j["bus_unpreventable"] = r.bus_unpreventable;
    j["backbone_permitted_senders"] = r.backbone_permitted_senders;
    j["reachable_dests"] = r.reachable_dests;
    j["oversupplied_receivers"] = r.oversupplied_receivers;
    j["additional_backbone_ecus"] = r.additional_backbone_ecus;
    j["compromised_reach"] = r.compromised_reach;
    j["compromised_unpreventable"] = r.compromised_unpreventable;
    j["compromised_backbone_reach"] = r.compromised_backbone_reach;
    j["strict_ingress_blocks"] = r.strict_ingress_blocks;
    return j;
}

ordered_json to_json(const OracleResult& r) {
    ordered_json j;
    j["strategy"] = to_string(r.strategy);
    j["backbone"] = r.backbone;
    j["equal"] = r.equal();
    auto list = ordered_json::array();
    for (const auto& d : r.discrepancies) list.push_back(d.describe());
    j["discrepancies"] = list;
    return j;
}

// --- renderers ----------------------------------------------------------------

std::string render_nfs(const std::vector<Deployment>& deployments, Format format) {
    switch (format) {
    case Format::Json: {
        ordered_json j = ordered_json::object();
        for (const auto& d : deployments) {
            auto nfs = ordered_json::array();
            for (const auto& nf : d.nfs) nfs.push_back(to_json(nf));
            j[std::string(to_string(d.strategy))] = {{"stats", to_json(nf_stats(d.nfs))}, {"nfs", nfs}};
        }
        return dump(j);
    }
    case Format::Csv: {
        std::string out = csv_row({"strategy", "id", "source", "key", "dests", "carried"});
        for (const auto& d : deployments)
            for (const auto& nf : d.nfs)
                out += csv_row({std::string(to_string(d.strategy)), nf.id, nf.source, describe(nf.key),
                                joined(nf.dests), joined(nf.carried)});
        return out;
    }
    case Format::Md: {
        std::string out;
        for (const auto& d : deployments) {
            if (!out.empty()) out += "\n";
            out += "## " + std::string(to_string(d.strategy)) + "\n\n";
            out += md_row({"NF", "Source", "Key", "Destinations", "CFs"}) + md_rule(5);
            for (const auto& nf : d.nfs)
                out += md_row({nf.id, nf.source, describe(nf.key), joined(nf.dests, ", "), joined(nf.carried, ", ")});
        }
        return out;
    }
    }
    return {};
}

std::string render_rules(const std::vector<Deployment>& deployments, Format format) {
    switch (format) {
    case Format::Json: {
        ordered_json j = ordered_json::object();
        for (const auto& d : deployments) {
            ordered_json tables = ordered_json::object();
            for (const auto& [sw, rules] : d.rules) {
                auto list = ordered_json::array();
                for (const auto& r : rules) list.push_back(to_json(r));
                tables[sw] = list;
            }
            j[std::string(to_string(d.strategy))] = tables;
        }
        return dump(j);
    }
    case Format::Csv: {
        std::string out = csv_row({"strategy", "switch", "priority", "in_port", "match", "out_ports", "nf"});
        for (const auto& d : deployments)
            for (const auto& [sw, rules] : d.rules)
                for (const auto& r : rules)
                    out += csv_row({std::string(to_string(d.strategy)), sw, std::to_string(r.priority),
                                    std::to_string(r.in_port), describe(r.key), joined(r.out_ports), r.nf_id});
        return out;
    }
    case Format::Md: {
        std::string out;
        for (const auto& d : deployments) {
            if (!out.empty()) out += "\n";
            out += "## " + std::string(to_string(d.strategy)) + "\n\n";
            out += md_row({"Switch", "Priority", "In port", "Match", "Out ports", "NF"}) + md_rule(6);
            for (const auto& [sw, rules] : d.rules)
                for (const auto& r : rules)
                    out += md_row({sw, std::to_string(r.priority), std::to_string(r.in_port), describe(r.key),
                                   joined(r.out_ports, ", "), r.nf_id});
        }
        return out;
    }
    }
    return {};
}

namespace {

std::string analysis_md(const std::vector<Analysis>& analyses) {
    std::string out = "## Network flows\n\n";
    out += md_row({"Strategy", "NFs", "NFs with >1 CF", "Min CFs/NF", "Avg CFs/NF", "Max CFs/NF"}) + md_rule(6);
    std::set<std::size_t> dest_counts;
    for (const auto& a : analyses) {
        const auto& s = a.stats;
        out += md_row({std::string(to_string(a.strategy)), std::to_string(s.n_nfs), std::to_string(s.n_nfs_multi),
                       std::to_string(s.min_cfs), fixed2(s.avg_cfs), std::to_string(s.max_cfs)});
        for (const auto& [n, _] : s.dest_histogram) dest_counts.insert(n);
    }

    out += "\n## Destinations per NF\n\n";
    std::vector<std::string> head{"Destinations"};
    for (const auto& a : analyses) head.emplace_back(to_string(a.strategy));
    out += md_row(head) + md_rule(head.size());
    for (auto n : dest_counts) {
        std::vector<std::string> row{std::to_string(n)};
        for (const auto& a : analyses) {
            auto it = a.stats.dest_histogram.find(n);
            row.push_back(std::to_string(it == a.stats.dest_histogram.end() ? 0 : it->second));
        }
        out += md_row(row);
    }

    out += "\n## Communication relations\n\n";
    head = {"Dest", "Src", "Maximum", "Legitimate"};
    for (const auto& a : analyses)
        for (const char* col : {"Received", "Oversupplied", "Permitted"})
            head.push_back(std::string(to_string(a.strategy)) + " " + col);
    out += md_row(head) + md_rule(head.size());
    const auto& first = analyses.front().table;
    auto row_for = [&](const std::string& dst, const std::string& src, auto counts_of) {
        const Counts base = counts_of(first);
        std::vector<std::string> row{dst, src, std::to_string(base.maximum), cell(base.legitimate, base.maximum)};
        for (const auto& a : analyses) {
            const Counts c = counts_of(a.table);
            row.push_back(cell(c.received, c.maximum));
            row.push_back(cell(c.oversupplied, c.maximum));
            row.push_back(cell(c.permitted, c.maximum));
        }
        return md_row(row);
    };
    for (const auto& dst : first.nodes) {
        for (const auto& src : first.nodes) {
            if (src == dst) continue;
            out += row_for(dst, src, [&](const RelationTable& t) { return Counts::of(*t.find(src, dst)); });
        }
        out += row_for(dst, "Total", [&](const RelationTable& t) { return t.per_destination.at(dst); });
    }
    out += row_for("All", "Total", [](const RelationTable& t) { return t.network; });

    out += "\n## Shares of maximum (%)\n\n";
    out += md_row({"Src", "Dest", "Strategy", "Legitimate", "Oversupplied", "Permitted", "Forbidden"}) + md_rule(7);
    for (const auto& p : first.pairs)
        for (const auto& a : analyses) {
            const auto s = bucket_shares(*a.table.find(p.src, p.dst));
            out += md_row({p.src, p.dst, std::string(to_string(a.strategy)), std::to_string(s.legitimate),
                           std::to_string(s.oversupplied), std::to_string(s.permitted_excess),
                           std::to_string(s.forbidden)});
        }
    for (const auto& a : analyses) {
        const auto s = bucket_shares(a.table.network);
        out += md_row({"All", "All", std::string(to_string(a.strategy)), std::to_string(s.legitimate),
                       std::to_string(s.oversupplied), std::to_string(s.permitted_excess), std::to_string(s.forbidden)});
    }
    return out;
}

}  // namespace

std::string render_analysis(const std::vector<Analysis>& analyses, Format format) {
    if (analyses.empty()) throw Error(ErrorCode::InvalidArgument, "analysis", "nothing to render");
    switch (format) {
    case Format::Json: {
        auto list = ordered_json::array();
        for (const auto& a : analyses) list.push_back(to_json(a));
        return dump({{"analyses", list}});
    }
    case Format::Csv: {
        std::string out = csv_row({"strategy", "dst", "src", "maximum", "legitimate", "received", "oversupplied",
                                   "permitted", "forbidden", "share_legitimate", "share_oversupplied",
                                   "share_permitted_excess", "share_forbidden"});
        auto emit = [&](Strategy s, const std::string& dst, const std::string& src, const Counts& c) {
            const auto sh = bucket_shares(c);
            out += csv_row({std::string(to_string(s)), dst, src, std::to_string(c.maximum),
                            std::to_string(c.legitimate), std::to_string(c.received), std::to_string(c.oversupplied),
                            std::to_string(c.permitted), std::to_string(c.forbidden), std::to_string(sh.legitimate),
                            std::to_string(sh.oversupplied), std::to_string(sh.permitted_excess),
                            std::to_string(sh.forbidden)});
        };
        for (const auto& a : analyses) {
            for (const auto& dst : a.table.nodes) {
                for (const auto& p : a.table.pairs)
                    if (p.dst == dst) emit(a.strategy, dst, p.src, Counts::of(p));
                emit(a.strategy, dst, "Total", a.table.per_destination.at(dst));
            }
            emit(a.strategy, "All", "Total", a.table.network);
        }
        return out;
    }
    case Format::Md:
        return analysis_md(analyses);
    }
    return {};
}

std::string render_log(const DeliveryLog& log, Format format) {
    switch (format) {
    case Format::Json:
        return dump(to_json(log));
    case Format::Csv: {
        std::string out = csv_row({"seq", "time_us", "kind", "node", "can_id", "detail"});
        for (const auto& e : log.events)
            out += csv_row({std::to_string(e.seq), std::to_string(e.time_us), std::string(to_string(e.kind)), e.node,
                            format_can_id(e.can_id), e.detail});
        return out;
    }
    case Format::Md: {
        std::string out = "## Received\n\n";
        out += md_row({"Src", "Dest", "CFs", "Messages", "Useful"}) + md_rule(5);
        for (const auto& [pair, cfs] : log.received) {
            auto it = log.useful.find(pair);
            out += md_row({pair.first, pair.second, joined(cfs, ", "), std::to_string(log.received_messages.at(pair)),
                           it == log.useful.end() ? "" : joined(it->second, ", ")});
        }
        out += "\n## Links\n\n" + md_row({"Link", "Packets", "Bytes"}) + md_rule(3);
        for (const auto& [name, c] : log.links)
            out += md_row({name, std::to_string(c.packets), std::to_string(c.bytes)});
        out += "\n## Drops\n\n" + md_row({"Reason", "Count"}) + md_rule(2);
        for (const auto& [reason, n] : log.drops) out += md_row({reason, std::to_string(n)});
        out += "\nBackbone packets: " + std::to_string(log.backbone_packets) + "\n";
        return out;
    }
    }
    return {};
}

std::string render_attack(const AttackReport& r, Format format) {
    switch (format) {
    case Format::Json:
        return dump(to_json(r));
    case Format::Csv: {
        std::string out = csv_row({"field", "value"});
        const auto j = to_json(r);
        for (const auto& [k, v] : j.items())
            out += csv_row({k, v.is_string() ? v.get<std::string>() : v.dump()});
        return out;
    }
    case Format::Md: {
        std::string out = "## Attack on " + format_can_id(r.target_cf) + " (" + std::string(to_string(r.strategy)) +
                          ")\n\n";
        out += md_row({"Field", "Value"}) + md_rule(2);
        out += md_row({"Compromised", (r.compromised.kind == Compromise::Kind::Ecu ? "ecu:" : "gw:") +
                                          r.compromised.name});
        out += md_row({"Source gateway", r.source_gateway});
        out += md_row({"Destination gateways", joined(r.dest_gateways, ", ")});
        out += md_row({"Bus unpreventable", joined(r.bus_unpreventable, ", ")});
        out += md_row({"Backbone permitted senders", joined(r.backbone_permitted_senders, ", ")});
        out += md_row({"Oversupplied receivers", joined(r.oversupplied_receivers, ", ")});
        out += md_row({"Additional backbone ECUs", joined(r.additional_backbone_ecus, ", ")});
        out += md_row({"Compromised reach", joined(r.compromised_reach, ", ")});
        out += md_row({"Compromised unpreventable", r.compromised_unpreventable ? "yes" : "no"});
        out += md_row({"Strict ingress blocks", r.strict_ingress_blocks ? "yes" : "no"});
        out += "\n## Reachable destinations per sender\n\n" + md_row({"Sender", "Reached"}) + md_rule(2);
        for (const auto& [node, reach] : r.reachable_dests) out += md_row({node, joined(reach, ", ")});
        return out;
    }
    }
    return {};
}

std::string render_oracle(const std::vector<OracleResult>& results, Format format) {
    switch (format) {
    case Format::Json: {
        auto list = ordered_json::array();
        for (const auto& r : results) list.push_back(to_json(r));
        return dump({{"oracle", list}});
    }
    case Format::Csv: {
        std::string out = csv_row({"strategy", "metric", "src", "dst", "can_id", "static", "simulated"});
        for (const auto& r : results)
            for (const auto& d : r.discrepancies)
                out += csv_row({std::string(to_string(r.strategy)), d.metric, d.src, d.dst, format_can_id(d.cf),
                                d.in_static ? "1" : "0", d.in_simulation ? "1" : "0"});
        return out;
    }
    case Format::Md: {
        std::string out = md_row({"Strategy", "Backbone CFs", "Equal", "Discrepancies"}) + md_rule(4);
        for (const auto& r : results)
            out += md_row({std::string(to_string(r.strategy)), std::to_string(r.backbone), r.equal() ? "yes" : "no",
                           std::to_string(r.discrepancies.size())});
        return out;
    }
    }
    return {};
}

}  // namespace flowsep
