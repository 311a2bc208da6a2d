#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flowsep/fabric.hpp"
#include "flowsep/matrix.hpp"
#include "flowsep/separation.hpp"
#include "flowsep/topology.hpp"

namespace flowsep {

using CfSet = std::set<CanId>;

/// Classification of the backbone flows for one (source, destination) pair.
struct PairMetrics {
    std::string src;
    std::string dst;
    std::size_t maximum = 0;
    CfSet legitimate;
    CfSet received;
    CfSet oversupplied;
    CfSet permitted;
    CfSet forbidden;
};

struct Counts {
    std::size_t maximum = 0;
    std::size_t legitimate = 0;
    std::size_t received = 0;
    std::size_t oversupplied = 0;
    std::size_t permitted = 0;
    std::size_t forbidden = 0;

    static Counts of(const PairMetrics& m);
    Counts& operator+=(const Counts& o);
    bool operator==(const Counts&) const = default;
};

struct RelationTable {
    Strategy strategy = Strategy::Message;
    std::vector<std::string> nodes;           // edge nodes, sorted
    std::vector<PairMetrics> pairs;           // ordered by (dst, src)
    std::map<std::string, Counts> per_destination;
    Counts network;
    std::vector<CanId> backbone;

    const PairMetrics* find(std::string_view src, std::string_view dst) const;
};

CfSet legitimate_set(const Placement& placement, std::string_view src, std::string_view dst);
CfSet received_set(const std::vector<NetworkFlow>& nfs, std::string_view src, std::string_view dst);
/// Backbone flows `src` could emit that the fabric would deliver to `dst`.
CfSet permitted_set(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment,
                    std::string_view src, std::string_view dst);

RelationTable relation_table(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment);
RelationTable relation_table(const CommMatrix& matrix, const Topology& topo, Strategy strategy);

/// Integer percentages of the maximum: legitimate, oversupplied,
/// permitted beyond received, forbidden. Always sums to 100 unless maximum is 0.
struct Shares {
    int legitimate = 0;
    int oversupplied = 0;
    int permitted_excess = 0;
    int forbidden = 0;

    int sum() const { return legitimate + oversupplied + permitted_excess + forbidden; }
    bool operator==(const Shares&) const = default;
};

Shares bucket_shares(const Counts& counts);
inline Shares bucket_shares(const PairMetrics& m) { return bucket_shares(Counts::of(m)); }

/// Percentage rounded half away from zero.
int percent(std::size_t part, std::size_t whole);

struct SubsetViolation {
    std::string src;
    std::string dst;
    std::string metric;  // "received" or "permitted"
    Strategy finer = Strategy::Message;
    Strategy coarser = Strategy::Message;
    CfSet missing;       // in finer but not in coarser
};

struct MonotonicityReport {
    bool topics_refine_domains = true;
    std::vector<std::uint16_t> spanning_topics;
    std::vector<SubsetViolation> violations;

    bool ok() const { return topics_refine_domains && violations.empty(); }
};

/// Checks message ⊆ topic ⊆ domain for received and permitted sets on every pair.
MonotonicityReport check_monotonicity(const CommMatrix& matrix, const Topology& topo);

struct Compromise {
    enum class Kind { Ecu, Gateway };
    Kind kind = Kind::Ecu;
    std::string name;
};

/// `ecu:<name>` or `gw:<name>`.
Compromise parse_compromise(std::string_view text);

struct AttackReport {
    CanId target_cf = 0;
    Strategy strategy = Strategy::Message;
    Compromise compromised;
    std::string source_gateway;
    std::set<std::string> dest_gateways;
    /// ECUs sharing a bus with the sender or a receiver, sender excluded.
    std::set<std::string> bus_unpreventable;
    /// Edge nodes whose spoofed emission reaches at least one destination.
    std::set<std::string> backbone_permitted_senders;
    std::map<std::string, std::set<std::string>> reachable_dests;
    /// Nodes receiving the flow without hosting a receiver.
    std::set<std::string> oversupplied_receivers;
    /// ECUs outside bus_unpreventable (sender excluded) whose edge node the
    /// backbone accepts the flow from.
    std::set<std::string> additional_backbone_ecus;

    std::string compromised_node;                 // edge node of the compromised party
    std::set<std::string> compromised_reach;      // inject(compromised_node)
    bool compromised_unpreventable = false;
    bool compromised_backbone_reach = false;      // reach ∩ dest_gateways ≠ ∅
    bool strict_ingress_blocks = false;           // gateway sender check would stop it
};

AttackReport attack_reachability(const CommMatrix& matrix, const Topology& topo, Strategy strategy, CanId target,
                                 const Compromise& compromised);

struct Discrepancy {
    std::string src;
    std::string dst;
    std::string metric;
    CanId cf = 0;
    bool in_static = false;
    bool in_simulation = false;

    std::string describe() const;
};

struct OracleResult {
    Strategy strategy = Strategy::Message;
    std::size_t backbone = 0;
    std::vector<Discrepancy> discrepancies;

    bool equal() const { return discrepancies.empty(); }
};

inline constexpr std::size_t kDefaultOracleBound = 200;

/// Rebuilds every pair's legitimate, received and permitted sets from fabric
/// simulation alone (all legitimate emissions plus every (node, flow)
/// injection) and compares them with the static relation table. The rules of
/// `deployment` are used as given. Throws InvalidArgument past `bound`.
OracleResult oracle_check(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment,
                          std::size_t bound = kDefaultOracleBound);
OracleResult oracle_check(const CommMatrix& matrix, const Topology& topo, Strategy strategy,
                          std::size_t bound = kDefaultOracleBound);

}  // namespace flowsep
