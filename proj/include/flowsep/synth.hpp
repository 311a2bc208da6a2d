#pragma once

#include <cstdint>

#include "flowsep/matrix.hpp"
#include "flowsep/topology.hpp"

namespace flowsep {

struct SynthParams {
    int n_zones = 4;
    int n_ecus = 40;
    int n_flows = 242;
    int n_domains = 5;
    int n_topics = 60;
    int max_receivers = 4;
    double local_fraction = 0.2;
    /// Ethernet-native hosts (HPC). When present and n_domains > 1 they own
    /// the last domain exclusively.
    int n_hosts = 0;
};

struct SynthResult {
    CommMatrix matrix;
    Topology topology;
};

/// Seeded stand-in for a production communication matrix mapped onto a zone
/// topology. Zones attach pairwise to a chain of switches; buses are
/// "<zone>.<domain>". Topics are drawn per domain, so they always refine the
/// domain partition. Output depends only on (params, seed).
SynthResult synth_matrix(const SynthParams& params, std::uint64_t seed);

}  // namespace flowsep
