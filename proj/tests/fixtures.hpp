#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "flowsep/matrix.hpp"
#include "flowsep/topology.hpp"

namespace fixtures {

inline std::string read(const std::string& name) {
    std::ifstream in(std::string(FLOWSEP_FIXTURES) + "/" + name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string path(const std::string& name) { return std::string(FLOWSEP_FIXTURES) + "/" + name; }

inline flowsep::CommMatrix df1_matrix() {
    return flowsep::parse_matrix(read("df1_matrix.json"), flowsep::MatrixFormat::Json);
}
inline flowsep::Topology df1_topology() { return flowsep::parse_topology(read("df1_topology.json")); }
inline flowsep::CommMatrix df2_matrix() {
    return flowsep::parse_matrix(read("df2_matrix.json"), flowsep::MatrixFormat::Json);
}
inline flowsep::Topology df2_topology() { return flowsep::parse_topology(read("df2_topology.json")); }

// DF1 flows
inline constexpr flowsep::CanId c1 = 0x100, c2 = 0x101, c3 = 0x200, c4 = 0x201, c5 = 0x202, c6 = 0x102;

}  // namespace fixtures
