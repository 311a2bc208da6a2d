#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "flowsep/fabric.hpp"
#include "flowsep/metrics.hpp"
#include "flowsep/separation.hpp"

namespace flowsep {

enum class Format { Json, Csv, Md };
Format parse_format(std::string_view text);

struct Analysis {
    Strategy strategy = Strategy::Message;
    NfStats stats;
    RelationTable table;
};

Analysis analyze(const CommMatrix& matrix, const Topology& topo, Strategy strategy);

nlohmann::ordered_json to_json(const NetworkFlow& nf);
nlohmann::ordered_json to_json(const FlowRule& rule);
nlohmann::ordered_json to_json(const NfStats& stats);
nlohmann::ordered_json to_json(const PairMetrics& m);
nlohmann::ordered_json to_json(const Counts& c);
nlohmann::ordered_json to_json(const Shares& s);
nlohmann::ordered_json to_json(const Analysis& a);
nlohmann::ordered_json to_json(const DeliveryLog& log);
nlohmann::ordered_json to_json(const AttackReport& r);
nlohmann::ordered_json to_json(const OracleResult& r);

// Renderers return the complete document, newline-terminated.
std::string render_nfs(const std::vector<Deployment>& deployments, Format format);
std::string render_rules(const std::vector<Deployment>& deployments, Format format);
std::string render_analysis(const std::vector<Analysis>& analyses, Format format);
std::string render_log(const DeliveryLog& log, Format format);
std::string render_attack(const AttackReport& report, Format format);
std::string render_oracle(const std::vector<OracleResult>& results, Format format);

}  // namespace flowsep
