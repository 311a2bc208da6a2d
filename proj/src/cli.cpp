#include "flowsep/cli.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "flowsep/error.hpp"
#include "flowsep/fabric.hpp"
#include "flowsep/metrics.hpp"
#include "flowsep/report.hpp"
#include "flowsep/synth.hpp"

namespace flowsep {

namespace {

namespace fs = std::filesystem;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string matrix_path;
    std::string topology_path;
    std::string strategy = "message";
    std::string trace_path;
    std::string bus_map_path;
    std::string filter = "on";
    bool strict_ingress = false;
    std::string format = "json";
    std::string out_path;
    std::string cf;
    std::string compromise;
    std::uint64_t seed = 1;
    std::size_t oracle_bound = kDefaultOracleBound;
    SynthParams synth;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw InputError("cannot write " + path.string());
}

MatrixFormat matrix_format_of(const std::string& path) {
    return fs::path(path).extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Json;
}

CommMatrix load_matrix(const RunConfig& c) {
    return parse_matrix(read_file(c.matrix_path), matrix_format_of(c.matrix_path));
}

Topology load_topology(const RunConfig& c) { return parse_topology(read_file(c.topology_path)); }

std::vector<Strategy> strategies_of(const std::string& text) {
    if (text == "all") return {kAllStrategies.begin(), kAllStrategies.end()};
    return {parse_strategy(text)};
}

Strategy single_strategy(const std::string& text) {
    if (text == "all") throw InputError("this command takes a single strategy");
    return parse_strategy(text);
}

/// Runs `fn` once per strategy; concurrently when there are several.
template <typename Fn>
auto per_strategy(const std::vector<Strategy>& strategies, Fn fn) {
    using R = decltype(fn(Strategy::Message));
    std::vector<std::future<R>> futures;
    for (auto s : strategies)
        futures.push_back(std::async(strategies.size() > 1 ? std::launch::async : std::launch::deferred, fn, s));
    std::vector<R> out;
    for (auto& f : futures) out.push_back(f.get());
    return out;
}

void emit(const RunConfig& c, std::ostream& out, const std::string& text) {
    if (c.out_path.empty())
        out << text;
    else
        write_file(c.out_path, text);
}

nlohmann::ordered_json diagnostic(const Error& e) {
    return {{"code", to_string(e.code())}, {"subject", e.subject()}, {"message", e.what()}};
}

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    auto diags = nlohmann::ordered_json::array();
    std::optional<CommMatrix> matrix;
    std::optional<Topology> topo;
    try {
        matrix = load_matrix(c);
    } catch (const Error& e) {
        diags.push_back(diagnostic(e));
    }
    try {
        topo = load_topology(c);
    } catch (const Error& e) {
        diags.push_back(diagnostic(e));
    }
    std::optional<Placement> placement;
    if (matrix && topo) {
        try {
            placement = place(*matrix, *topo);
        } catch (const Error& e) {
            diags.push_back(diagnostic(e));
        }
    }
    err << diags.dump(2) << "\n";
    if (!diags.empty()) return kExitInputError;
    nlohmann::ordered_json summary;
    summary["valid"] = true;
    summary["flows"] = matrix->flows().size();
    summary["ecus"] = matrix->ecus().size();
    summary["backbone_flows"] = placement->backbone().size();
    summary["edge_nodes"] = topo->edge_nodes().size();
    summary["switches"] = topo->switches().size();
    emit(c, out, summary.dump(2) + "\n");
    return kExitOk;
}

std::vector<Deployment> deployments(const RunConfig& c) {
    const auto matrix = load_matrix(c);
    const auto topo = load_topology(c);
    return per_strategy(strategies_of(c.strategy), [&](Strategy s) { return deploy(matrix, topo, s); });
}

int cmd_derive(const RunConfig& c, std::ostream& out) {
    emit(c, out, render_nfs(deployments(c), parse_format(c.format)));
    return kExitOk;
}

int cmd_rules(const RunConfig& c, std::ostream& out) {
    emit(c, out, render_rules(deployments(c), parse_format(c.format)));
    return kExitOk;
}

int cmd_analyze(const RunConfig& c, std::ostream& out) {
    const auto format = parse_format(c.format);
    const auto matrix = load_matrix(c);
    const auto topo = load_topology(c);
    const auto analyses =
        per_strategy(strategies_of(c.strategy), [&](Strategy s) { return analyze(matrix, topo, s); });
    emit(c, out, render_analysis(analyses, format));
    return kExitOk;
}

FabricOptions fabric_options(const RunConfig& c) {
    FabricOptions o;
    if (c.filter == "on")
        o.filter = FilterMode::On;
    else if (c.filter == "off")
        o.filter = FilterMode::Off;
    else
        throw InputError("--filter must be on or off");
    o.strict_ingress = c.strict_ingress;
    return o;
}

int cmd_replay(const RunConfig& c, std::ostream& out) {
    const auto format = parse_format(c.format);
    const auto strategy = single_strategy(c.strategy);
    const auto options = fabric_options(c);
    const auto matrix = load_matrix(c);
    const auto topo = load_topology(c);
    const auto trace = parse_trace(read_file(c.trace_path));
    const auto bus_map = parse_bus_map(read_file(c.bus_map_path), topo);
    const auto deployment = deploy(matrix, topo, strategy);
    const Fabric fabric(matrix, topo, deployment, options);
    emit(c, out, render_log(fabric.replay(trace, bus_map), format));
    return kExitOk;
}

int cmd_attack(const RunConfig& c, std::ostream& out) {
    const auto format = parse_format(c.format);
    const auto strategy = single_strategy(c.strategy);
    const auto compromise = parse_compromise(c.compromise);
    CanId id = 0;
    try {
        id = parse_can_id(c.cf);
    } catch (const std::exception&) {
        throw InputError("bad --cf " + c.cf);
    }
    const auto matrix = load_matrix(c);
    const auto topo = load_topology(c);
    emit(c, out, render_attack(attack_reachability(matrix, topo, strategy, id, compromise), format));
    return kExitOk;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
    const auto result = synth_matrix(c.synth, c.seed);
    if (c.out_path.empty()) {
        nlohmann::ordered_json j;
        j["matrix"] = nlohmann::ordered_json::parse(serialize_matrix(result.matrix, MatrixFormat::Json));
        j["topology"] = nlohmann::ordered_json::parse(serialize_topology(result.topology));
        out << j.dump(2) << "\n";
        return kExitOk;
    }
    const fs::path dir(c.out_path);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create " + dir.string());
    const bool csv = c.format == "csv";
    if (!csv && c.format != "json") throw InputError("synth writes json or csv matrices");
    write_file(dir / (csv ? "matrix.csv" : "matrix.json"),
               serialize_matrix(result.matrix, csv ? MatrixFormat::Csv : MatrixFormat::Json));
    write_file(dir / "topology.json", serialize_topology(result.topology));
    return kExitOk;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
    const auto format = parse_format(c.format);
    const auto matrix = load_matrix(c);
    const auto topo = load_topology(c);
    const auto results = per_strategy(strategies_of(c.strategy),
                                      [&](Strategy s) { return oracle_check(matrix, topo, s, c.oracle_bound); });
    emit(c, out, render_oracle(results, format));
    for (const auto& r : results)
        if (!r.equal()) return kExitCheckFailed;
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Control-flow separation analysis for SDN in-vehicle backbones", "flowsep"};
    app.require_subcommand(1);
    RunConfig c;

    auto inputs = [&](CLI::App* sub) {
        sub->add_option("--matrix", c.matrix_path, "Communication matrix (.json or .csv)")->required();
        sub->add_option("--topology", c.topology_path, "Topology JSON")->required();
    };
    auto strategy = [&](CLI::App* sub, bool allow_all) {
        auto* opt = sub->add_option("--strategy", c.strategy, "Separation strategy")->capture_default_str();
        if (allow_all)
            opt->check(CLI::IsMember({"message", "domain", "topic", "all"}));
        else
            opt->check(CLI::IsMember({"message", "domain", "topic"}));
    };
    auto output = [&](CLI::App* sub, std::vector<std::string> formats) {
        sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
        sub->add_option("--out", c.out_path, "Output file (default: standard output)");
    };

    auto* validate = app.add_subcommand("validate", "Parse and cross-check a matrix and a topology");
    inputs(validate);
    validate->add_option("--out", c.out_path, "Summary output file");

    auto* derive = app.add_subcommand("derive", "Derive network flows");
    inputs(derive);
    strategy(derive, true);
    output(derive, {"json", "csv", "md"});

    auto* rules = app.add_subcommand("rules", "Synthesize switch flow rules");
    inputs(rules);
    strategy(rules, true);
    output(rules, {"json", "csv", "md"});

    auto* analyze_cmd = app.add_subcommand("analyze", "Network flow statistics and communication relations");
    inputs(analyze_cmd);
    strategy(analyze_cmd, true);
    output(analyze_cmd, {"json", "csv", "md"});

    auto* replay = app.add_subcommand("replay", "Replay a candump trace through the fabric");
    inputs(replay);
    strategy(replay, false);
    output(replay, {"json", "csv", "md"});
    replay->add_option("--trace", c.trace_path, "candump log")->required();
    replay->add_option("--bus-map", c.bus_map_path, "Bus map JSON")->required();
    replay->add_option("--filter", c.filter, "Gateway egress filtering")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();
    replay->add_flag("--strict-ingress", c.strict_ingress, "Drop frames whose sender is not on the arrival bus");

    auto* attack = app.add_subcommand("attack", "Reachability of one flow from a compromised ECU or gateway");
    inputs(attack);
    strategy(attack, false);
    output(attack, {"json", "csv", "md"});
    attack->add_option("--cf", c.cf, "Target CAN id")->required();
    attack->add_option("--compromise", c.compromise, "ecu:<name> or gw:<name>")->required();

    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic matrix and topology");
    synth->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    synth->add_option("--zones", c.synth.n_zones)->capture_default_str();
    synth->add_option("--ecus", c.synth.n_ecus)->capture_default_str();
    synth->add_option("--cfs", c.synth.n_flows)->capture_default_str();
    synth->add_option("--domains", c.synth.n_domains)->capture_default_str();
    synth->add_option("--topics", c.synth.n_topics)->capture_default_str();
    synth->add_option("--max-receivers", c.synth.max_receivers)->capture_default_str();
    synth->add_option("--local-fraction", c.synth.local_fraction)->capture_default_str();
    synth->add_option("--hosts", c.synth.n_hosts)->capture_default_str();
    synth->add_option("--format", c.format, "Matrix format when writing to a directory")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    synth->add_option("--out", c.out_path, "Output directory (default: combined JSON on standard output)");

    auto* oracle = app.add_subcommand("oracle", "Compare static metrics against exhaustive simulation");
    inputs(oracle);
    strategy(oracle, true);
    output(oracle, {"json", "csv", "md"});
    oracle->add_option("--oracle-bound", c.oracle_bound, "Largest backbone flow count to simulate")
        ->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInputError;
    }

    try {
        if (*validate) return cmd_validate(c, out, err);
        if (*derive) return cmd_derive(c, out);
        if (*rules) return cmd_rules(c, out);
        if (*analyze_cmd) return cmd_analyze(c, out);
        if (*replay) return cmd_replay(c, out);
        if (*attack) return cmd_attack(c, out);
        if (*synth) return cmd_synth(c, out);
        if (*oracle) return cmd_oracle(c, out);
    } catch (const Error& e) {
        err << nlohmann::ordered_json::array({diagnostic(e)}).dump(2) << "\n";
        return kExitInputError;
    } catch (const InputError& e) {
        err << nlohmann::ordered_json::array({{{"code", "InputError"}, {"subject", ""}, {"message", e.what()}}}).dump(2)
            << "\n";
        return kExitInputError;
    }
    return kExitInputError;
}

}  // namespace flowsep
