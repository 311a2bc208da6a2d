#include "flowsep/matrix.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flowsep/error.hpp"

namespace flowsep {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

void validate_flow(const ControlFlow& cf) {
    const auto id = format_can_id(cf.can_id);
    if (cf.can_id > (cf.extended ? kMaxExtendedId : kMaxStandardId))
        throw Error(ErrorCode::CanIdOutOfRange, id, cf.extended ? "exceeds 29 bits" : "exceeds 11 bits");
    if (cf.sender.empty()) throw Error(ErrorCode::MalformedRecord, id, "empty sender");
    if (cf.receivers.empty()) throw Error(ErrorCode::EmptyReceivers, id);
    if (cf.receivers.contains(cf.sender)) throw Error(ErrorCode::SenderIsReceiver, id, cf.sender);
    for (const auto& r : cf.receivers)
        if (r.empty()) throw Error(ErrorCode::MalformedRecord, id, "empty receiver name");
    if (cf.priority > kMaxPriority) throw Error(ErrorCode::PriorityOutOfRange, id);
    if (cf.domain < 1 || cf.domain > kMaxDomain) throw Error(ErrorCode::DomainOutOfRange, id);
    if (cf.payload_len > kMaxCanPayload) throw Error(ErrorCode::PayloadOutOfRange, id);
    if (cf.cycle_ms && *cf.cycle_ms == 0) throw Error(ErrorCode::MalformedRecord, id, "cycle_ms must be positive");
}

template <typename T>
T narrow_checked(long long value, ErrorCode code, const std::string& subject, long long lo, long long hi) {
    if (value < lo || value > hi) throw Error(code, subject, "value " + std::to_string(value) + " out of range");
    return static_cast<T>(value);
}

}  // namespace

CommMatrix::CommMatrix(std::vector<EcuInfo> ecus, std::vector<ControlFlow> flows) {
    for (auto& ecu : ecus) {
        if (ecu.name.empty()) throw Error(ErrorCode::MalformedRecord, "ecus", "empty ECU name");
        if (ecu.domain > kMaxDomain) throw Error(ErrorCode::DomainOutOfRange, ecu.name);
        auto name = ecu.name;
        if (!ecus_.emplace(name, std::move(ecu)).second) throw Error(ErrorCode::DuplicateEcu, name);
    }

    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& cf = flows[i];
        validate_flow(cf);
        if (!index_.emplace(cf.can_id, i).second) throw Error(ErrorCode::DuplicateCanId, format_can_id(cf.can_id));
    }

    // The domain of a flow is the domain of its sending ECU.
    for (const auto& cf : flows) {
        auto [it, inserted] = ecus_.try_emplace(cf.sender, EcuInfo{cf.sender, {}, {}, cf.domain});
        if (!inserted) {
            if (it->second.domain == 0)
                it->second.domain = cf.domain;
            else if (it->second.domain != cf.domain)
                throw Error(ErrorCode::DomainMismatch, format_can_id(cf.can_id),
                            "sender " + cf.sender + " belongs to domain " + std::to_string(it->second.domain));
        }
        for (const auto& r : cf.receivers) ecus_.try_emplace(r, EcuInfo{r, {}, {}, 0});
    }

    // Fresh singleton topics for flows that arrive without one.
    std::uint32_t next_topic = 1;
    for (const auto& cf : flows) next_topic = std::max<std::uint32_t>(next_topic, cf.topic + 1u);
    std::vector<std::size_t> untopiced;
    for (std::size_t i = 0; i < flows.size(); ++i)
        if (flows[i].topic == 0) untopiced.push_back(i);
    std::sort(untopiced.begin(), untopiced.end(),
              [&](std::size_t a, std::size_t b) { return flows[a].can_id < flows[b].can_id; });
    for (auto i : untopiced) {
        if (next_topic > std::numeric_limits<std::uint16_t>::max())
            throw Error(ErrorCode::TopicSpaceExhausted, format_can_id(flows[i].can_id));
        flows[i].topic = static_cast<std::uint16_t>(next_topic++);
    }

    flows_ = std::move(flows);
}

const ControlFlow* CommMatrix::find(CanId id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &flows_[it->second];
}

const ControlFlow& CommMatrix::at(CanId id) const {
    const auto* cf = find(id);
    if (!cf) throw Error(ErrorCode::UnknownCanId, format_can_id(id));
    return *cf;
}

std::set<std::uint16_t> CommMatrix::domains() const {
    std::set<std::uint16_t> out;
    for (const auto& cf : flows_) out.insert(cf.domain);
    return out;
}

std::set<std::uint16_t> CommMatrix::topics() const {
    std::set<std::uint16_t> out;
    for (const auto& cf : flows_) out.insert(cf.topic);
    return out;
}

// --- JSON -----------------------------------------------------------------

namespace {

CommMatrix matrix_from_json(const json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedRecord, "offset 0", "top level must be an object");

    std::vector<EcuInfo> ecus;
    if (auto it = doc.find("ecus"); it != doc.end()) {
        if (!it->is_array()) throw Error(ErrorCode::MalformedRecord, "ecus", "must be an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string where = "ecus[" + std::to_string(i) + "]";
            try {
                EcuInfo ecu;
                ecu.name = e.at("name").get<std::string>();
                ecu.zone = e.value("zone", std::string{});
                ecu.bus = e.value("bus", std::string{});
                ecu.domain = narrow_checked<std::uint16_t>(e.value("domain", 0LL), ErrorCode::DomainOutOfRange,
                                                           ecu.name, 0, kMaxDomain);
                ecus.push_back(std::move(ecu));
            } catch (const json::exception& ex) {
                throw Error(ErrorCode::MalformedRecord, where, ex.what());
            }
        }
    }

    auto flows_it = doc.find("flows");
    if (flows_it == doc.end() || !flows_it->is_array())
        throw Error(ErrorCode::MalformedRecord, "flows", "missing flows array");

    std::vector<ControlFlow> flows;
    for (std::size_t i = 0; i < flows_it->size(); ++i) {
        const auto& f = (*flows_it)[i];
        const std::string where = "flows[" + std::to_string(i) + "]";
        try {
            ControlFlow cf;
            const auto& id = f.at("can_id");
            if (id.is_string())
                cf.can_id = parse_can_id(id.get<std::string>());
            else
                cf.can_id = narrow_checked<CanId>(id.get<long long>(), ErrorCode::CanIdOutOfRange, where, 0,
                                                  kMaxExtendedId);
            const auto subject = format_can_id(cf.can_id);
            cf.extended = f.value("extended", cf.can_id > kMaxStandardId);
            cf.sender = f.at("sender").get<std::string>();
            for (const auto& r : f.at("receivers")) cf.receivers.insert(r.get<std::string>());
            cf.domain = narrow_checked<std::uint16_t>(f.at("domain").get<long long>(), ErrorCode::DomainOutOfRange,
                                                      subject, 1, kMaxDomain);
            cf.topic = narrow_checked<std::uint16_t>(f.value("topic", 0LL), ErrorCode::TopicOutOfRange, subject, 0,
                                                     std::numeric_limits<std::uint16_t>::max());
            cf.priority = narrow_checked<std::uint8_t>(f.at("priority").get<long long>(),
                                                       ErrorCode::PriorityOutOfRange, subject, 0, kMaxPriority);
            cf.payload_len = narrow_checked<std::uint8_t>(f.value("payload_len", 8LL), ErrorCode::PayloadOutOfRange,
                                                          subject, 0, kMaxCanPayload);
            if (auto c = f.find("cycle_ms"); c != f.end() && !c->is_null())
                cf.cycle_ms = narrow_checked<std::uint32_t>(c->get<long long>(), ErrorCode::MalformedRecord, subject,
                                                            1, std::numeric_limits<std::uint32_t>::max());
            flows.push_back(std::move(cf));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::MalformedRecord, where, ex.what());
        }
    }
    return CommMatrix(std::move(ecus), std::move(flows));
}

ordered_json matrix_to_json(const CommMatrix& m) {
    ordered_json doc;
    doc["ecus"] = ordered_json::array();
    for (const auto& [name, ecu] : m.ecus()) {
        ordered_json e;
        e["name"] = name;
        if (!ecu.zone.empty()) e["zone"] = ecu.zone;
        if (!ecu.bus.empty()) e["bus"] = ecu.bus;
        if (ecu.domain != 0) e["domain"] = ecu.domain;
        doc["ecus"].push_back(std::move(e));
    }
    doc["flows"] = ordered_json::array();
    for (const auto& cf : m.flows()) {
        ordered_json f;
        f["can_id"] = format_can_id(cf.can_id);
        f["extended"] = cf.extended;
        f["sender"] = cf.sender;
        f["receivers"] = cf.receivers;
        f["domain"] = cf.domain;
        f["topic"] = cf.topic;
        f["priority"] = cf.priority;
        f["payload_len"] = cf.payload_len;
        if (cf.cycle_ms) f["cycle_ms"] = *cf.cycle_ms;
        doc["flows"].push_back(std::move(f));
    }
    return doc;
}

// --- CSV ------------------------------------------------------------------

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

long long csv_int(std::string_view field, const std::string& where) {
    try {
        std::size_t used = 0;
        std::string s(field);
        long long v = std::stoll(s, &used, 10);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedRecord, where, "expected integer, got '" + std::string(field) + "'");
    }
}

bool csv_bool(std::string_view field, const std::string& where) {
    if (field == "true" || field == "1") return true;
    if (field == "false" || field == "0") return false;
    throw Error(ErrorCode::MalformedRecord, where, "expected boolean, got '" + std::string(field) + "'");
}

constexpr std::string_view kCsvHeader = "can_id,extended,sender,receivers,domain,topic,priority,payload_len,cycle_ms";

CommMatrix matrix_from_csv(std::string_view text) {
    std::vector<EcuInfo> ecus;
    std::vector<ControlFlow> flows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const std::string where = "line " + std::to_string(line_no);
        auto fields = split(line, ',');
        if (fields[0] == "can_id") continue;
        if (fields[0] == "@ecu") {
            if (fields.size() != 5) throw Error(ErrorCode::MalformedRecord, where, "@ecu needs name,zone,bus,domain");
            EcuInfo ecu{std::string(fields[1]), std::string(fields[2]), std::string(fields[3]), 0};
            if (!fields[4].empty())
                ecu.domain = narrow_checked<std::uint16_t>(csv_int(fields[4], where), ErrorCode::DomainOutOfRange,
                                                           ecu.name, 0, kMaxDomain);
            ecus.push_back(std::move(ecu));
            continue;
        }
        if (fields.size() < 7 || fields.size() > 9)
            throw Error(ErrorCode::MalformedRecord, where, "expected 7 to 9 fields");
        ControlFlow cf;
        try {
            cf.can_id = parse_can_id(fields[0]);
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedRecord, where, "bad can_id");
        }
        const auto subject = format_can_id(cf.can_id);
        cf.extended = fields[1].empty() ? cf.can_id > kMaxStandardId : csv_bool(fields[1], where);
        cf.sender = std::string(fields[2]);
        if (!fields[3].empty())
            for (auto r : split(fields[3], '|')) cf.receivers.insert(std::string(r));
        cf.domain = narrow_checked<std::uint16_t>(csv_int(fields[4], where), ErrorCode::DomainOutOfRange, subject, 1,
                                                  kMaxDomain);
        if (!fields[5].empty())
            cf.topic = narrow_checked<std::uint16_t>(csv_int(fields[5], where), ErrorCode::TopicOutOfRange, subject,
                                                     0, std::numeric_limits<std::uint16_t>::max());
        cf.priority = narrow_checked<std::uint8_t>(csv_int(fields[6], where), ErrorCode::PriorityOutOfRange, subject,
                                                   0, kMaxPriority);
        if (fields.size() > 7 && !fields[7].empty())
            cf.payload_len = narrow_checked<std::uint8_t>(csv_int(fields[7], where), ErrorCode::PayloadOutOfRange,
                                                          subject, 0, kMaxCanPayload);
        if (fields.size() > 8 && !fields[8].empty())
            cf.cycle_ms = narrow_checked<std::uint32_t>(csv_int(fields[8], where), ErrorCode::MalformedRecord,
                                                        subject, 1, std::numeric_limits<std::uint32_t>::max());
        flows.push_back(std::move(cf));
    }
    return CommMatrix(std::move(ecus), std::move(flows));
}

std::string matrix_to_csv(const CommMatrix& m) {
    std::ostringstream out;
    for (const auto& [name, ecu] : m.ecus()) {
        out << "@ecu," << name << ',' << ecu.zone << ',' << ecu.bus << ',';
        if (ecu.domain != 0) out << ecu.domain;
        out << '\n';
    }
    out << kCsvHeader << '\n';
    for (const auto& cf : m.flows()) {
        out << format_can_id(cf.can_id) << ',' << (cf.extended ? "true" : "false") << ',' << cf.sender << ',';
        bool first = true;
        for (const auto& r : cf.receivers) {
            if (!first) out << '|';
            out << r;
            first = false;
        }
        out << ',' << cf.domain << ',' << cf.topic << ',' << int{cf.priority} << ',' << int{cf.payload_len} << ',';
        if (cf.cycle_ms) out << *cf.cycle_ms;
        out << '\n';
    }
    return out.str();
}

}  // namespace

CommMatrix parse_matrix(std::string_view text, MatrixFormat format) {
    if (format == MatrixFormat::Csv) return matrix_from_csv(text);
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& ex) {
        throw Error(ErrorCode::MalformedRecord, "offset " + std::to_string(ex.byte), ex.what());
    }
    return matrix_from_json(doc);
}

std::string serialize_matrix(const CommMatrix& matrix, MatrixFormat format) {
    if (format == MatrixFormat::Csv) return matrix_to_csv(matrix);
    return matrix_to_json(matrix).dump(2) + "\n";
}

CommMatrix assign_topics(const CommMatrix& matrix, const std::map<CanId, std::uint16_t>& grouping) {
    std::uint32_t next_topic = 1;
    for (const auto& [id, topic] : grouping) {
        if (!matrix.find(id)) throw Error(ErrorCode::UnknownCanId, format_can_id(id));
        if (topic == 0) throw Error(ErrorCode::TopicOutOfRange, format_can_id(id), "topic labels start at 1");
        next_topic = std::max<std::uint32_t>(next_topic, topic + 1u);
    }

    std::vector<EcuInfo> ecus;
    for (const auto& [name, ecu] : matrix.ecus()) ecus.push_back(ecu);

    auto flows = matrix.flows();
    std::vector<std::size_t> ungrouped;
    for (std::size_t i = 0; i < flows.size(); ++i) {
        if (auto it = grouping.find(flows[i].can_id); it != grouping.end())
            flows[i].topic = it->second;
        else
            ungrouped.push_back(i);
    }
    std::sort(ungrouped.begin(), ungrouped.end(),
              [&](std::size_t a, std::size_t b) { return flows[a].can_id < flows[b].can_id; });
    for (auto i : ungrouped) {
        if (next_topic > std::numeric_limits<std::uint16_t>::max())
            throw Error(ErrorCode::TopicSpaceExhausted, format_can_id(flows[i].can_id));
        flows[i].topic = static_cast<std::uint16_t>(next_topic++);
    }
    return CommMatrix(std::move(ecus), std::move(flows));
}

std::vector<std::uint16_t> topics_spanning_domains(const CommMatrix& matrix) {
    std::map<std::uint16_t, std::set<std::uint16_t>> domains_of_topic;
    for (const auto& cf : matrix.flows()) domains_of_topic[cf.topic].insert(cf.domain);
    std::vector<std::uint16_t> out;
    for (const auto& [topic, domains] : domains_of_topic)
        if (domains.size() > 1) out.push_back(topic);
    return out;
}

}  // namespace flowsep
