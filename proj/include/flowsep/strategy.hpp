#pragma once

#include <array>
#include <string_view>

namespace flowsep {

/// How control flows are mapped onto network flows.
///  - Message: exposed layer 2 embedding, one network flow per control flow.
///  - Domain:  SOME/IP tunnel per (sender gateway, domain).
///  - Topic:   SOME/IP tunnel per (sender gateway, topic).
enum class Strategy { Message, Domain, Topic };

inline constexpr std::array kAllStrategies{Strategy::Message, Strategy::Domain, Strategy::Topic};

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

}  // namespace flowsep
