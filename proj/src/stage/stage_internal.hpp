#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlq/stage.hpp"

namespace mlq::stage {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
// Non-blank, non-comment lines with their 1-based line numbers.
std::vector<std::pair<int, std::string_view>> content_lines(std::string_view text);

// Handler code for one instruction. Non-NAMA templates delegate to a
// hand-written runtime function; NAMA templates expand to an inline block
// that reads its operand from slot `k` relative to the handler's first slot.
bool has_inline_body(const InstrDescriptor& d);
std::string runtime_call(const InstrDescriptor& d);
std::string inline_body(const InstrDescriptor& d, int k);

}  // namespace mlq::stage
