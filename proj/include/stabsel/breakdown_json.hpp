#ifndef STABSEL_BREAKDOWN_JSON_HPP
#define STABSEL_BREAKDOWN_JSON_HPP

#include <string>

#include "stabsel/breakdown.hpp"

namespace stabsel {

// Strict parse (unknown keys rejected) of the bdp query schema used by the
// CLI; see README for the field list.
BreakdownQuery parse_breakdown_query(const std::string& json_text);

std::string breakdown_result_to_json(const BreakdownResult& result);

}  // namespace stabsel

#endif
