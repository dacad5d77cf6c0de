#pragma once

#include "etm/equilibrium.hpp"
#include "etm/pbs.hpp"
#include "etm/sim.hpp"
#include "etm/valuation.hpp"

#include "json.hpp"

#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace etm {

// Report JSON mirrors the struct field names.
nlohmann::json to_json(const ValuationResult& v);
nlohmann::json to_json(const Equilibrium& eq);
nlohmann::json to_json(const DerivedPayoff& d);
nlohmann::json to_json(const SimReport& r);
nlohmann::json to_json(const DelayStats& s);

// Aligned "path  value" lines, one per leaf; arrays of scalars stay inline.
std::string render_text(const nlohmann::json& doc);

inline constexpr const char* kTraceCsvHeader = "slot,winner_id,realized_mev,pnl,exercised_self";

void write_trace_csv(std::ostream& out, std::span<const SlotOutcome> trace);

} // namespace etm
