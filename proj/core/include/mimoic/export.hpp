#pragma once

// JSON records for balancing traces and contraction certificates. Indices in
// the records are 1-based; arrays of per-substream values are nested
// [user][stream].

#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "mimoic/convergence.hpp"
#include "mimoic/power_balancer.hpp"

namespace mimoic {

nlohmann::json to_json(const ContractionCertificate& certificate);

/// One record per outer iteration: iteration, targets, common targets,
/// sinrs, powers, delta per user, fairness gap, inner iteration count.
std::vector<nlohmann::json> balance_records(const BalanceResult& result);

/// Writes each record as one line, after merging `context` into it.
void write_json_lines(std::ostream& out, const std::vector<nlohmann::json>& records,
                      const nlohmann::json& context = nlohmann::json::object());

}  // namespace mimoic
