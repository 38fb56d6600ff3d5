#include "mimoic/export.hpp"

#include <cmath>
#include <ostream>

namespace mimoic {

namespace {

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(x);
  return out;
}

nlohmann::json power_json(const PowerAllocation& pw) {
  auto out = nlohmann::json::array();
  for (int k = 0; k < pw.users(); ++k) out.push_back(vector_json(pw.user(k)));
  return out;
}

}  // namespace

nlohmann::json to_json(const ContractionCertificate& certificate) {
  nlohmann::json out;
  out["c"] = certificate.c;
  out["weight"] = vector_json(certificate.weight);
  if (std::isfinite(certificate.c_perron)) {
    out["c_perron"] = certificate.c_perron;
  } else {
    out["c_perron"] = nullptr;
  }
  out["rho"] = certificate.rho;
  out["spectral_converged"] = certificate.spectral_converged;
  out["contractive"] = certificate.contractive;
  out["feasible"] = certificate.rho < 1.0;
  out["fixed_point"] = vector_json(certificate.fixed_point);
  return out;
}

std::vector<nlohmann::json> balance_records(const BalanceResult& result) {
  std::vector<nlohmann::json> out;
  for (std::size_t m = 0; m < result.steps.size(); ++m) {
    const auto& step = result.steps[m];
    nlohmann::json record;
    record["outer_iteration"] = m + 1;
    record["targets"] = step.targets.targets;
    record["common_targets"] = step.targets.common;
    record["sinrs"] = step.sinrs;
    record["powers"] = power_json(result.power_trace.at(m));
    record["delta"] = step.gap.per_user;
    record["fairness_gap"] = step.gap.total;
    record["inner_iterations"] = step.inner_iterations;
    out.push_back(std::move(record));
  }
  return out;
}

void write_json_lines(std::ostream& out, const std::vector<nlohmann::json>& records, const nlohmann::json& context) {
  for (const auto& record : records) {
    nlohmann::json line = context;
    line.update(record);
    out << line.dump() << '\n';
  }
}

}  // namespace mimoic
