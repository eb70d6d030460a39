#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kscontrol/audit.hpp"
#include "kscontrol/mesh.hpp"
#include "kscontrol/weights.hpp"

namespace ks {

// CSV layout: header row, then (x, t, value...) rows in row-major time order.
void write_fields_csv(const std::string& path, const Mesh1D& mesh,
                      const std::vector<std::pair<std::string, const SpaceTimeField*>>& fields);

void write_series_csv(const std::string& path, const std::string& name,
                      const Mesh1D& mesh, const std::vector<double>& values);

// columns: x, t, phi, xi, W, V
void write_weights_csv(const std::string& path, const Mesh1D& mesh, const WeightSet& ws);

void write_audit_csv(const std::string& path, const AuditReport& report);

}  // namespace ks
