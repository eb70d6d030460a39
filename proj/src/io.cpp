#include "kscontrol/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>

namespace ks {

namespace {
std::ofstream open_or_throw(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path + " for writing");
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  return os;
}
}  // namespace

void write_fields_csv(const std::string& path, const Mesh1D& mesh,
                      const std::vector<std::pair<std::string, const SpaceTimeField*>>& fields) {
  std::ofstream os = open_or_throw(path);
  os << "x,t";
  for (const auto& [name, f] : fields) os << "," << name;
  os << "\n";
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i) {
      os << mesh.x(i) << "," << mesh.t(n);
      for (const auto& [name, f] : fields) os << "," << (*f)[n][i];
      os << "\n";
    }
}

void write_series_csv(const std::string& path, const std::string& name, const Mesh1D& mesh,
                      const std::vector<double>& values) {
  std::ofstream os = open_or_throw(path);
  os << "t," << name << "\n";
  for (size_t n = 0; n < values.size(); ++n) os << mesh.t(static_cast<int>(n)) << "," << values[n] << "\n";
}

void write_weights_csv(const std::string& path, const Mesh1D& mesh, const WeightSet& ws) {
  std::ofstream os = open_or_throw(path);
  os << "x,t,phi,xi,W,V\n";
  for (int n = 0; n <= mesh.nt; ++n)
    for (int i = 0; i < mesh.nx; ++i)
      os << mesh.x(i) << "," << mesh.t(n) << "," << ws.at(WeightKind::phi, i, n) << ","
         << ws.at(WeightKind::xi, i, n) << "," << ws.at(WeightKind::control_W, i, n) << ","
         << ws.at(WeightKind::obs_V, i, n) << "\n";
}

void write_audit_csv(const std::string& path, const AuditReport& report) {
  std::ofstream os = open_or_throw(path);
  os << "sample,lhs,rhs,log10_lhs,log10_rhs,log10_ratio,skipped,counterexample\n";
  for (size_t j = 0; j < report.rows.size(); ++j) {
    const AuditSample& r = report.rows[j];
    os << j << "," << r.lhs << "," << r.rhs << "," << r.log10_lhs << "," << r.log10_rhs << ","
       << r.log10_ratio << "," << (r.skipped ? 1 : 0) << "," << (r.counterexample ? 1 : 0)
       << "\n";
  }
}

}  // namespace ks
