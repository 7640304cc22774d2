#pragma once

#include <cstddef>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hacache/model.hpp"
#include "hacache/telemetry.hpp"

namespace hacache {

enum class Phase { warm_up, phase1, phase2, capacity_eval, stable, nhc, report };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::warm_up: return "warmup";
    case Phase::phase1: return "phase1";
    case Phase::phase2: return "phase2";
    case Phase::capacity_eval: return "capacity";
    case Phase::stable: return "stable";
    case Phase::nhc: return "nhc";
    case Phase::report: return "report";
  }
  return "?";
}

/// One telemetry cycle as seen by a controller.
struct TraceRow {
  std::size_t cycle = 0;
  Phase phase = Phase::warm_up;
  std::vector<double> p;
  std::vector<double> b;
  double S = 0.0;
  std::vector<std::size_t> quota;

  static TraceRow from(std::size_t cycle, Phase phase, const ValveConfig& valves, const Telemetry& t) {
    TraceRow r;
    r.cycle = cycle;
    r.phase = phase;
    r.p.assign(valves.values().begin(), valves.values().end());
    r.b = t.backend;
    r.S = t.system;
    r.quota = t.quota();
    return r;
  }
};

/// Fixed-point formatting so CSV bytes do not depend on locale or stream state.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string trace_csv_header(std::size_t drives) {
  std::string h = "cycle,phase";
  for (std::size_t i = 0; i < drives; ++i) h += ",p" + std::to_string(i);
  for (std::size_t i = 0; i < drives; ++i) h += ",b" + std::to_string(i);
  h += ",S";
  for (std::size_t i = 0; i < drives; ++i) h += ",q" + std::to_string(i);
  return h;
}

inline std::string trace_csv_row(const TraceRow& r) {
  std::string line = std::to_string(r.cycle);
  line += ',';
  line += to_string(r.phase);
  for (double p : r.p) line += "," + format_fixed(p, 6);
  for (double b : r.b) line += "," + format_fixed(b, 3);
  line += "," + format_fixed(r.S, 3);
  for (std::size_t q : r.quota) line += "," + std::to_string(q);
  return line;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows, std::size_t drives) {
  os << trace_csv_header(drives) << '\n';
  for (const auto& r : rows) os << trace_csv_row(r) << '\n';
}

}  // namespace hacache
