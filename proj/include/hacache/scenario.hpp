#pragma once

// Scenario documents: a flat `key = value` text format with `#` comments.
//
//   topology    = 3A-1B          # preset, or a device list such as A,A,B,B
//   block_size  = 128KB          # sizes take K/M/G/T suffixes (binary)
//   cache_frac  = 0.1
//
// Every key has a default, so an empty document is a valid scenario.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hacache/controller.hpp"
#include "hacache/error.hpp"
#include "hacache/model.hpp"
#include "hacache/nhc.hpp"
#include "hacache/sim/simulator.hpp"
#include "hacache/sim/workload.hpp"

namespace hacache {

enum class ControllerKind { hacache, nhc };

inline std::string_view to_string(ControllerKind k) { return k == ControllerKind::nhc ? "nhc" : "hacache"; }

inline ControllerKind parse_controller(std::string_view s) {
  if (s == "hacache") return ControllerKind::hacache;
  if (s == "nhc") return ControllerKind::nhc;
  throw ConfigError("unknown controller '" + std::string(s) + "' (valid: hacache, nhc)");
}

struct ScenarioConfig {
  std::string topology = "3A-1B";
  std::string cache_device = "C";
  std::uint32_t block_size = 128 * 1024;
  std::uint64_t io_range = std::uint64_t{16} << 30;
  std::uint64_t stripe_unit = 128 * 1024;
  sim::Pattern pattern = sim::Pattern::hotspot;
  double hot_space_frac = 0.05;
  double hot_access_frac = 0.95;
  double cache_frac = 0.1;
  std::optional<std::uint64_t> cache_bytes;
  std::uint64_t seed = 1;
  std::size_t max_cycles = 5000;
  double delta_b = 1000.0;
  std::optional<double> delta_c;
  double p_thres = 0.9;
  std::size_t shard_count = 256;
  std::size_t delta_q = 8;
  double noise_bound = 0.01;
  std::size_t hit_stable_cycles = 3;
  double decision_tolerance = 0.005;
  double valve_tolerance = 0.02;
  double nhc_step = 0.05;
  double window_ms = 400.0;
  double settle_ms = 100.0;
  std::uint32_t threads = 16;
  std::uint32_t qd = 64;
  bool regulation = true;
  ControllerKind controller = ControllerKind::hacache;
  double hit_rate = 0.95;          ///< analytic sweeps only
  std::size_t report_cycles = 10;  ///< windows averaged for the summary

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;

  ArrayTopology array() const {
    ArrayTopology t;
    if (topology.find(',') == std::string::npos && !is_device_name(topology)) {
      t = preset_topology(topology);
    } else {
      std::stringstream ss(topology);
      for (std::string name; std::getline(ss, name, ',');) {
        t.backends.push_back(devices::by_name(trim(name)));
      }
    }
    t.cache = devices::by_name(cache_device);
    t.stripe_unit = stripe_unit;
    t.validate();
    return t;
  }

  std::vector<double> b_max() const { return array().backend_bandwidth(block_size); }
  double c_max() const { return array().cache_bandwidth(block_size); }

  sim::WorkloadSpec workload() const {
    sim::WorkloadSpec w;
    w.block_size = block_size;
    w.io_range = io_range;
    w.pattern = pattern;
    w.hot_space_frac = hot_space_frac;
    w.hot_access_frac = hot_access_frac;
    w.threads = threads;
    w.queue_depth = qd;
    w.seed = seed;
    return w;
  }

  sim::SimConfig sim_config() const {
    sim::SimConfig c;
    c.topology = array();
    c.workload = workload();
    c.cache_frac = cache_frac;
    c.cache_bytes = cache_bytes;
    c.shard_count = shard_count;
    return c;
  }

  ControllerParams controller_params() const {
    ControllerParams p;
    p.delta_b = delta_b;
    p.delta_c = delta_c;
    p.p_thres = p_thres;
    p.shard_count = shard_count;
    p.delta_q = delta_q;
    p.noise_bound = noise_bound;
    p.hit_stable_cycles = hit_stable_cycles;
    p.decision_tolerance = decision_tolerance;
    p.valve_tolerance = valve_tolerance;
    p.regulation = regulation;
    return p;
  }

  NhcOptions nhc_options() const {
    NhcOptions o;
    o.step = nhc_step;
    o.max_cycles = max_cycles;
    o.decision_tolerance = decision_tolerance;
    return o;
  }

  double window_seconds() const { return window_ms / 1000.0; }
  double settle_seconds() const { return settle_ms / 1000.0; }

  /// Checks everything a run would trip over, up front.
  void validate() const {
    const auto arr = array();
    for (const auto& d : arr.backends) (void)d.bandwidth_at(block_size);
    (void)arr.cache_bandwidth(block_size);
    if (block_size > stripe_unit) throw ConfigError("block_size must not exceed stripe_unit");
    workload().validate();
    controller_params().validate();
    if (!(cache_frac >= 0.0 && cache_frac <= 1.0)) throw ConfigError("cache_frac must be in [0,1]");
    if (!(nhc_step > 0.0 && nhc_step <= 0.5)) throw ConfigError("nhc_step must be in (0, 0.5]");
    if (!(window_ms > 0.0)) throw ConfigError("window_ms must be > 0");
    if (!(settle_ms >= 0.0)) throw ConfigError("settle_ms must be >= 0");
    if (!(hit_rate >= 0.0 && hit_rate <= 1.0)) throw ConfigError("hit_rate must be in [0,1]");
    if (max_cycles == 0) throw ConfigError("max_cycles must be >= 1");
  }

  static bool is_device_name(const std::string& s) { return s == "A" || s == "B" || s == "C"; }

  static std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
  }
};

namespace config_detail {

inline std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "': expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

/// Integer with an optional binary suffix: 4096, 4K, 4KB, 4KiB, 16G, ...
inline std::uint64_t parse_size(std::string_view key, std::string_view v) {
  std::size_t digits = 0;
  while (digits < v.size() && std::isdigit(static_cast<unsigned char>(v[digits]))) ++digits;
  std::string unit(v.substr(digits));
  for (auto& ch : unit) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (unit.size() > 1 && unit.back() == 'B') unit.pop_back();
  if (unit.size() > 1 && unit.back() == 'I') unit.pop_back();
  int shift = 0;
  if (unit.empty() || unit == "B") shift = 0;
  else if (unit == "K") shift = 10;
  else if (unit == "M") shift = 20;
  else if (unit == "G") shift = 30;
  else if (unit == "T") shift = 40;
  else throw ConfigError("'" + std::string(key) + "': bad size '" + std::string(v) + "'");
  const std::uint64_t n = parse_u64(key, v.substr(0, digits));
  if (shift > 0 && n > (std::uint64_t{1} << (63 - shift))) {
    throw ConfigError("'" + std::string(key) + "': size too large");
  }
  return n << shift;
}

inline std::string format_size(std::uint64_t bytes) {
  static constexpr std::pair<int, const char*> units[] = {{40, "TB"}, {30, "GB"}, {20, "MB"}, {10, "KB"}};
  for (auto [shift, name] : units) {
    const std::uint64_t unit = std::uint64_t{1} << shift;
    if (bytes != 0 && bytes % unit == 0) return std::to_string(bytes / unit) + name;
  }
  return std::to_string(bytes);
}

inline double parse_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "': expected true/false, got '" + std::string(v) + "'");
}

struct Field {
  std::string key;
  std::string help;
  std::function<void(ScenarioConfig&, std::string_view)> set;
  std::function<std::optional<std::string>(const ScenarioConfig&)> get;  ///< nullopt = unset
};

template <class T>
Field size_field(std::string key, std::string help, T ScenarioConfig::*m) {
  return {key, std::move(help),
          [m, key](ScenarioConfig& c, std::string_view v) {
            const auto n = parse_size(key, v);
            if (n > std::numeric_limits<T>::max()) throw ConfigError("'" + key + "': value too large");
            c.*m = static_cast<T>(n);
          },
          [m](const ScenarioConfig& c) -> std::optional<std::string> { return format_size(c.*m); }};
}

template <class T>
Field int_field(std::string key, std::string help, T ScenarioConfig::*m) {
  return {key, std::move(help),
          [m, key](ScenarioConfig& c, std::string_view v) {
            const auto n = parse_u64(key, v);
            if (n > std::numeric_limits<T>::max()) throw ConfigError("'" + key + "': value too large");
            c.*m = static_cast<T>(n);
          },
          [m](const ScenarioConfig& c) -> std::optional<std::string> { return std::to_string(c.*m); }};
}

inline Field real_field(std::string key, std::string help, double ScenarioConfig::*m) {
  return {key, std::move(help),
          [m, key](ScenarioConfig& c, std::string_view v) { c.*m = parse_double(key, v); },
          [m](const ScenarioConfig& c) -> std::optional<std::string> { return format_double(c.*m); }};
}

inline Field text_field(std::string key, std::string help, std::string ScenarioConfig::*m) {
  return {key, std::move(help),
          [m, key](ScenarioConfig& c, std::string_view v) {
            if (v.empty()) throw ConfigError("'" + key + "': empty value");
            c.*m = std::string(v);
          },
          [m](const ScenarioConfig& c) -> std::optional<std::string> { return c.*m; }};
}

inline const std::vector<Field>& fields() {
  using C = ScenarioConfig;
  static const std::vector<Field> all = [] {
    std::vector<Field> f;
    f.push_back(text_field("topology", "preset (4A, 3A-1B, 2A-2B, 1A-3B, 4B) or device list like A,A,B,B", &C::topology));
    f.push_back(text_field("cache_device", "device serving as cache (A, B or C)", &C::cache_device));
    f.push_back(size_field("block_size", "request size; must be a profiled size (4KB or 128KB)", &C::block_size));
    f.push_back(size_field("io_range", "addressed range in bytes", &C::io_range));
    f.push_back(size_field("stripe_unit", "bytes per strip", &C::stripe_unit));
    f.push_back({"pattern", "uniform, hotspot or sequential",
                 [](C& c, std::string_view v) { c.pattern = sim::parse_pattern(v); },
                 [](const C& c) -> std::optional<std::string> { return std::string(sim::to_string(c.pattern)); }});
    f.push_back(real_field("hot_space_frac", "hotspot: fraction of the range that is hot", &C::hot_space_frac));
    f.push_back(real_field("hot_access_frac", "hotspot: fraction of accesses to the hot set", &C::hot_access_frac));
    f.push_back(real_field("cache_frac", "cache capacity as a fraction of io_range", &C::cache_frac));
    f.push_back({"cache_bytes", "absolute cache capacity; overrides cache_frac",
                 [](C& c, std::string_view v) { c.cache_bytes = parse_size("cache_bytes", v); },
                 [](const C& c) -> std::optional<std::string> {
                   if (!c.cache_bytes) return std::nullopt;
                   return format_size(*c.cache_bytes);
                 }});
    f.push_back(int_field("seed", "workload seed", &C::seed));
    f.push_back(int_field("max_cycles", "telemetry cycle budget", &C::max_cycles));
    f.push_back(real_field("delta_b", "phase-1 backend increment, MB/s", &C::delta_b));
    f.push_back({"delta_c", "phase-2 cache increment, MB/s (default 100 x drives)",
                 [](C& c, std::string_view v) { c.delta_c = parse_double("delta_c", v); },
                 [](const C& c) -> std::optional<std::string> {
                   if (!c.delta_c) return std::nullopt;
                   return format_double(*c.delta_c);
                 }});
    f.push_back(real_field("p_thres", "surplus threshold for capacity regulation", &C::p_thres));
    f.push_back(int_field("shard_count", "cache shards", &C::shard_count));
    f.push_back(int_field("delta_q", "shards reclaimed per surplus drive", &C::delta_q));
    f.push_back(real_field("noise_bound", "warm-up hit-rate stability bound", &C::noise_bound));
    f.push_back(int_field("hit_stable_cycles", "stable warm-up cycles required", &C::hit_stable_cycles));
    f.push_back(real_field("decision_tolerance", "relative change treated as noise", &C::decision_tolerance));
    f.push_back(real_field("valve_tolerance", "smallest valve adjustment applied", &C::valve_tolerance));
    f.push_back(real_field("nhc_step", "NHC hill-climbing step", &C::nhc_step));
    f.push_back(real_field("window_ms", "telemetry window, simulated ms", &C::window_ms));
    f.push_back(real_field("settle_ms", "unrecorded time after a valve or shard change, ms", &C::settle_ms));
    f.push_back(int_field("threads", "issuing threads", &C::threads));
    f.push_back(int_field("qd", "queue depth per thread", &C::qd));
    f.push_back({"regulation", "enable cache capacity regulation",
                 [](C& c, std::string_view v) { c.regulation = parse_bool("regulation", v); },
                 [](const C& c) -> std::optional<std::string> { return c.regulation ? "true" : "false"; }});
    f.push_back({"controller", "hacache or nhc",
                 [](C& c, std::string_view v) { c.controller = parse_controller(v); },
                 [](const C& c) -> std::optional<std::string> { return std::string(to_string(c.controller)); }});
    f.push_back(real_field("hit_rate", "hit rate assumed by analytic sweeps", &C::hit_rate));
    f.push_back(int_field("report_cycles", "windows averaged into the run summary", &C::report_cycles));
    return f;
  }();
  return all;
}

}  // namespace config_detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : config_detail::fields()) keys.push_back(f.key);
  return keys;
}

inline const std::string& config_help(const std::string& key) {
  for (const auto& f : config_detail::fields()) {
    if (f.key == key) return f.help;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Set one key from its text form.
inline void set_config_value(ScenarioConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : config_detail::fields()) {
    if (f.key == key) {
      f.set(cfg, ScenarioConfig::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

/// Apply a document on top of `base`. Later lines win.
inline ScenarioConfig parse_config(std::string_view text, ScenarioConfig base = {}) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string trimmed = ScenarioConfig::trim(line);
    if (trimmed.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = ScenarioConfig::trim(std::string_view(trimmed).substr(0, eq));
    const std::string value = ScenarioConfig::trim(std::string_view(trimmed).substr(eq + 1));
    try {
      set_config_value(base, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (end == text.size()) break;
  }
  return base;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// One `key = value` line per set field, in the documented key order.
inline std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& f : config_detail::fields()) {
    if (auto v = f.get(cfg)) out += f.key + " = " + *v + "\n";
  }
  return out;
}

}  // namespace hacache
