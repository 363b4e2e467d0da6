#include "slicesim/traffic.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "slicesim/rng.hpp"

namespace slicesim {

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_activity(const std::string& field, const std::string& path, int line_no) {
  if (field.empty()) return 0.0;  // blank activity column means zero
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0') {
    throw InputError(path + ":" + std::to_string(line_no) + ": malformed activity value '" + field + "'");
  }
  return v;
}

long long parse_ll(const std::string& field, const std::string& path, int line_no,
                   const char* what) {
  char* end = nullptr;
  const long long v = std::strtoll(field.c_str(), &end, 10);
  if (field.empty() || end == field.c_str() || *end != '\0') {
    throw InputError(path + ":" + std::to_string(line_no) + ": malformed " + what + " '" + field + "'");
  }
  return v;
}

}  // namespace

std::vector<CdrRecord> load_cdr(const std::string& path,
                                const std::vector<long>& cell_filter,
                                long long time_begin_ms, long long time_end_ms) {
  // gzopen reads both gzip and plain files, which covers the "optionally
  // compressed" input contract with one code path.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw InputError("cannot open CDR file: " + path);

  std::vector<CdrRecord> records;
  std::string line;
  char buf[1 << 16];
  int line_no = 0;
  const bool time_filtered = time_end_ms > time_begin_ms;
  while (gzgets(f, buf, sizeof(buf)) != nullptr) {
    ++line_no;
    line = buf;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;

    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 8) {
      gzclose(f);
      throw InputError(path + ":" + std::to_string(line_no) + ": expected 3-8 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    CdrRecord r;
    try {
      r.square_id = static_cast<long>(parse_ll(fields[0], path, line_no, "square_id"));
      r.timestamp_ms = parse_ll(fields[1], path, line_no, "timestamp");
      r.country_code = fields[2].empty() ? 0 : static_cast<int>(parse_ll(fields[2], path, line_no, "country code"));
      r.sms_in = fields.size() > 3 ? parse_activity(fields[3], path, line_no) : 0.0;
      r.sms_out = fields.size() > 4 ? parse_activity(fields[4], path, line_no) : 0.0;
      r.call_in = fields.size() > 5 ? parse_activity(fields[5], path, line_no) : 0.0;
      r.call_out = fields.size() > 6 ? parse_activity(fields[6], path, line_no) : 0.0;
      r.internet = fields.size() > 7 ? parse_activity(fields[7], path, line_no) : 0.0;
    } catch (...) {
      gzclose(f);
      throw;
    }
    if (r.timestamp_ms % kCdrBinMs != 0) {
      gzclose(f);
      throw InputError(path + ":" + std::to_string(line_no) + ": timestamp not aligned to 10-minute bins");
    }
    if (!cell_filter.empty() &&
        std::find(cell_filter.begin(), cell_filter.end(), r.square_id) == cell_filter.end()) {
      continue;
    }
    if (time_filtered && (r.timestamp_ms < time_begin_ms || r.timestamp_ms >= time_end_ms)) {
      continue;
    }
    records.push_back(r);
  }
  gzclose(f);

  std::stable_sort(records.begin(), records.end(), [](const CdrRecord& a, const CdrRecord& b) {
    if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
    return a.square_id < b.square_id;
  });
  return records;
}

TrafficTrace TrafficTrace::scaled_to_mean(double load) const {
  TrafficTrace out = *this;
  const double mean = multipliers.size() > 0 ? multipliers.mean() : 0.0;
  if (mean > 0.0) out.multipliers *= load / mean;
  out.load_level = load;
  return out;
}

json TrafficTrace::to_json() const {
  json j;
  j["load_level"] = load_level;
  j["steps"] = steps();
  j["num_slices"] = num_slices();
  json rows = json::array();
  for (int t = 0; t < steps(); ++t) {
    json row = json::array();
    for (int s = 0; s < num_slices(); ++s) row.push_back(multipliers(t, s));
    rows.push_back(std::move(row));
  }
  j["multipliers"] = std::move(rows);
  return j;
}

TrafficTrace TrafficTrace::from_json(const json& j) {
  TrafficTrace t;
  t.load_level = j.at("load_level").get<double>();
  const int steps = j.at("steps").get<int>();
  const int slices = j.at("num_slices").get<int>();
  t.multipliers.resize(steps, slices);
  const auto& rows = j.at("multipliers");
  for (int r = 0; r < steps; ++r) {
    for (int s = 0; s < slices; ++s) t.multipliers(r, s) = rows.at(r).at(s).get<double>();
  }
  return t;
}

namespace {

std::vector<std::string> default_columns(ServiceClass c) {
  switch (c) {
    case ServiceClass::eMBB: return {"internet"};
    case ServiceClass::URLLC: return {"call_in", "call_out"};
    case ServiceClass::mMTC: return {"sms_in", "sms_out"};
  }
  return {"internet"};
}

double activity_column(const CdrRecord& r, const std::string& name) {
  if (name == "sms_in") return r.sms_in;
  if (name == "sms_out") return r.sms_out;
  if (name == "call_in") return r.call_in;
  if (name == "call_out") return r.call_out;
  if (name == "internet") return r.internet;
  throw ConfigError("unknown CDR activity column: " + name);
}

}  // namespace

TrafficTrace cdr_to_trace(const std::vector<CdrRecord>& records,
                          const Scenario& scenario, const json& mapping,
                          int horizon, double dt) {
  if (records.empty()) throw InputError("cdr_to_trace: no CDR records");
  if (horizon < 1) throw InputError("cdr_to_trace: horizon must be >= 1");

  const int S = scenario.num_slices();
  std::vector<std::vector<std::string>> columns(S);
  for (int s = 0; s < S; ++s) {
    const auto& spec = scenario.slices[s];
    if (!mapping.is_null() && mapping.contains(spec.id)) {
      columns[s] = mapping.at(spec.id).get<std::vector<std::string>>();
    } else {
      columns[s] = default_columns(spec.service_class);
    }
  }

  long long t0 = records.front().timestamp_ms, t1 = records.front().timestamp_ms;
  for (const auto& r : records) {
    t0 = std::min(t0, r.timestamp_ms);
    t1 = std::max(t1, r.timestamp_ms);
  }
  const int num_bins = static_cast<int>((t1 - t0) / kCdrBinMs) + 1;

  Eigen::MatrixXd bins = Eigen::MatrixXd::Zero(num_bins, S);
  for (const auto& r : records) {
    const int b = static_cast<int>((r.timestamp_ms - t0) / kCdrBinMs);
    for (int s = 0; s < S; ++s) {
      for (const auto& col : columns[s]) bins(b, s) += activity_column(r, col);
    }
  }

  // Per-slice max normalization keeps every multiplier in [0, 1].
  for (int s = 0; s < S; ++s) {
    const double mx = bins.col(s).maxCoeff();
    if (mx > 0) bins.col(s) /= mx;
  }

  const int steps_per_bin = std::max(1, static_cast<int>(std::lround(kCdrBinMs / 1000.0 / dt)));
  const int covered_steps = num_bins * steps_per_bin;
  if (horizon > covered_steps) {
    std::cerr << "[slicesim] warning: horizon " << horizon << " exceeds CDR coverage of "
              << covered_steps << " steps; trace wraps cyclically\n";
  }

  TrafficTrace trace;
  trace.multipliers.resize(horizon, S);
  for (int t = 0; t < horizon; ++t) {
    const int b = (t / steps_per_bin) % num_bins;  // zero-order hold + cyclic wrap
    trace.multipliers.row(t) = bins.row(b);
  }
  trace.load_level = trace.multipliers.size() > 0 ? trace.multipliers.mean() : 0.0;
  return trace;
}

TrafficPattern traffic_pattern_from_string(const std::string& s) {
  if (s == "constant") return TrafficPattern::Constant;
  if (s == "diurnal") return TrafficPattern::Diurnal;
  if (s == "bursty") return TrafficPattern::Bursty;
  throw ConfigError("unknown traffic pattern: " + s);
}

TrafficTrace synth_trace(double load_level, TrafficPattern pattern, int horizon,
                         int num_slices, unsigned long seed) {
  if (load_level < 0 || load_level > 1.2) {
    throw ConfigError("synth_trace: load_level must be in [0, 1.2]");
  }
  if (horizon < 1 || num_slices < 1) throw InputError("synth_trace: empty shape");

  TrafficTrace trace;
  trace.multipliers.resize(horizon, num_slices);
  trace.load_level = load_level;
  Rng rng(seed);

  switch (pattern) {
    case TrafficPattern::Constant:
      trace.multipliers.setConstant(load_level);
      return trace;

    case TrafficPattern::Diurnal: {
      const double period = 100.0;
      for (int s = 0; s < num_slices; ++s) {
        const double phase = 2.0 * M_PI * s / num_slices;
        for (int t = 0; t < horizon; ++t) {
          const double wave = 1.0 + 0.5 * std::sin(2.0 * M_PI * t / period + phase);
          const double jitter = std::exp(0.08 * rng.gaussian());
          trace.multipliers(t, s) = wave * jitter;
        }
      }
      break;
    }

    case TrafficPattern::Bursty: {
      for (int s = 0; s < num_slices; ++s) {
        bool in_burst = false;
        double amplitude = 1.0;
        for (int t = 0; t < horizon; ++t) {
          if (!in_burst && rng.uniform() < 0.06) {
            in_burst = true;
            amplitude = rng.uniform(1.5, 3.0);
          } else if (in_burst && rng.uniform() < 0.2) {
            in_burst = false;
          }
          const double base = in_burst ? amplitude : 0.6;
          trace.multipliers(t, s) = base * std::exp(0.15 * rng.gaussian());
        }
      }
      break;
    }
  }

  // Exact-mean normalization, per slice, so every load sweep point sits at its
  // nominal level.
  for (int s = 0; s < num_slices; ++s) {
    const double mean = trace.multipliers.col(s).mean();
    if (mean > 0) {
      trace.multipliers.col(s) *= load_level / mean;
    } else {
      trace.multipliers.col(s).setConstant(load_level);
    }
  }
  return trace;
}

void apply_boost_window(TrafficTrace& trace, int start, int len, double factor) {
  if (start < 0 || len <= 0) return;
  const int end = std::min(trace.steps(), start + len);
  for (int t = start; t < end; ++t) trace.multipliers.row(t) *= factor;
}

TrafficTrace make_trace(const TrafficConfig& cfg, const Scenario& scenario,
                        double load, int horizon, unsigned long seed,
                        const std::string& cache_dir) {
  TrafficTrace trace;
  if (cfg.source == "cdr") {
    std::string cache_path;
    if (!cache_dir.empty()) {
      std::ifstream in(cfg.cdr_path, std::ios::binary);
      std::ostringstream raw;
      raw << in.rdbuf();
      std::uint64_t key = fnv1a64(raw.str());
      key ^= fnv1a64(cfg.slice_mapping.is_null() ? "default" : cfg.slice_mapping.dump());
      key ^= fnv1a64(std::to_string(horizon) + ":" + std::to_string(scenario.dt) + ":" +
                     std::to_string(scenario.num_slices()));
      cache_path = cache_dir + "/trace_" + to_hex(key) + ".json";
      if (std::filesystem::exists(cache_path)) {
        trace = TrafficTrace::from_json(load_json_file(cache_path));
      }
    }
    if (trace.steps() == 0) {
      const auto records = load_cdr(cfg.cdr_path, cfg.cdr_cells, cfg.time_begin_ms, cfg.time_end_ms);
      trace = cdr_to_trace(records, scenario, cfg.slice_mapping, horizon, scenario.dt);
      if (!cache_path.empty()) {
        write_text_file(cache_path, trace.to_json().dump());
      }
    }
    trace = trace.scaled_to_mean(load);
  } else {
    trace = synth_trace(load, traffic_pattern_from_string(cfg.pattern), horizon,
                        scenario.num_slices(), seed);
  }
  if (cfg.boost_start >= 0 && cfg.boost_len > 0) {
    apply_boost_window(trace, cfg.boost_start, cfg.boost_len, cfg.boost_factor);
  }
  return trace;
}

}  // namespace slicesim
