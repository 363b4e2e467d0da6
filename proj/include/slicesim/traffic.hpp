#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "slicesim/config.hpp"
#include "slicesim/types.hpp"

namespace slicesim {

inline constexpr long long kCdrBinMs = 600000;  // 10-minute aggregation bins

// One row of a Milan-style CDR activity file: tab-separated
//   square_id  timestamp_ms  country_code  sms_in  sms_out  call_in  call_out  internet
// with blank activity fields meaning zero.
struct CdrRecord {
  long square_id = 0;
  long long timestamp_ms = 0;
  int country_code = 0;
  double sms_in = 0, sms_out = 0, call_in = 0, call_out = 0, internet = 0;
};

// Reads a CDR activity file (plain or gzip). `cell_filter` empty = keep all
// cells; a time range with end <= begin = keep all bins. Records come back
// sorted by (timestamp, square_id).
std::vector<CdrRecord> load_cdr(const std::string& path,
                                const std::vector<long>& cell_filter = {},
                                long long time_begin_ms = 0,
                                long long time_end_ms = 0);

// Per-slice arrival-rate multipliers, one row per control step.
struct TrafficTrace {
  Eigen::MatrixXd multipliers;  // steps x num_slices, entries >= 0
  double load_level = 0.0;      // nominal mean multiplier

  int steps() const { return static_cast<int>(multipliers.rows()); }
  int num_slices() const { return static_cast<int>(multipliers.cols()); }
  double at(int step, int slice) const { return multipliers(step, slice); }

  // Rescales so the grand mean equals `load` (no-op on an all-zero trace).
  TrafficTrace scaled_to_mean(double load) const;

  json to_json() const;
  static TrafficTrace from_json(const json& j);
};

// Maps CDR activity columns onto slices and resamples 10-minute bins onto
// control steps with zero-order hold. Default mapping: internet -> eMBB,
// call_in+call_out -> URLLC, sms_in+sms_out -> mMTC (the activity-to-slice
// assignment is a documented default, overridable via `mapping`:
// {"<slice id>": ["internet", ...], ...}). Each slice's multipliers are
// normalized by that slice's maximum, so outputs lie in [0, 1]. A horizon
// longer than the data wraps cyclically with a warning on stderr.
TrafficTrace cdr_to_trace(const std::vector<CdrRecord>& records,
                          const Scenario& scenario, const json& mapping,
                          int horizon, double dt);

enum class TrafficPattern { Constant, Diurnal, Bursty };

TrafficPattern traffic_pattern_from_string(const std::string& s);

// Synthetic per-slice multiplier trace with grand mean exactly `load_level`.
// Diurnal slices are phase-shifted sinusoids with seeded jitter; bursty
// slices alternate between a low base and seeded high-amplitude episodes.
TrafficTrace synth_trace(double load_level, TrafficPattern pattern, int horizon,
                         int num_slices, unsigned long seed);

// Multiplies rows [start, start+len) by `factor` (the Fig.-2-style high-load
// window). Out-of-range rows are ignored.
void apply_boost_window(TrafficTrace& trace, int start, int len, double factor);

// Builds the evaluation/training trace described by `cfg` at a given mean
// load. CDR-backed traces are cached under `cache_dir` (keyed by a content
// hash of the file bytes and the mapping config) when `cache_dir` != "".
TrafficTrace make_trace(const TrafficConfig& cfg, const Scenario& scenario,
                        double load, int horizon, unsigned long seed,
                        const std::string& cache_dir = "");

}  // namespace slicesim
