#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <zlib.h>

#include "slicesim/traffic.hpp"
#include "test_support.hpp"

using namespace slicesim;
using namespace slicesim::testing;

namespace {

std::string write_fixture(const std::string& dir, const std::string& name,
                          const std::string& body) {
  const std::string path = dir + "/" + name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("load_cdr parses hand-written rows") {
  const std::string dir = temp_dir("cdr_basic");
  const std::string path = write_fixture(dir, "two_rows.tsv",
                                         "42\t3600000\t39\t1.5\t2.5\t0.25\t0.5\t10.0\n"
                                         "43\t3600000\t39\t0\t0\t1\t1\t2\n");
  const auto records = load_cdr(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].square_id == 42);
  CHECK(records[0].timestamp_ms == 3600000);
  CHECK(records[0].sms_in == doctest::Approx(1.5));
  CHECK(records[0].sms_out == doctest::Approx(2.5));
  CHECK(records[0].call_in == doctest::Approx(0.25));
  CHECK(records[0].call_out == doctest::Approx(0.5));
  CHECK(records[0].internet == doctest::Approx(10.0));
  CHECK(records[1].square_id == 43);
}

TEST_CASE("load_cdr treats blank activity columns as zero") {
  const std::string dir = temp_dir("cdr_blank");
  const std::string path =
      write_fixture(dir, "blank.tsv", "7\t600000\t39\t1.0\t1.0\t1.0\t1.0\t\n");
  const auto records = load_cdr(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].internet == doctest::Approx(0.0));

  const std::string path2 = write_fixture(dir, "short.tsv", "7\t600000\t39\t2.0\n");
  const auto records2 = load_cdr(path2);
  REQUIRE(records2.size() == 1);
  CHECK(records2[0].sms_in == doctest::Approx(2.0));
  CHECK(records2[0].call_in == doctest::Approx(0.0));
}

TEST_CASE("load_cdr reports malformed rows with line numbers") {
  const std::string dir = temp_dir("cdr_bad");
  const std::string path = write_fixture(dir, "bad.tsv",
                                         "1\t600000\t39\t1\t1\t1\t1\t1\n"
                                         "oops\t600000\t39\t1\t1\t1\t1\t1\n");
  try {
    load_cdr(path);
    FAIL("expected parse error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }

  const std::string misaligned = write_fixture(dir, "misaligned.tsv", "1\t600100\t39\t1\n");
  CHECK_THROWS_AS(load_cdr(misaligned), InputError);
}

TEST_CASE("load_cdr per-cell counts match an independent line count") {
  const std::string dir = temp_dir("cdr_count");
  std::ostringstream body;
  std::map<long, int> expected;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const long cell = rng.uniform() < 0.4 ? 101 : 202;
    const long long ts = 600000LL * (1 + rng.uniform_int(48));
    body << cell << "\t" << ts << "\t39\t1\t1\t1\t1\t1\n";
    expected[cell]++;
  }
  const std::string path = write_fixture(dir, "hundred.tsv", body.str());

  const auto all = load_cdr(path);
  CHECK(static_cast<int>(all.size()) == 100);
  std::map<long, int> got;
  for (const auto& r : all) got[r.square_id]++;
  CHECK(got[101] == expected[101]);
  CHECK(got[202] == expected[202]);

  const auto only_101 = load_cdr(path, {101});
  CHECK(static_cast<int>(only_101.size()) == expected[101]);

  SUBCASE("records come back sorted by (timestamp, square_id)") {
    for (size_t i = 1; i < all.size(); ++i) {
      const bool ordered = all[i - 1].timestamp_ms < all[i].timestamp_ms ||
                           (all[i - 1].timestamp_ms == all[i].timestamp_ms &&
                            all[i - 1].square_id <= all[i].square_id);
      CHECK(ordered);
    }
  }
}

TEST_CASE("load_cdr empty selection is not an error") {
  const std::string dir = temp_dir("cdr_empty");
  const std::string path = write_fixture(dir, "one.tsv", "1\t600000\t39\t1\t1\t1\t1\t1\n");
  CHECK(load_cdr(path, {999}).empty());
  CHECK(load_cdr(path, {}, 0, 1).empty());
}

TEST_CASE("load_cdr reads gzip-compressed files") {
  const std::string dir = temp_dir("cdr_gz");
  const std::string body = "5\t1200000\t39\t1\t2\t3\t4\t5\n";
  const std::string path = dir + "/rows.tsv.gz";
  gzFile f = gzopen(path.c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, body.data(), static_cast<unsigned>(body.size()));
  gzclose(f);

  const auto records = load_cdr(path);
  REQUIRE(records.size() == 1);
  CHECK(records[0].internet == doctest::Approx(5.0));
}

TEST_CASE("cdr_to_trace: constant activity normalizes to all-ones") {
  const Scenario sc = two_slice_scenario();
  std::vector<CdrRecord> records;
  for (int bin = 0; bin < 6; ++bin) {
    CdrRecord r;
    r.square_id = 1;
    r.timestamp_ms = 600000LL * bin;
    r.internet = 4.0;
    r.call_in = 1.0;
    r.call_out = 1.0;
    records.push_back(r);
  }
  // dt = 1s -> 600 control steps per 10-minute bin.
  const auto trace = cdr_to_trace(records, sc, json(), 1200, sc.dt);
  CHECK(trace.steps() == 1200);
  CHECK(trace.multipliers.minCoeff() == doctest::Approx(1.0));
  CHECK(trace.multipliers.maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("cdr_to_trace: spike bin dominates after max-normalization") {
  const Scenario sc = two_slice_scenario();
  // 5 bins of internet activity: 2, 2, 8, 2, 2 -> normalized 0.25 at rest, 1 at spike.
  std::vector<CdrRecord> records;
  const double activity[5] = {2, 2, 8, 2, 2};
  for (int bin = 0; bin < 5; ++bin) {
    CdrRecord r;
    r.square_id = 9;
    r.timestamp_ms = 600000LL * bin;
    r.internet = activity[bin];
    r.call_in = 1.0;
    records.push_back(r);
  }
  const auto trace = cdr_to_trace(records, sc, json(), 5 * 600, sc.dt);
  CHECK(trace.multipliers(2 * 600, 0) == doctest::Approx(1.0));
  CHECK(trace.multipliers(0, 0) == doctest::Approx(0.25));
  CHECK(trace.multipliers.col(0).maxCoeff() <= 1.0 + 1e-12);
  CHECK(trace.multipliers.col(0).minCoeff() >= 0.0);
}

TEST_CASE("cdr_to_trace wraps cyclically beyond the data span") {
  const Scenario sc = two_slice_scenario();
  std::vector<CdrRecord> records;
  for (int bin = 0; bin < 3; ++bin) {
    CdrRecord r;
    r.square_id = 1;
    r.timestamp_ms = 600000LL * bin;
    r.internet = 1.0 + bin;
    r.call_in = 1.0;
    records.push_back(r);
  }
  const int span = 3 * 600;
  const auto trace = cdr_to_trace(records, sc, json(), 2 * span, sc.dt);
  for (int t = 0; t < span; ++t) {
    CHECK(trace.multipliers(t, 0) == doctest::Approx(trace.multipliers(t + span, 0)));
  }
}

TEST_CASE("cdr_to_trace honors an explicit slice mapping") {
  const Scenario sc = two_slice_scenario();
  std::vector<CdrRecord> records;
  CdrRecord r;
  r.square_id = 1;
  r.timestamp_ms = 0;
  r.sms_in = 3.0;
  records.push_back(r);
  r.timestamp_ms = 600000;
  r.sms_in = 6.0;
  records.push_back(r);

  const json mapping = {{"embb", {"sms_in"}}, {"urllc", {"sms_in"}}};
  const auto trace = cdr_to_trace(records, sc, mapping, 1200, sc.dt);
  CHECK(trace.multipliers(0, 0) == doctest::Approx(0.5));
  CHECK(trace.multipliers(700, 0) == doctest::Approx(1.0));
  CHECK(trace.multipliers(0, 1) == doctest::Approx(0.5));

  CHECK_THROWS_AS(cdr_to_trace({}, sc, json(), 10, sc.dt), InputError);
}

TEST_CASE("synth_trace constant pattern") {
  const auto t = synth_trace(0.5, TrafficPattern::Constant, 100, 3, 1);
  CHECK(t.multipliers.minCoeff() == doctest::Approx(0.5));
  CHECK(t.multipliers.maxCoeff() == doctest::Approx(0.5));
}

TEST_CASE("synth_trace determinism") {
  const auto a = synth_trace(0.8, TrafficPattern::Diurnal, 200, 3, 7);
  const auto b = synth_trace(0.8, TrafficPattern::Diurnal, 200, 3, 7);
  CHECK((a.multipliers - b.multipliers).cwiseAbs().maxCoeff() == 0.0);

  const auto c = synth_trace(0.8, TrafficPattern::Diurnal, 200, 3, 8);
  CHECK((a.multipliers - c.multipliers).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("synth_trace bursty mean stays within 2% of the load level") {
  const auto t = synth_trace(0.8, TrafficPattern::Bursty, 200, 3, 7);
  const double mean = t.multipliers.mean();
  CHECK(mean >= 0.784);
  CHECK(mean <= 0.816);
  CHECK(t.multipliers.minCoeff() >= 0.0);
}

TEST_CASE("synth_trace validates inputs") {
  CHECK_THROWS_AS(synth_trace(1.5, TrafficPattern::Constant, 10, 2, 1), ConfigError);
  CHECK_THROWS_AS(traffic_pattern_from_string("sawtooth"), ConfigError);
  // zero load is a valid degenerate sweep point
  const auto t = synth_trace(0.0, TrafficPattern::Bursty, 50, 2, 3);
  CHECK(t.multipliers.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("trace JSON round-trip is lossless") {
  const auto t = synth_trace(0.7, TrafficPattern::Bursty, 60, 3, 9);
  const auto back = TrafficTrace::from_json(t.to_json());
  CHECK((t.multipliers - back.multipliers).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.load_level == doctest::Approx(t.load_level));
}

TEST_CASE("boost window multiplies only the configured rows") {
  auto t = synth_trace(0.5, TrafficPattern::Constant, 100, 2, 1);
  apply_boost_window(t, 10, 5, 2.0);
  CHECK(t.multipliers(9, 0) == doctest::Approx(0.5));
  CHECK(t.multipliers(10, 0) == doctest::Approx(1.0));
  CHECK(t.multipliers(14, 1) == doctest::Approx(1.0));
  CHECK(t.multipliers(15, 0) == doctest::Approx(0.5));
}

TEST_CASE("make_trace caches CDR-derived traces by content hash") {
  const Scenario sc = two_slice_scenario();
  const std::string dir = temp_dir("cdr_cache");
  std::ostringstream body;
  for (int bin = 0; bin < 4; ++bin) {
    body << "1\t" << 600000LL * bin << "\t39\t1\t1\t1\t1\t" << (1 + bin) << "\n";
  }
  const std::string path = write_fixture(dir, "data.tsv", body.str());

  TrafficConfig tc;
  tc.source = "cdr";
  tc.cdr_path = path;
  const auto t1 = make_trace(tc, sc, 0.6, 100, 1, dir);
  bool cached = false;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().filename().string().rfind("trace_", 0) == 0) cached = true;
  }
  CHECK(cached);
  const auto t2 = make_trace(tc, sc, 0.6, 100, 1, dir);
  CHECK((t1.multipliers - t2.multipliers).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t1.multipliers.mean() == doctest::Approx(0.6));
}
