#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "photostat/config.hpp"
#include "photostat/report.hpp"
#include "photostat/timetag_io.hpp"

using namespace photostat;

namespace {

TimetagStream sample_stream() {
    TimetagStream s;
    s.rep_period_ps = 500000;
    s.n_pulses = 1234;
    s.seed = 987654321;
    s.metadata = "source=sps\nseed=987654321\n";
    std::uint64_t t = 0;
    for (int i = 0; i < 500; ++i) {
        t += 17 + (i % 5) * 100003;
        s.records.push_back({static_cast<std::uint8_t>(i % 2), t});
        if (i % 7 == 0) // same-timestamp click on the other arm
            s.records.push_back({static_cast<std::uint8_t>((i + 1) % 2), t});
    }
    return s;
}

void check_equal(const TimetagStream& a, const TimetagStream& b) {
    CHECK(a.rep_period_ps == b.rep_period_ps);
    CHECK(a.n_pulses == b.n_pulses);
    CHECK(a.seed == b.seed);
    CHECK(a.channel_count == b.channel_count);
    CHECK(a.metadata == b.metadata);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].channel == b.records[i].channel);
        CHECK(a.records[i].time_ps == b.records[i].time_ps);
    }
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string what_of(const std::string& path, TimetagStream (*rd)(const std::string&)) {
    try {
        rd(path);
    } catch (const TimetagFileError& e) {
        return e.what();
    }
    return "<no error>";
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("binary timetag files round-trip exactly") {
    const std::string path = "io_roundtrip.ttg";
    TimetagStream s = sample_stream();
    write_timetags_binary(path, s);
    check_equal(s, read_timetags_binary(path));
    check_equal(s, read_timetags(path)); // sniffed
    std::remove(path.c_str());
}

TEST_CASE("csv timetag files round-trip and match the binary twin") {
    const std::string bpath = "io_twin.ttg", cpath = "io_twin.csv";
    TimetagStream s = sample_stream();
    write_timetags_binary(bpath, s);
    write_timetags_csv(cpath, s);
    TimetagStream fb = read_timetags(bpath);
    TimetagStream fc = read_timetags(cpath); // sniff falls through to csv
    check_equal(s, fc);
    check_equal(fb, fc);
    std::remove(bpath.c_str());
    std::remove(cpath.c_str());
}

TEST_CASE("binary reader pinpoints defects by byte offset") {
    const std::string good = "io_good.ttg", bad = "io_bad.ttg";
    TimetagStream s = sample_stream();
    write_timetags_binary(good, s);
    std::string bytes = slurp(good);
    const std::uint64_t first_rec = 44 + s.metadata.size();

    SUBCASE("bad magic") {
        bytes[0] = 'X';
        spit(bad, bytes);
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "bad magic"));
        CHECK(contains(w, "at byte offset 0"));
        CHECK(contains(w, bad));
    }
    SUBCASE("unsupported version") {
        bytes[8] = 2;
        spit(bad, bytes);
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "version"));
        CHECK(contains(w, "at byte offset 8"));
    }
    SUBCASE("truncated header") {
        spit(bad, bytes.substr(0, 20));
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "truncated header"));
        CHECK(contains(w, "at byte offset 20"));
    }
    SUBCASE("truncated record") {
        // cut 4 bytes into the third record
        std::uint64_t cut = first_rec + 2 * 9 + 4;
        spit(bad, bytes.substr(0, cut));
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "truncated record"));
        CHECK(contains(w, "at byte offset " + std::to_string(first_rec + 18)));
    }
    SUBCASE("channel out of range") {
        std::uint64_t off = first_rec + 5 * 9;
        bytes[off] = 7;
        spit(bad, bytes);
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "channel 7 out of range"));
        CHECK(contains(w, "at byte offset " + std::to_string(off)));
    }
    SUBCASE("timestamps out of order") {
        std::uint64_t off = first_rec + 3 * 9;
        for (int b = 1; b <= 8; ++b) bytes[off + b] = 0; // time_ps = 0
        spit(bad, bytes);
        std::string w = what_of(bad, read_timetags_binary);
        CHECK(contains(w, "timestamps out of order"));
        CHECK(contains(w, "at byte offset " + std::to_string(off)));
    }
    std::remove(good.c_str());
    std::remove(bad.c_str());
}

TEST_CASE("csv reader pinpoints defects by line number") {
    const std::string path = "io_bad.csv";

    SUBCASE("unparsable record") {
        spit(path,
             "# timetags v1\n# channel_count=2\n# rep_period_ps=500000\n"
             "channel,time_ps\n0,100\n1,abc\n");
        std::string w = what_of(path, read_timetags_csv);
        CHECK(contains(w, "unparsable record"));
        CHECK(contains(w, "at line 6"));
    }
    SUBCASE("missing column header") {
        spit(path, "# timetags v1\n# channel_count=2\n");
        std::string w = what_of(path, read_timetags_csv);
        CHECK(contains(w, "channel,time_ps"));
    }
    SUBCASE("channel out of range") {
        spit(path,
             "# timetags v1\n# channel_count=2\nchannel,time_ps\n0,5\n3,10\n");
        std::string w = what_of(path, read_timetags_csv);
        CHECK(contains(w, "channel out of range"));
        CHECK(contains(w, "at line 5"));
    }
    SUBCASE("out of order") {
        spit(path,
             "# timetags v1\n# channel_count=2\nchannel,time_ps\n0,500\n1,10\n");
        std::string w = what_of(path, read_timetags_csv);
        CHECK(contains(w, "timestamps out of order"));
        CHECK(contains(w, "at line 5"));
    }
    std::remove(path.c_str());
}

TEST_CASE("config parsing, lookups, and defaults") {
    Config cfg = Config::from_text(
        "# run setup\n"
        "n_pulses = 319769\n"
        "seed=42\n"
        "efficiency = 0.05 # trailing comment\n"
        "label = bench run\n"
        "\n",
        "inline");
    CHECK(cfg.get_uint("n_pulses") == 319769);
    CHECK(cfg.get_int("seed") == 42);
    CHECK(cfg.get_double("efficiency") == doctest::Approx(0.05));
    CHECK(cfg.get_string("label") == "bench run");
    CHECK(cfg.get_double_or("absent", 2.5) == 2.5);
    CHECK(cfg.get_uint_or("absent", 7) == 7);
    CHECK(cfg.get_string_or("absent", "d") == "d");
    CHECK(cfg.has("seed"));
    CHECK_FALSE(cfg.has("absent"));

    // required accessors name the missing field
    try {
        cfg.get_double("dead_time_ps");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "missing required config field 'dead_time_ps'"));
    }
    try {
        cfg.get_double("label");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "'label' is not a number"));
    }
    try {
        Config::from_text("novalue\n", "inline");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "inline:1"));
    }
    try {
        cfg.get_uint("efficiency");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(contains(e.what(), "efficiency"));
    }
}

TEST_CASE("environment variables override file values") {
    Config cfg = Config::from_text("seed=1\nn_pulses=100\n", "inline");
    REQUIRE(setenv("PHOTOSTAT_SEED", "777", 1) == 0);
    REQUIRE(setenv("PHOTOSTAT_NEW_KEY", "abc", 1) == 0);
    REQUIRE(setenv("OTHERPREFIX_SEED", "999", 1) == 0);
    cfg.apply_env_overrides();
    CHECK(cfg.get_uint("seed") == 777);
    CHECK(cfg.get_uint("n_pulses") == 100);
    CHECK(cfg.get_string("new_key") == "abc");
    unsetenv("PHOTOSTAT_SEED");
    unsetenv("PHOTOSTAT_NEW_KEY");
    unsetenv("OTHERPREFIX_SEED");
}

TEST_CASE("config file loading") {
    const std::string path = "io_cfg.cfg";
    spit(path, "a=1\nb = two\n");
    Config cfg = Config::from_file(path);
    CHECK(cfg.get_int("a") == 1);
    CHECK(cfg.get_string("b") == "two");
    CHECK_THROWS_AS(Config::from_file("does_not_exist.cfg"), ConfigError);
    std::remove(path.c_str());
}

TEST_CASE("report helpers are byte stable") {
    CHECK(fmt12(0.1) == "0.1");
    CHECK(fmt12(-0.0231) == "-0.0231");
    CHECK(fmt12(1.0) == "1");
    CHECK(fmt12(12345678.0) == "12345678");
    CHECK(fmt12(1e-300) == "1e-300");
    CHECK(render_kv({{"a", "1"}, {"b", "x"}}) == "a=1\nb=x\n");

    // classic reference vectors
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(hex64(0x1ULL) == "0000000000000001");

    const std::string path = "io_report.txt";
    write_text_file(path, "hello\n");
    CHECK(slurp(path) == "hello\n");
    CHECK(fnv1a64_file(path) == fnv1a64("hello\n", 6));
    std::remove(path.c_str());
}
