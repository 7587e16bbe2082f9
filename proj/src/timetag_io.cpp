#include "photostat/timetag_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace photostat {

namespace {

constexpr char kMagic[8] = {'P', 'H', 'O', 'T', 'T', 'A', 'G', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}
std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

[[noreturn]] void fail(const std::string& path, std::uint64_t offset,
                       const std::string& what) {
    throw TimetagFileError(path + ": " + what + " at byte offset " +
                           std::to_string(offset));
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void write_timetags_binary(const std::string& path, const TimetagStream& s) {
    std::string buf;
    buf.reserve(64 + s.metadata.size() + 9 * s.records.size());
    buf.append(kMagic, 8);
    put_u32(buf, kVersion);
    put_u32(buf, s.channel_count);
    put_u64(buf, static_cast<std::uint64_t>(s.rep_period_ps));
    put_u64(buf, s.n_pulses);
    put_u64(buf, s.seed);
    put_u32(buf, static_cast<std::uint32_t>(s.metadata.size()));
    buf += s.metadata;
    for (const TimetagRecord& r : s.records) {
        buf.push_back(static_cast<char>(r.channel));
        put_u64(buf, r.time_ps);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw TimetagFileError("cannot open for writing: " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw TimetagFileError("write failed: " + path);
}

TimetagStream read_timetags_binary(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw TimetagFileError("cannot open: " + path);

    unsigned char head[44];
    std::size_t got = std::fread(head, 1, sizeof head, f.get());
    if (got < sizeof head) fail(path, got, "truncated header");
    if (std::memcmp(head, kMagic, 8) != 0) fail(path, 0, "bad magic");
    std::uint32_t version = get_u32(head + 8);
    if (version != kVersion)
        fail(path, 8, "unsupported format version " + std::to_string(version));

    TimetagStream s;
    s.channel_count = get_u32(head + 12);
    if (s.channel_count == 0 || s.channel_count > 16)
        fail(path, 12, "implausible channel count");
    s.rep_period_ps = static_cast<std::int64_t>(get_u64(head + 16));
    if (s.rep_period_ps <= 0) fail(path, 16, "excitation period must be > 0");
    s.n_pulses = get_u64(head + 24);
    s.seed = get_u64(head + 32);
    std::uint32_t meta_len = get_u32(head + 40);

    s.metadata.resize(meta_len);
    if (meta_len > 0) {
        got = std::fread(s.metadata.data(), 1, meta_len, f.get());
        if (got < meta_len) fail(path, 44 + got, "truncated metadata");
    }

    std::uint64_t offset = 44 + meta_len;
    std::uint64_t prev_t = 0;
    bool first = true;
    unsigned char rec[9];
    for (;;) {
        got = std::fread(rec, 1, sizeof rec, f.get());
        if (got == 0) break;
        if (got < sizeof rec) fail(path, offset, "truncated record");
        TimetagRecord r;
        r.channel = rec[0];
        r.time_ps = get_u64(rec + 1);
        if (r.channel >= s.channel_count)
            fail(path, offset,
                 "channel " + std::to_string(r.channel) + " out of range");
        if (!first && r.time_ps < prev_t)
            fail(path, offset, "timestamps out of order");
        first = false;
        prev_t = r.time_ps;
        s.records.push_back(r);
        offset += sizeof rec;
    }
    return s;
}

void write_timetags_csv(const std::string& path, const TimetagStream& s) {
    std::string buf;
    buf += "# timetags v1\n";
    buf += "# channel_count=" + std::to_string(s.channel_count) + "\n";
    buf += "# rep_period_ps=" + std::to_string(s.rep_period_ps) + "\n";
    buf += "# n_pulses=" + std::to_string(s.n_pulses) + "\n";
    buf += "# seed=" + std::to_string(s.seed) + "\n";
    std::istringstream meta(s.metadata);
    for (std::string line; std::getline(meta, line);)
        buf += "# meta." + line + "\n";
    buf += "channel,time_ps\n";
    for (const TimetagRecord& r : s.records) {
        buf += std::to_string(r.channel);
        buf += ',';
        buf += std::to_string(r.time_ps);
        buf += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw TimetagFileError("cannot open for writing: " + path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) throw TimetagFileError("write failed: " + path);
}

TimetagStream read_timetags_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TimetagFileError("cannot open: " + path);
    auto fail_line = [&](std::uint64_t line, const std::string& what) {
        throw TimetagFileError(path + ": " + what + " at line " +
                               std::to_string(line));
    };

    TimetagStream s;
    std::uint64_t lineno = 0;
    bool saw_columns = false;
    std::uint64_t prev_t = 0;
    bool first_rec = true;
    for (std::string line; std::getline(f, line);) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            auto eq = body.find('=');
            if (eq == std::string::npos) continue; // banner line
            std::string key = body.substr(0, eq);
            std::string value = body.substr(eq + 1);
            if (key.rfind("meta.", 0) == 0) {
                s.metadata += key.substr(5) + "=" + value + "\n";
            } else if (key == "channel_count") {
                s.channel_count = static_cast<std::uint32_t>(std::stoul(value));
            } else if (key == "rep_period_ps") {
                s.rep_period_ps = std::stoll(value);
            } else if (key == "n_pulses") {
                s.n_pulses = std::stoull(value);
            } else if (key == "seed") {
                s.seed = std::stoull(value);
            }
            continue;
        }
        if (!saw_columns) {
            if (line != "channel,time_ps")
                fail_line(lineno, "expected column header 'channel,time_ps'");
            saw_columns = true;
            continue;
        }
        const char* p = line.c_str();
        char* end = nullptr;
        unsigned long ch = std::strtoul(p, &end, 10);
        if (end == p || *end != ',') fail_line(lineno, "unparsable record");
        const char* q = end + 1;
        unsigned long long t = std::strtoull(q, &end, 10);
        if (end == q || *end != '\0') fail_line(lineno, "unparsable record");
        if (ch >= s.channel_count) fail_line(lineno, "channel out of range");
        if (!first_rec && t < prev_t) fail_line(lineno, "timestamps out of order");
        first_rec = false;
        prev_t = t;
        s.records.push_back(
            {static_cast<std::uint8_t>(ch), static_cast<std::uint64_t>(t)});
    }
    if (!saw_columns)
        fail_line(lineno, "missing column header 'channel,time_ps'");
    return s;
}

TimetagStream read_timetags(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw TimetagFileError("cannot open: " + path);
    char head[8] = {0};
    f.read(head, 8);
    f.close();
    if (f.gcount() == 8 && std::memcmp(head, kMagic, 8) == 0)
        return read_timetags_binary(path);
    return read_timetags_csv(path);
}

} // namespace photostat
