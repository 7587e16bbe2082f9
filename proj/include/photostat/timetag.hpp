#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace photostat {

// One detector click. Timestamps are integer picoseconds from run start;
// channel 0 = arm A, 1 = arm B of the splitter.
struct TimetagRecord {
    std::uint8_t channel = 0;
    std::uint64_t time_ps = 0;
};

struct TimetagStream {
    std::int64_t rep_period_ps = 500000;
    std::uint64_t n_pulses = 0;
    std::uint32_t channel_count = 2;
    std::uint64_t seed = 0;
    std::string metadata; // flat key=value lines, config echo
    std::vector<TimetagRecord> records; // sorted by time_ps
};

} // namespace photostat
