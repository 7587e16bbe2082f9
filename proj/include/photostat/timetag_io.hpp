#pragma once

#include <stdexcept>
#include <string>

#include "photostat/timetag.hpp"

namespace photostat {

// Input-file defect (bad magic, truncation, unparsable record). what() names
// the file and the byte offset (or line for CSV) of the failure.
struct TimetagFileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Binary layout, little-endian:
//   0   8  magic "PHOTTAG\0"
//   8   4  u32 format version (= 1)
//  12   4  u32 channel count
//  16   8  i64 excitation period [ps]
//  24   8  u64 pulse count
//  32   8  u64 rng seed
//  40   4  u32 metadata length m
//  44   m  metadata, flat key=value lines
//  44+m    records until EOF: u8 channel, u64 timestamp [ps], ascending time
void write_timetags_binary(const std::string& path, const TimetagStream& s);
TimetagStream read_timetags_binary(const std::string& path);

// Lossless text twin: '#'-prefixed header lines carrying the same fields,
// then "channel,time_ps" rows.
void write_timetags_csv(const std::string& path, const TimetagStream& s);
TimetagStream read_timetags_csv(const std::string& path);

// Reads either representation, by sniffing the magic.
TimetagStream read_timetags(const std::string& path);

} // namespace photostat
