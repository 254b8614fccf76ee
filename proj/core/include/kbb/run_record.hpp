#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "kbb/algorithms.hpp"

namespace kbb {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string config_hash(std::string_view text);

/// Header `iter,cum_samples,mu_error,ridge_used,wall_ms`, one line per row.
void write_run_csv(std::ostream& out, const RunRecord& record);
void write_run_csv(const std::string& path, const RunRecord& record);

/// Parses the CSV written by write_run_csv. Only the row fields are
/// recovered; throws std::runtime_error on malformed input.
std::vector<RunRow> read_run_csv(std::istream& in);
std::vector<RunRow> read_run_csv(const std::string& path);

}  // namespace kbb
