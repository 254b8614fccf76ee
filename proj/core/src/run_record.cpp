#include "kbb/run_record.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace kbb {
namespace {

constexpr const char* kHeader = "iter,cum_samples,mu_error,ridge_used,wall_ms";

template <typename T>
T parse_field(std::string_view field, int line) {
  T value{};
  const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw std::runtime_error("run csv: bad field '" + std::string(field) + "' on line " +
                             std::to_string(line));
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string config_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[h & 0xF];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

void write_run_csv(std::ostream& out, const RunRecord& record) {
  out << kHeader << '\n';
  for (const RunRow& row : record.rows) {
    out << row.iter << ',' << row.cum_samples << ',' << format_double(row.mu_error) << ','
        << format_double(row.ridge_used) << ',' << format_double(row.wall_ms) << '\n';
  }
}

void write_run_csv(const std::string& path, const RunRecord& record) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_run_csv(out, record);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RunRow> read_run_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("run csv: missing or unexpected header");
  }
  std::vector<RunRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) {
      throw std::runtime_error("run csv: expected 5 fields on line " + std::to_string(lineno));
    }
    RunRow row;
    row.iter = parse_field<int>(fields[0], lineno);
    row.cum_samples = parse_field<long long>(fields[1], lineno);
    row.mu_error = parse_field<double>(fields[2], lineno);
    row.ridge_used = parse_field<double>(fields[3], lineno);
    row.wall_ms = parse_field<double>(fields[4], lineno);
    rows.push_back(row);
  }
  return rows;
}

std::vector<RunRow> read_run_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_run_csv(in);
}

}  // namespace kbb
