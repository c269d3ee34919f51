#ifndef SIGGAN_IO_HPP
#define SIGGAN_IO_HPP

// CSV readers/writers and atomic file output.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "siggan/config.hpp"
#include "siggan/error.hpp"
#include "siggan/preprocess.hpp"

namespace siggan {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw DataError("write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline double parse_csv_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(s) +
                    "' as a number");
  }
  return v;
}

/// YYYY-MM-DD.
inline std::chrono::sys_days parse_iso_date(std::string_view s, std::size_t line_no) {
  auto fail = [&] {
    return DataError("line " + std::to_string(line_no) + ": '" + std::string(s) +
                     "' is not an ISO-8601 date");
  };
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::from_chars(s.data(), s.data() + 4, y).ptr != s.data() + 4 ||
      std::from_chars(s.data() + 5, s.data() + 7, m).ptr != s.data() + 7 ||
      std::from_chars(s.data() + 8, s.data() + 10, d).ptr != s.data() + 10) {
    throw fail();
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) throw fail();
  return std::chrono::sys_days{ymd};
}

inline std::string format_iso_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// `date,close` with ascending ISO dates and positive closes.
inline PriceSeries parse_price_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != "date,close") {
    throw DataError("line 1: expected header 'date,close'");
  }
  PriceSeries p;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != 2) throw DataError("line " + std::to_string(line_no) + ": expected 2 fields");
    const auto day = parse_iso_date(f[0], line_no);
    const double close = parse_csv_double(f[1], line_no);
    if (!(close > 0.0)) {
      throw DataError("line " + std::to_string(line_no) + ": close must be positive");
    }
    if (!p.timestamps.empty() && day <= p.timestamps.back()) {
      throw DataError("line " + std::to_string(line_no) + ": dates must be strictly ascending");
    }
    p.timestamps.push_back(day);
    p.closes.push_back(close);
  }
  if (p.size() < 2) throw DataError("price file needs at least 2 rows");
  return p;
}

inline PriceSeries read_price_csv(const std::filesystem::path& path) {
  return parse_price_csv(read_file(path));
}

inline std::string format_price_csv(const PriceSeries& p) {
  std::ostringstream os;
  os << "date,close\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << format_iso_date(p.timestamps[i]) << ',' << detail::format_double(p.closes[i]) << '\n';
  }
  return os.str();
}

/// `sample_id,step,log_return`, one row per generated value.
inline std::string format_samples_csv(const std::vector<std::vector<double>>& samples) {
  std::ostringstream os;
  os << "sample_id,step,log_return\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t t = 0; t < samples[s].size(); ++t) {
      os << s << ',' << t << ',' << detail::format_double(samples[s][t]) << '\n';
    }
  }
  return os.str();
}

inline std::vector<std::vector<double>> parse_samples_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != "sample_id,step,log_return") {
    throw DataError("line 1: expected header 'sample_id,step,log_return'");
  }
  std::vector<std::vector<double>> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (trim(lines[i]).empty()) continue;
    const auto f = split_fields(lines[i]);
    if (f.size() != 3) throw DataError("line " + std::to_string(line_no) + ": expected 3 fields");
    std::size_t id = 0;
    std::size_t step = 0;
    if (std::from_chars(f[0].data(), f[0].data() + f[0].size(), id).ptr != f[0].data() + f[0].size() ||
        std::from_chars(f[1].data(), f[1].data() + f[1].size(), step).ptr !=
            f[1].data() + f[1].size() ||
        f[0].empty() || f[1].empty()) {
      throw DataError("line " + std::to_string(line_no) + ": bad sample_id or step");
    }
    const double v = parse_csv_double(f[2], line_no);
    if (id == out.size()) out.emplace_back();
    if (id + 1 != out.size() || step != out.back().size()) {
      throw DataError("line " + std::to_string(line_no) + ": rows must be ordered by sample_id, step");
    }
    out.back().push_back(v);
  }
  return out;
}

/// A file of returns: either prices (`date,close`, converted to log returns)
/// or generated samples (concatenated in sample order).
inline std::vector<double> read_return_file(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = split_lines(text);
  const auto header = lines.empty() ? std::string_view{} : trim(lines[0]);
  if (header == "date,close") return log_returns(parse_price_csv(text)).values;
  if (header == "sample_id,step,log_return") {
    std::vector<double> flat;
    for (const auto& s : parse_samples_csv(text)) flat.insert(flat.end(), s.begin(), s.end());
    return flat;
  }
  throw DataError(path.string() + " line 1: unrecognized header");
}

}  // namespace siggan

#endif  // SIGGAN_IO_HPP
