#include "bnpo/csv_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace bnpo::io {

std::string format_real(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_real(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::runtime_error("csv: not a real number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void write_trace_csv(std::ostream& out, const std::vector<sim::StepRecord>& steps) {
  out << kTraceHeader << '\n';
  for (const auto& s : steps) {
    const sim::ChannelRecord c = s.channels.empty() ? sim::ChannelRecord{} : s.channels[0];
    out << s.step << ',' << format_real(s.mean_reward) << ',' << format_real(s.grad_norm) << ','
        << format_real(c.a) << ',' << format_real(c.b) << ',' << format_real(c.alpha) << ','
        << format_real(c.beta) << ',' << format_real(c.mean_p) << ',' << format_real(c.var_p)
        << '\n';
  }
}

void write_channel_csv(std::ostream& out, const std::vector<sim::StepRecord>& steps) {
  out << kChannelHeader << '\n';
  for (const auto& s : steps) {
    for (std::size_t k = 0; k < s.channels.size(); ++k) {
      const auto& c = s.channels[k];
      out << s.step << ',' << k << ',' << format_real(c.a) << ',' << format_real(c.b) << ','
          << format_real(c.alpha) << ',' << format_real(c.beta) << ','
          << format_real(c.mean_p) << ',' << format_real(c.var_p) << '\n';
    }
  }
}

std::vector<sim::StepRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::runtime_error("csv: unexpected trace header");
  }
  std::vector<sim::StepRecord> steps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::runtime_error("csv: trace row must have 9 fields");
    sim::StepRecord s;
    std::size_t step = 0;
    const auto res = std::from_chars(f[0].data(), f[0].data() + f[0].size(), step);
    if (res.ec != std::errc()) throw std::runtime_error("csv: bad step index");
    s.step = step;
    s.mean_reward = parse_real(f[1]);
    s.grad_norm = parse_real(f[2]);
    s.channels.push_back(sim::ChannelRecord{parse_real(f[3]), parse_real(f[4]),
                                            parse_real(f[5]), parse_real(f[6]),
                                            parse_real(f[7]), parse_real(f[8])});
    steps.push_back(std::move(s));
  }
  return steps;
}

}  // namespace bnpo::io
