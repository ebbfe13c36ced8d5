#pragma once

// Locale-independent CSV encoding of training traces. Reals are written with
// 17 significant digits so that parsing reproduces them exactly.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "bnpo/sim_env.hpp"

namespace bnpo::io {

inline constexpr std::string_view kTraceHeader =
    "step,mean_reward,grad_norm,a,b,alpha,beta,mean_p,var_p";
inline constexpr std::string_view kChannelHeader =
    "step,channel,a,b,alpha,beta,mean_p,var_p";

std::string format_real(double value);
double parse_real(std::string_view text);

/// One row per step; the Beta columns describe channel 0.
void write_trace_csv(std::ostream& out, const std::vector<sim::StepRecord>& steps);

/// One row per (step, channel).
void write_channel_csv(std::ostream& out, const std::vector<sim::StepRecord>& steps);

/// Inverse of write_trace_csv (channel 0 only). Throws std::runtime_error on
/// a malformed header or row.
std::vector<sim::StepRecord> read_trace_csv(std::istream& in);

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace bnpo::io
