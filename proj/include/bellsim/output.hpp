#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bellsim/experiments.hpp"

namespace bellsim {

// Run metadata attached to every emitted file, in emission order. Values
// are pre-formatted strings so CSV and JSON agree byte-for-byte on them.
using MetaList = std::vector<std::pair<std::string, std::string>>;

// Fixed numeric formatting for all emitted real values: 12 significant
// digits, shortest form ("%.12g").
std::string format_double(double v);

// CSV with `# key=value` metadata comment lines, then a header row, then
// data rows. Columns:
//   trials:    trial,chsh,xA,xA2,yB,yB2,minus_pos,violated,chsh_err
//   curve:     axis,probability,stderr
//   histogram: bin_lo,bin_hi,count
// A missing chsh_err is emitted as an empty field.
std::string trials_to_csv(const std::vector<TrialResult>& rows, const MetaList& meta);
std::string curve_to_csv(const ViolationCurve& curve, const MetaList& meta);
std::string histogram_to_csv(const std::vector<HistogramBin>& bins,
                             const MetaList& meta);

// Same content as the CSV forms under {"meta": {...}, "rows": [...]};
// object keys keep insertion order. A missing chsh_err becomes null.
std::string trials_to_json(const std::vector<TrialResult>& rows, const MetaList& meta);
std::string curve_to_json(const ViolationCurve& curve, const MetaList& meta);
std::string histogram_to_json(const std::vector<HistogramBin>& bins,
                              const MetaList& meta);

// Write content to path ("-" means stdout). Throws std::runtime_error on
// I/O failure.
void write_text(const std::string& path, const std::string& content);

}  // namespace bellsim
