#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hhmm/diagnostics.hpp"
#include "hhmm/likelihood.hpp"
#include "hhmm/simulator.hpp"
#include "hhmm/tempering.hpp"

// File formats. All CSV files carry a header row; doubles are written with
// %.17g so values round-trip exactly; nothing emits timestamps, so reruns are
// byte-identical. Readers report the offending line on malformed input.

namespace hhmm {

std::string format_double(double v);
double parse_double(std::string_view s, const std::string& context); // throws std::runtime_error

std::uint64_t fnv1a64(std::string_view bytes);
std::string hash_hex(std::string_view bytes); // fnv1a64 as 16 hex digits

std::string read_file(const std::string& path);              // throws std::runtime_error
void write_file(const std::string& path, std::string_view content);

// data.csv: frame_index,dive_index,duration,max_depth,wiggliness (1-based indices).
void write_data_csv(const std::string& path, const DataSet& data);
DataSet read_data_csv(const std::string& path);

// truth.csv: frame_index,dive_index,internal_state,production_state (1-based).
void write_truth_csv(const std::string& path, const SimOutput& sim);

// trace.csv: '# key=value' metadata lines (schema and burn_in first), then
// sweep,<parameters...>,energy.
void write_trace_csv(const std::string& path, const Trace& trace);
Trace read_trace_csv(const std::string& path);

// summary.csv: parameter,mean,sd,p2,p50,p98 plus an acceptance_fraction column
// when fractions are supplied (one per row; NaN renders as an empty cell).
void write_summary_csv(const std::string& path, const PosteriorSummary& summary,
                       const std::vector<double>* acceptance_fractions);

// swaps.csv: cycle,lower,upper,delta_energy,delta_beta,probability,accepted.
void write_swaps_csv(const std::string& path, std::span<const SwapRecord> swaps);

struct AcfRow {
    std::string parameter;
    int lag = 0;
    double value = 0.0;
};
void write_acf_csv(const std::string& path, std::span<const AcfRow> rows);

struct EssRow {
    std::string parameter;
    double value = 0.0;
};
void write_ess_csv(const std::string& path, std::span<const EssRow> rows);

// manifest.txt: key=value per line, in the given order.
void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

} // namespace hhmm
