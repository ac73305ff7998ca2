#pragma once

// File formats: instances as JSON (format_version "1"), traces as CSV, run
// summaries as JSON, sweep tables as CSV. Writers go through a temp file and
// rename so readers never see partial output.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "j6/optimizer.hpp"
#include "j6/probgen.hpp"

namespace j6 {

inline constexpr std::string_view kFormatVersion = "1";

struct InstanceMetadata {
  std::optional<std::uint64_t> seed;
  std::optional<Family> family;
};

struct InstanceFile {
  ProblemInstance instance;
  InstanceMetadata metadata;
};

std::string instance_to_json(const ProblemInstance& instance, const InstanceMetadata& meta = {});
/// Throws FormatError on malformed JSON (with byte offset), unknown keys,
/// wrong version, or inconsistent dimensions.
InstanceFile instance_from_json(std::string_view text);

void save_instance(const ProblemInstance& instance, const std::filesystem::path& path,
                   const InstanceMetadata& meta = {});
ProblemInstance load_instance(const std::filesystem::path& path);
InstanceFile load_instance_file(const std::filesystem::path& path);

/// Columns shared by every trace: step .. n22, then s0..s{k-1}, then either
/// `decision` or a0..a5, then dh_norm, dw_norm.
std::vector<std::string> trace_header(std::size_t score_count, bool soft);

std::string trace_to_csv(const RunResult& result);
void write_trace(const RunResult& result, const std::filesystem::path& path);

struct TraceTable {
  std::size_t score_count = 6;
  bool soft = false;
  std::vector<TraceRecord> records;
};

TraceTable trace_from_csv(std::string_view text);
TraceTable read_trace(const std::filesystem::path& path);

struct RunSummary {
  StrategyConfig config;
  double final_ob1 = 0.0;
  double final_ob2 = 0.0;
  StopReason stop_reason = StopReason::MaxSteps;
  int steps = 0;
  /// Trace slot -> number of steps; counts sum to `steps`.
  std::map<int, int> selection_histogram;

  static RunSummary from(const StrategyConfig& config, const RunResult& result);
};

std::string summary_to_json(std::span<const RunSummary> runs);
void write_summary(std::span<const RunSummary> runs, const std::filesystem::path& path);

struct SweepRow {
  double value = 0.0;
  RunSummary summary;
  /// Largest soft weight at the first step (soft strategy only).
  std::optional<double> alpha_max_step0;
};

std::string sweep_to_csv(std::string_view param, std::span<const SweepRow> rows);
void write_sweep(std::string_view param, std::span<const SweepRow> rows,
                 const std::filesystem::path& path);

/// 17 significant digits, '.' decimal separator.
std::string format_double(double value);

void write_text_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace j6
