#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unroll/cost.hpp"
#include "unroll/kernel.hpp"

namespace unroll {

/// Named benchmark sizes, e.g. "gemmt-RP-S" or "conv2d-PW-L".
std::vector<std::string> preset_names();
KernelConfig preset(std::string_view name, int bits = 8);
bool is_preset(std::string_view name);

struct KernelSpec {
  std::string name;
  KernelConfig config;  // bits is overridden per sweep point
  /// Full simulation for small shapes, count checks otherwise.
  bool simulate = true;
};

struct SweepConfig {
  std::vector<KernelSpec> kernels;
  std::vector<double> sparsities;
  std::vector<int> precisions;
  std::vector<ArchParams> archs;
  int seeds = 3;
  std::uint64_t base_seed = 1;
  int verify_trials = 3;
  int workers = 1;
  bool specialize = true;
  bool emit_rtl = false;
  std::filesystem::path output_dir = "sweep_out";
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernels may be preset names or objects with "name", optional "preset",
/// and any KernelConfig field. Missing lists fall back to the sparsity grid,
/// {1, 2, 4, 8} bits and the K6 study architecture.
SweepConfig parse_sweep_config(std::string_view json_text);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Kernel points with more multipliers than this use count checks.
constexpr std::size_t kSimulationMultiplierLimit = 4096;

struct ResultRow {
  std::string kernel;
  KernelConfig config;
  double sparsity = 0.0;
  std::uint64_t seed = 0;
  std::size_t nnz = 0;
  std::size_t multiplier_count = 0;
  int latency = 0;
  CostReport cost;
  std::optional<double> normalized_ble;
  std::optional<double> normalized_area;
  std::string verification;  // pass, fail, count-ok, count-fail, error: ...
};

struct SummaryRow {
  std::string kernel;
  Family family = Family::gemmt;
  int bits = 0;
  double sparsity = 0.0;
  std::string arch;
  int seeds = 0;
  double ble_count = 0.0;
  double lb_count = 0.0;
  double logic_area_um2 = 0.0;
  double critical_path_ns = 0.0;
  double adp = 0.0;
  std::optional<double> normalized_ble;
  std::optional<double> normalized_area;
  bool all_verified = true;
};

struct SeriesFit {
  std::string kernel;
  int bits = 0;
  std::string arch;
  std::size_t points = 0;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double endpoint = 0.0;  // normalized BLEs at the highest sparsity
  double endpoint_sparsity = 0.0;
  std::vector<std::string> flags;
};

struct PrecisionRatio {
  std::string kernel;
  std::string arch;
  double sparsity = 0.0;
  int bits_high = 0;
  int bits_low = 0;
  double area_ratio = 0.0;
};

struct TrendReport {
  std::vector<SeriesFit> series;
  std::vector<PrecisionRatio> precision;
  std::vector<std::string> notices;
};

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  TrendReport trend;
  bool all_verified = true;
};

/// Runs every (kernel, sparsity, precision, seed) point on a bounded worker
/// pool and estimates it on every architecture. Row order is fixed by the
/// configuration alone.
SweepResult run_sweep(const SweepConfig& cfg);

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);
/// Linear fit of normalized BLEs against sparsity per (kernel, bits, arch)
/// series, plus area(b)/area(b/2) ratios.
TrendReport trend_report(const std::vector<SummaryRow>& summary);

std::string results_csv(const std::vector<ResultRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string trend_csv(const TrendReport& trend);
std::string precision_csv(const TrendReport& trend);
/// Normalized ADP per (kernel, bits, sparsity) across architectures.
std::string adp_csv(const std::vector<SummaryRow>& summary);

/// Writes results.csv, summary.csv, trend.csv, precision.csv, adp.csv.
void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir);

struct CaseCell {
  std::string kernel;
  int bits = 0;
  double sparsity = 0.0;
  std::string arch;
  int K = 0;
  double lb_count = 0.0;
  double logic_area_um2 = 0.0;
  double critical_path_ns = 0.0;
  double adp = 0.0;
  double normalized_adp = 0.0;
};

struct CaseStudyConfig {
  std::vector<std::string> kernels = {"gemmt-RP-S", "conv1d-PW-S", "conv2d-PW-S"};
  std::vector<double> sparsities = {0.0, 0.5, 0.9};
  std::vector<int> precisions = {8, 4};
  std::vector<ArchParams> archs = study_archs();
  int seeds = 1;
  std::uint64_t base_seed = 1;
  int workers = 1;
};

struct CaseStudy {
  std::vector<CaseCell> cells;  // kernel, bits, sparsity, arch order
  std::string table;            // sparsity blocks x K rows x kernel-precision groups
};

CaseStudy case_study(const CaseStudyConfig& cfg);
std::string case_study_csv(const CaseStudy& study);
void write_case_study(const CaseStudy& study, const std::filesystem::path& dir);

}  // namespace unroll
