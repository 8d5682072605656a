#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "unroll/graph.hpp"

namespace unroll {

class CostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Logic-block architecture. Delays are in picoseconds and only meaningful
/// relative to each other.
struct ArchParams {
  std::string name;
  int K = 6;
  int N = 10;
  int I = 33;
  int W = 90;
  double tile_area = 3420.0;  // um^2 per logic block
  int ffs_per_ble = 2;
  int hard_adder_bits_per_ble = 2;
  double t_lut_ps = 250.0;
  double t_route_ps = 500.0;
  double t_carry_ps = 20.0;
};

/// Input pins per logic block: ceil(K(N+1)/2).
int arch_pins(int K, int N);
/// LUT delay for the study LUT sizes 3..6.
double lut_delay_ps(int K);

/// "K3".."K6" (study presets), "study-33" (alias of K6) and "baseline-52".
ArchParams arch_preset(std::string_view name);
std::vector<std::string> arch_preset_names();
/// K3, K4, K5, K6 in that order.
std::vector<ArchParams> study_archs();

/// JSON object with any subset of the ArchParams fields; "preset" selects a
/// starting point. A top-level array yields several architectures.
std::vector<ArchParams> load_archs_json(std::string_view json_text);
std::string arch_to_json(const ArchParams& arch);

/// LUTs for one f-input function by tree covering: ceil((f-1)/(K-1)).
int lut_count(int fanin, int K);
/// LUT levels on the path of an f-input function: ceil(log_K f).
int lut_levels(int fanin, int K);

enum class BleMode : std::uint8_t { arithmetic, logic, storage };

constexpr std::uint32_t kNoBle = 0xffffffffu;

struct Ble {
  BleMode mode = BleMode::logic;
  NodeId node = kNoNode;
  /// Signals read (bit-level net ids). Carry-in is not listed.
  std::vector<std::uint64_t> inputs;
  std::vector<std::uint64_t> outputs;
  /// Previous BLE on the same carry chain.
  std::uint32_t carry_from = kNoBle;
};

struct BleNetlist {
  std::vector<Ble> bles;
  std::size_t arithmetic_bles = 0;
  std::size_t logic_bles = 0;
  std::size_t storage_bles = 0;
  std::size_t memory_bits = 0;
  double critical_path_ps = 0.0;
  NodeId critical_node = kNoNode;
};

/// Technology-maps every node onto BLEs. Throws CostError for a kind with no
/// mapping rule.
BleNetlist decompose(const DataflowGraph& graph, const ArchParams& arch);

struct Packing {
  std::vector<std::uint32_t> lb_of;  // per BLE
  std::size_t lb_count = 0;
  int max_inputs_used = 0;
};

/// Greedy connectivity-first clustering, deterministic in BLE order.
Packing pack(const BleNetlist& netlist, const ArchParams& arch);

/// Recounts every LB from scratch; returns false (and describes the first
/// violation) if an LB exceeds N BLEs or I distinct external inputs.
bool check_packing(const BleNetlist& netlist, const Packing& packing, const ArchParams& arch,
                   std::string* why = nullptr);

struct CostReport {
  std::string arch;
  std::size_t ble_count = 0;
  std::size_t arithmetic_bles = 0;
  std::size_t logic_bles = 0;
  std::size_t storage_bles = 0;
  std::size_t lb_count = 0;
  double logic_area_um2 = 0.0;
  std::size_t memory_bits = 0;
  double critical_path_ns = 0.0;
  double fmax_mhz = 0.0;
  double adp = 0.0;  // um^2 * ns
  double ops_per_cycle = 0.0;
  int max_lb_inputs = 0;
};

CostReport estimate(const DataflowGraph& graph, const ArchParams& arch);

std::string to_json(const CostReport& r);
std::string cost_csv_header();
std::string to_csv_row(const CostReport& r);

struct AdpEntry {
  std::string arch;
  int K = 0;
  double adp = 0.0;
  double normalized = 0.0;
};

/// ADP of each report divided by the ADP of the K=6 report (the last
/// report if none has K=6). `reports` and `archs` are parallel.
std::vector<AdpEntry> adp_table(std::span<const CostReport> reports, std::span<const ArchParams> archs);

}  // namespace unroll
