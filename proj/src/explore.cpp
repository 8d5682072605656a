#include "unroll/explore.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Dense>
#include <json.hpp>

#include "unroll/rtl.hpp"
#include "unroll/sim.hpp"
#include "unroll/tensor.hpp"

namespace unroll {

namespace {

struct PresetRow {
  std::string_view name;
  Family family;
  Unroll unroll;
  int a, b, c;        // gemm m n p, or conv iw ih ic
  int fw, fh, oc;
};

constexpr PresetRow kPresets[] = {
    {"gemmt-RP-S", Family::gemmt, Unroll::row_parallel, 32, 32, 32, 0, 0, 0},
    {"gemmt-RP-L", Family::gemmt, Unroll::row_parallel, 128, 128, 128, 0, 0, 0},
    {"gemmt-FU-S", Family::gemmt, Unroll::fully_unrolled, 16, 16, 16, 0, 0, 0},
    {"gemmt-FU-L", Family::gemmt, Unroll::fully_unrolled, 32, 32, 32, 0, 0, 0},
    {"gemms-RP-S", Family::gemms, Unroll::row_parallel, 16, 16, 16, 0, 0, 0},
    {"gemms-RP-L", Family::gemms, Unroll::row_parallel, 128, 128, 128, 0, 0, 0},
    {"conv1d-PW-S", Family::conv1d, Unroll::pixelwise, 32, 1, 64, 3, 1, 64},
    {"conv1d-PW-L", Family::conv1d, Unroll::pixelwise, 32, 1, 64, 3, 1, 128},
    {"conv1d-FU-S", Family::conv1d, Unroll::fully_unrolled, 32, 1, 8, 3, 1, 8},
    {"conv1d-FU-L", Family::conv1d, Unroll::fully_unrolled, 32, 1, 16, 3, 1, 16},
    {"conv2d-PW-S", Family::conv2d, Unroll::pixelwise, 25, 25, 32, 3, 3, 64},
    {"conv2d-PW-L", Family::conv2d, Unroll::pixelwise, 25, 25, 64, 3, 3, 64},
    {"conv2d-RP-S", Family::conv2d, Unroll::row_parallel, 8, 8, 8, 3, 3, 8},
    {"conv2d-RP-L", Family::conv2d, Unroll::row_parallel, 8, 8, 16, 3, 3, 16},
    {"conv2d-FU-S", Family::conv2d, Unroll::fully_unrolled, 8, 8, 4, 3, 3, 4},
    {"conv2d-FU-L", Family::conv2d, Unroll::fully_unrolled, 8, 8, 8, 3, 3, 8},
};

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::size_t expected_multipliers(const KernelConfig& cfg, const WeightTensor& w, std::size_t duplication) {
  return cfg.specialize ? duplication * w.nnz() : duplication * w.size();
}

/// Count check for shapes too large to simulate: multiplier accounting and
/// latency metadata consistent with the output lanes.
bool count_check(const DataflowGraph& g, const KernelConfig& cfg, const WeightTensor& w) {
  if (g.meta.multiplier_count != expected_multipliers(cfg, w, g.meta.duplication_factor)) return false;
  if (g.meta.output_latency.size() != g.outputs().size()) return false;
  const auto contract = throughput_contract(g);
  return contract.inputs_per_cycle == g.meta.inputs_per_cycle &&
         contract.outputs_per_cycle == g.meta.outputs_per_cycle &&
         *std::max_element(g.meta.output_latency.begin(), g.meta.output_latency.end()) == g.meta.latency;
}

KernelConfig apply_fields(KernelConfig c, const nlohmann::json& j) {
  if (j.contains("family")) c.family = family_from_string(j.at("family").get<std::string>());
  if (j.contains("unroll")) c.unroll = unroll_from_string(j.at("unroll").get<std::string>());
  c.m = j.value("m", c.m);
  c.n = j.value("n", c.n);
  c.p = j.value("p", c.p);
  c.iw = j.value("iw", c.iw);
  c.ih = j.value("ih", c.ih);
  c.ic = j.value("ic", c.ic);
  c.fw = j.value("fw", c.fw);
  c.fh = j.value("fh", c.fh);
  c.oc = j.value("oc", c.oc);
  c.bits = j.value("bits", c.bits);
  return c;
}

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t pool = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  if (pool == 1) {
    body();
    return;
  }
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(body);
  for (auto& t : threads) t.join();
}

struct PointResult {
  std::vector<ResultRow> rows;  // one per arch
};

PointResult run_point(const SweepConfig& cfg, const KernelSpec& spec, double sparsity, int bits,
                      std::uint64_t seed) {
  PointResult out;
  KernelConfig kc = spec.config;
  kc.bits = bits;
  kc.specialize = cfg.specialize;
  ResultRow base;
  base.kernel = spec.name;
  base.config = kc;
  base.sparsity = sparsity;
  base.seed = seed;
  try {
    kc.validate();
    const WeightTensor w = generate_weights(kc.weight_shape(), sparsity, bits, seed);
    const DataflowGraph g = build_kernel(kc, w);
    base.nnz = w.nnz();
    base.multiplier_count = g.meta.multiplier_count;
    base.latency = g.meta.latency;
    const bool small = spec.simulate && g.meta.multiplier_count <= kSimulationMultiplierLimit;
    if (small) {
      const auto eq = check_equivalence(g, kc, w, std::max(cfg.verify_trials, 1), seed);
      base.verification = eq.equivalent ? "pass" : "fail";
    } else {
      base.verification = count_check(g, kc, w) ? "count-ok" : "count-fail";
    }
    if (cfg.emit_rtl) {
      EmissionConfig ec;
      ec.header = kc.describe() + "\nsparsity " + fmt(sparsity) + " seed " + std::to_string(seed);
      ArtifactSet set = emit(g, ec);
      if (small) {
        const InputStimulus x = generate_inputs(kc.input_shape(), bits, seed);
        const auto expected = golden_outputs(kc, w, x);
        set.push_back(emit_testbench(g, ec, kc, x, expected));
      }
      write_artifacts(set, cfg.output_dir / "designs" / design_directory(kc, sparsity, seed));
    }
    for (const auto& arch : cfg.archs) {
      ResultRow row = base;
      row.cost = estimate(g, arch);
      out.rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    for (const auto& arch : cfg.archs) {
      ResultRow row = base;
      row.cost.arch = arch.name;
      row.verification = std::string("error: ") + e.what();
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

bool verified(const std::string& v) { return v == "pass" || v == "count-ok"; }

/// Normalization anchor: same kernel, arch and seed at sparsity 0 and the
/// highest precision in the set.
void normalize(std::vector<ResultRow>& rows) {
  auto key = [](const ResultRow& r) { return r.kernel + '|' + r.cost.arch + '|' + std::to_string(r.seed); };
  std::map<std::string, int> max_bits;
  for (const auto& r : rows) {
    auto& m = max_bits[r.kernel];
    m = std::max(m, r.config.bits);
  }
  std::map<std::string, const ResultRow*> anchors;
  for (const auto& r : rows) {
    if (r.sparsity == 0.0 && r.config.bits == max_bits[r.kernel] && !r.verification.starts_with("error")) {
      anchors[key(r)] = &r;
    }
  }
  for (auto& r : rows) {
    auto it = anchors.find(key(r));
    if (it == anchors.end() || it->second->cost.ble_count == 0) continue;
    r.normalized_ble = static_cast<double>(r.cost.ble_count) / static_cast<double>(it->second->cost.ble_count);
    r.normalized_area = r.cost.logic_area_um2 / it->second->cost.logic_area_um2;
  }
}

std::vector<double> json_doubles(const nlohmann::json& j, const char* key) {
  std::vector<double> v;
  for (const auto& x : j.at(key)) v.push_back(x.get<double>());
  return v;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

bool is_preset(std::string_view name) {
  return std::any_of(std::begin(kPresets), std::end(kPresets), [&](const PresetRow& p) { return p.name == name; });
}

KernelConfig preset(std::string_view name, int bits) {
  for (const auto& p : kPresets) {
    if (p.name != name) continue;
    KernelConfig c;
    c.family = p.family;
    c.unroll = p.unroll;
    c.bits = bits;
    if (c.is_gemm()) {
      c.m = p.a;
      c.n = p.b;
      c.p = p.c;
    } else {
      c.iw = p.a;
      c.ih = p.b;
      c.ic = p.c;
      c.fw = p.fw;
      c.fh = p.fh;
      c.oc = p.oc;
    }
    return c;
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

SweepConfig parse_sweep_config(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed sweep config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  SweepConfig cfg;
  try {
    if (!j.contains("kernels") || !j.at("kernels").is_array() || j.at("kernels").empty()) {
      throw ConfigError("sweep config needs a non-empty \"kernels\" list");
    }
    for (const auto& k : j.at("kernels")) {
      KernelSpec spec;
      if (k.is_string()) {
        spec.name = k.get<std::string>();
        spec.config = preset(spec.name);
        spec.simulate = !spec.name.ends_with("-L");
      } else if (k.is_object()) {
        const std::string base = k.value("preset", std::string());
        spec.config = base.empty() ? KernelConfig{} : preset(base);
        spec.config = apply_fields(spec.config, k);
        spec.name = k.value("name", base.empty() ? spec.config.describe() : base);
        spec.simulate = k.value("simulate", !base.ends_with("-L"));
      } else {
        throw ConfigError("kernel entries must be preset names or objects");
      }
      spec.config.validate();
      cfg.kernels.push_back(std::move(spec));
    }
    cfg.sparsities = j.contains("sparsities") ? json_doubles(j, "sparsities") : sparsity_grid();
    if (j.contains("precisions")) {
      for (const auto& b : j.at("precisions")) cfg.precisions.push_back(b.get<int>());
    } else {
      cfg.precisions = {1, 2, 4, 8};
    }
    if (j.contains("archs")) {
      for (const auto& a : j.at("archs")) {
        if (a.is_string()) {
          cfg.archs.push_back(arch_preset(a.get<std::string>()));
        } else {
          for (auto& parsed : load_archs_json(a.dump())) cfg.archs.push_back(std::move(parsed));
        }
      }
    } else {
      cfg.archs = {arch_preset("K6")};
    }
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.verify_trials = j.value("verify_trials", cfg.verify_trials);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.specialize = j.value("specialize", cfg.specialize);
    cfg.emit_rtl = j.value("emit_rtl", cfg.emit_rtl);
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sweep config field: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const CostError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.seeds < 1) throw ConfigError("seeds must be at least 1");
  if (cfg.archs.empty() || cfg.precisions.empty() || cfg.sparsities.empty()) {
    throw ConfigError("sparsities, precisions and archs must be non-empty");
  }
  for (double s : cfg.sparsities) {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("sparsity outside [0, 1]");
  }
  for (int b : cfg.precisions) {
    if (b < 1 || b > kMaxPrecisionBits) throw ConfigError("precision outside [1, 16]");
  }
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read sweep config '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_sweep_config(ss.str());
}

SweepResult run_sweep(const SweepConfig& cfg) {
  struct Point {
    std::size_t kernel;
    double sparsity;
    int bits;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (std::size_t k = 0; k < cfg.kernels.size(); ++k) {
    for (double s : cfg.sparsities) {
      for (int b : cfg.precisions) {
        for (int i = 0; i < cfg.seeds; ++i) points.push_back({k, s, b, cfg.base_seed + static_cast<std::uint64_t>(i)});
      }
    }
  }
  std::vector<PointResult> done(points.size());
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    const Point& p = points[i];
    done[i] = run_point(cfg, cfg.kernels[p.kernel], p.sparsity, p.bits, p.seed);
  });

  // Rows ordered kernel, sparsity, precision, arch, seed.
  SweepResult result;
  const std::size_t seeds = static_cast<std::size_t>(cfg.seeds);
  for (std::size_t group = 0; group < points.size(); group += seeds) {
    for (std::size_t a = 0; a < cfg.archs.size(); ++a) {
      for (std::size_t i = 0; i < seeds; ++i) result.rows.push_back(done[group + i].rows.at(a));
    }
  }
  normalize(result.rows);
  for (const auto& r : result.rows) result.all_verified = result.all_verified && verified(r.verification);
  result.summary = summarize(result.rows);
  result.trend = trend_report(result.summary);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
  std::vector<SummaryRow> out;
  std::map<std::string, std::size_t> index;
  std::map<std::string, int> anchored;
  for (const auto& r : rows) {
    const std::string key = r.kernel + '|' + std::to_string(r.config.bits) + '|' + fmt(r.sparsity) + '|' + r.cost.arch;
    auto [it, fresh] = index.try_emplace(key, out.size());
    if (fresh) {
      SummaryRow s;
      s.kernel = r.kernel;
      s.family = r.config.family;
      s.bits = r.config.bits;
      s.sparsity = r.sparsity;
      s.arch = r.cost.arch;
      out.push_back(s);
    }
    SummaryRow& s = out[it->second];
    ++s.seeds;
    s.ble_count += static_cast<double>(r.cost.ble_count);
    s.lb_count += static_cast<double>(r.cost.lb_count);
    s.logic_area_um2 += r.cost.logic_area_um2;
    s.critical_path_ns += r.cost.critical_path_ns;
    s.adp += r.cost.adp;
    if (r.normalized_ble) {
      s.normalized_ble = s.normalized_ble.value_or(0.0) + *r.normalized_ble;
      s.normalized_area = s.normalized_area.value_or(0.0) + r.normalized_area.value_or(0.0);
      ++anchored[key];
    }
    s.all_verified = s.all_verified && verified(r.verification);
  }
  for (const auto& [key, i] : index) {
    SummaryRow& s = out[i];
    const double n = s.seeds;
    s.ble_count /= n;
    s.lb_count /= n;
    s.logic_area_um2 /= n;
    s.critical_path_ns /= n;
    s.adp /= n;
    const int a = anchored[key];
    if (a != s.seeds) {
      s.normalized_ble.reset();
      s.normalized_area.reset();
    } else if (s.normalized_ble) {
      *s.normalized_ble /= n;
      *s.normalized_area /= n;
    }
  }
  return out;
}

TrendReport trend_report(const std::vector<SummaryRow>& summary) {
  TrendReport report;
  std::map<std::tuple<std::string, int, std::string>, std::vector<const SummaryRow*>> series;
  std::vector<std::tuple<std::string, int, std::string>> order;
  for (const auto& s : summary) {
    auto key = std::make_tuple(s.kernel, s.bits, s.arch);
    auto [it, fresh] = series.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&s);
  }
  for (const auto& key : order) {
    const auto& pts = series[key];
    const auto& [kernel, bits, arch] = key;
    const std::string label = kernel + " " + std::to_string(bits) + "-bit " + arch;
    if (std::any_of(pts.begin(), pts.end(), [](const SummaryRow* s) { return !s->normalized_ble; })) {
      SeriesFit fit;
    fit.kernel = kernel;
    fit.bits = bits;
    fit.arch = arch;
      fit.points = pts.size();
      fit.flags.push_back("no-normalization-anchor");
      report.series.push_back(std::move(fit));
      report.notices.push_back(label + ": no dense anchor at the highest precision");
      continue;
    }
    std::set<double> distinct;
    for (const auto* s : pts) distinct.insert(s->sparsity);
    if (distinct.size() < 3) {
      report.notices.push_back(label + ": fewer than 3 sparsity points, skipped");
      continue;
    }
    Eigen::MatrixXd A(static_cast<Eigen::Index>(pts.size()), 2);
    Eigen::VectorXd y(static_cast<Eigen::Index>(pts.size()));
    const SummaryRow* last = pts.front();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      A(static_cast<Eigen::Index>(i), 0) = pts[i]->sparsity;
      A(static_cast<Eigen::Index>(i), 1) = 1.0;
      y(static_cast<Eigen::Index>(i)) = *pts[i]->normalized_ble;
      if (pts[i]->sparsity > last->sparsity) last = pts[i];
    }
    const Eigen::Vector2d coef = A.colPivHouseholderQr().solve(y);
    const double ss_res = (A * coef - y).squaredNorm();
    const double ss_tot = (y.array() - y.mean()).matrix().squaredNorm();
    SeriesFit fit;
    fit.kernel = kernel;
    fit.bits = bits;
    fit.arch = arch;
    fit.points = pts.size();
    fit.slope = coef(0);
    fit.intercept = coef(1);
    fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.endpoint = *last->normalized_ble;
    fit.endpoint_sparsity = last->sparsity;
    if (fit.slope > 0) fit.flags.push_back("area-grows-with-sparsity");
    if (pts.front()->family == Family::gemms) {
      if (fit.endpoint_sparsity >= 0.9 && fit.endpoint < 0.40) fit.flags.push_back("systolic-retention-below-0.40");
    } else if (fit.r2 < 0.98) {
      fit.flags.push_back("nonlinear-r2-below-0.98");
    }
    report.series.push_back(std::move(fit));
  }

  std::map<std::tuple<std::string, std::string, double, int>, double> area;
  for (const auto& s : summary) area[{s.kernel, s.arch, s.sparsity, s.bits}] = s.logic_area_um2;
  for (const auto& s : summary) {
    if (s.bits < 2 || s.bits % 2 != 0) continue;
    auto it = area.find({s.kernel, s.arch, s.sparsity, s.bits / 2});
    if (it == area.end() || it->second <= 0) continue;
    report.precision.push_back({s.kernel, s.arch, s.sparsity, s.bits, s.bits / 2, s.logic_area_um2 / it->second});
  }
  return report;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "kernel,family,unroll,m,n,p,iw,ih,ic,fw,fh,oc,bits,specialize,sparsity,seed,nnz,multipliers,latency,"
     << cost_csv_header() << ",normalized_ble,normalized_area,verification\n";
  for (const auto& r : rows) {
    const auto& c = r.config;
    os << r.kernel << ',' << to_string(c.family) << ',' << to_string(c.unroll) << ',' << c.m << ',' << c.n << ','
       << c.p << ',' << c.iw << ',' << c.ih << ',' << c.ic << ',' << c.fw << ',' << c.fh << ',' << c.oc << ','
       << c.bits << ',' << (c.specialize ? 1 : 0) << ',' << fmt(r.sparsity) << ',' << r.seed << ',' << r.nnz << ','
       << r.multiplier_count << ',' << r.latency << ',' << to_csv_row(r.cost) << ',' << fmt_opt(r.normalized_ble)
       << ',' << fmt_opt(r.normalized_area) << ',' << '"' << r.verification << '"' << '\n';
  }
  return os.str();
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "kernel,bits,sparsity,arch,seeds,ble_count,lb_count,logic_area_um2,critical_path_ns,adp,normalized_ble,"
        "normalized_area,all_verified\n";
  for (const auto& s : rows) {
    os << s.kernel << ',' << s.bits << ',' << fmt(s.sparsity) << ',' << s.arch << ',' << s.seeds << ','
       << fmt(s.ble_count) << ',' << fmt(s.lb_count) << ',' << fmt(s.logic_area_um2) << ','
       << fmt(s.critical_path_ns) << ',' << fmt(s.adp) << ',' << fmt_opt(s.normalized_ble) << ','
       << fmt_opt(s.normalized_area) << ',' << (s.all_verified ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string trend_csv(const TrendReport& t) {
  std::ostringstream os;
  os << "kernel,bits,arch,points,slope,intercept,r2,endpoint_sparsity,endpoint,flags\n";
  for (const auto& s : t.series) {
    std::string flags;
    for (const auto& f : s.flags) flags += (flags.empty() ? "" : ";") + f;
    os << s.kernel << ',' << s.bits << ',' << s.arch << ',' << s.points << ',' << fmt(s.slope) << ','
       << fmt(s.intercept) << ',' << fmt(s.r2) << ',' << fmt(s.endpoint_sparsity) << ',' << fmt(s.endpoint) << ','
       << flags << '\n';
  }
  return os.str();
}

std::string precision_csv(const TrendReport& t) {
  std::ostringstream os;
  os << "kernel,arch,sparsity,bits_high,bits_low,area_ratio\n";
  for (const auto& p : t.precision) {
    os << p.kernel << ',' << p.arch << ',' << fmt(p.sparsity) << ',' << p.bits_high << ',' << p.bits_low << ','
       << fmt(p.area_ratio) << '\n';
  }
  return os.str();
}

std::string adp_csv(const std::vector<SummaryRow>& summary) {
  std::ostringstream os;
  os << "kernel,bits,sparsity,arch,adp,normalized_adp\n";
  std::map<std::tuple<std::string, int, double>, std::vector<const SummaryRow*>> groups;
  std::vector<std::tuple<std::string, int, double>> order;
  for (const auto& s : summary) {
    auto key = std::make_tuple(s.kernel, s.bits, s.sparsity);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&s);
  }
  for (const auto& key : order) {
    const auto& rows = groups[key];
    if (rows.size() < 2) continue;
    const SummaryRow* anchor = rows.back();
    for (const auto* r : rows) {
      if (r->arch == "K6") anchor = r;
    }
    for (const auto* r : rows) {
      os << r->kernel << ',' << r->bits << ',' << fmt(r->sparsity) << ',' << r->arch << ',' << fmt(r->adp) << ','
         << fmt(anchor->adp > 0 ? r->adp / anchor->adp : 1.0) << '\n';
    }
  }
  return os.str();
}

void write_sweep_outputs(const SweepResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir / name).string());
    f << text;
  };
  put("results.csv", results_csv(result.rows));
  put("summary.csv", summary_csv(result.summary));
  put("trend.csv", trend_csv(result.trend));
  put("precision.csv", precision_csv(result.trend));
  put("adp.csv", adp_csv(result.summary));
  std::string notices;
  for (const auto& n : result.trend.notices) notices += n + '\n';
  put("notices.txt", notices);
}

CaseStudy case_study(const CaseStudyConfig& cfg) {
  if (cfg.archs.size() < 2) throw ConfigError("case study needs at least two architectures");
  struct Point {
    std::size_t kernel;
    int bits;
    double sparsity;
    std::uint64_t seed;
  };
  std::vector<Point> points;
  for (std::size_t k = 0; k < cfg.kernels.size(); ++k) {
    for (int b : cfg.precisions) {
      for (double s : cfg.sparsities) {
        for (int i = 0; i < cfg.seeds; ++i) points.push_back({k, b, s, cfg.base_seed + static_cast<std::uint64_t>(i)});
      }
    }
  }
  std::vector<std::vector<CostReport>> reports(points.size());
  parallel_for(points.size(), cfg.workers, [&](std::size_t i) {
    const Point& p = points[i];
    const KernelConfig kc = preset(cfg.kernels[p.kernel], p.bits);
    const WeightTensor w = generate_weights(kc.weight_shape(), p.sparsity, p.bits, p.seed);
    const DataflowGraph g = build_kernel(kc, w);
    for (const auto& arch : cfg.archs) reports[i].push_back(estimate(g, arch));
  });

  CaseStudy study;
  const std::size_t seeds = static_cast<std::size_t>(cfg.seeds);
  for (std::size_t group = 0; group < points.size(); group += seeds) {
    const Point& p = points[group];
    std::vector<CostReport> mean(cfg.archs.size());
    for (std::size_t a = 0; a < cfg.archs.size(); ++a) {
      CostReport& m = mean[a];
      m.arch = cfg.archs[a].name;
      for (std::size_t i = 0; i < seeds; ++i) {
        const CostReport& r = reports[group + i][a];
        m.lb_count += r.lb_count;
        m.logic_area_um2 += r.logic_area_um2 / static_cast<double>(seeds);
        m.critical_path_ns += r.critical_path_ns / static_cast<double>(seeds);
        m.adp += r.adp / static_cast<double>(seeds);
      }
    }
    const auto adp = adp_table(mean, cfg.archs);
    for (std::size_t a = 0; a < cfg.archs.size(); ++a) {
      CaseCell c;
      c.kernel = cfg.kernels[p.kernel];
      c.bits = p.bits;
      c.sparsity = p.sparsity;
      c.arch = cfg.archs[a].name;
      c.K = cfg.archs[a].K;
      c.lb_count = static_cast<double>(mean[a].lb_count) / static_cast<double>(seeds);
      c.logic_area_um2 = mean[a].logic_area_um2;
      c.critical_path_ns = mean[a].critical_path_ns;
      c.adp = mean[a].adp;
      c.normalized_adp = adp[a].normalized;
      study.cells.push_back(c);
    }
  }

  // Text table: one block per sparsity, one row per architecture, one
  // column group (kLBs, area mm^2, delay ns) per kernel and precision.
  std::ostringstream t;
  std::vector<std::pair<std::string, int>> groups;
  for (const auto& k : cfg.kernels) {
    for (int b : cfg.precisions) groups.emplace_back(k, b);
  }
  auto find = [&](const std::string& k, int b, double s, const std::string& arch) -> const CaseCell& {
    for (const auto& c : study.cells) {
      if (c.kernel == k && c.bits == b && c.sparsity == s && c.arch == arch) return c;
    }
    throw ConfigError("missing case-study cell");
  };
  t << std::fixed;
  for (double s : cfg.sparsities) {
    t << "sparsity " << std::setprecision(1) << s << '\n' << std::setw(6) << "arch";
    for (const auto& [k, b] : groups) t << " | " << std::setw(28) << (k + " " + std::to_string(b) + "b");
    t << '\n' << std::setw(6) << "";
    for (std::size_t i = 0; i < groups.size(); ++i) t << " | " << std::setw(8) << "kLBs" << std::setw(10) << "mm2" << std::setw(10) << "ns";
    t << '\n';
    for (const auto& arch : cfg.archs) {
      t << std::setw(6) << arch.name;
      for (const auto& [k, b] : groups) {
        const CaseCell& c = find(k, b, s, arch.name);
        t << " | " << std::setw(8) << std::setprecision(2) << c.lb_count / 1000.0 << std::setw(10)
          << std::setprecision(3) << c.logic_area_um2 / 1e6 << std::setw(10) << std::setprecision(3)
          << c.critical_path_ns;
      }
      t << '\n';
    }
    t << '\n';
  }
  study.table = t.str();
  return study;
}

std::string case_study_csv(const CaseStudy& study) {
  std::ostringstream os;
  os << "kernel,bits,sparsity,arch,K,lb_count,logic_area_um2,critical_path_ns,adp,normalized_adp\n";
  for (const auto& c : study.cells) {
    os << c.kernel << ',' << c.bits << ',' << fmt(c.sparsity) << ',' << c.arch << ',' << c.K << ','
       << fmt(c.lb_count) << ',' << fmt(c.logic_area_um2) << ',' << fmt(c.critical_path_ns) << ',' << fmt(c.adp)
       << ',' << fmt(c.normalized_adp) << '\n';
  }
  return os.str();
}

void write_case_study(const CaseStudy& study, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "case_study.csv", std::ios::binary) << case_study_csv(study);
  std::ofstream(dir / "case_study.txt", std::ios::binary) << study.table;
  std::ostringstream adp;
  adp << "kernel,bits,sparsity,arch,adp,normalized_adp\n";
  for (const auto& c : study.cells) {
    adp << c.kernel << ',' << c.bits << ',' << fmt(c.sparsity) << ',' << c.arch << ',' << fmt(c.adp) << ','
        << fmt(c.normalized_adp) << '\n';
  }
  std::ofstream(dir / "adp.csv", std::ios::binary) << adp.str();
}

}  // namespace unroll
