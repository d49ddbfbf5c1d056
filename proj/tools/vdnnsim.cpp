// Command-line front end: footprint analyses, single simulations, policy
// sweeps, graph dumps and the randomized invariant campaign.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vdnnsim/vdnnsim.hpp"

namespace fs = std::filesystem;
using namespace vdnnsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitOom = 2;

struct CliArgs {
  std::string config_path;
  std::string network;
  std::optional<std::uint64_t> batch;
  std::string policy;
  std::string algo_mode;
  std::string capacity;
  std::string device;
  std::string link;
  std::string decision;
  std::string out_dir;
  std::string format = "table";
  bool trace_pool = false;
  std::optional<std::uint64_t> seed;
  // sweep / fuzz
  std::string axis;
  std::string values;
  int trials = 10000;
};

void add_common_options(CLI::App* cmd, CliArgs& a) {
  cmd->add_option("--config", a.config_path, "experiment config file (INI sections)");
  cmd->add_option("--network", a.network, "preset name, vggN, or network file (.conf/.json)");
  cmd->add_option("--batch", a.batch, "batch size (images)");
  cmd->add_option("--policy", a.policy, "baseline|vdnn-all|vdnn-conv|vdnn-dyn|decision-file");
  cmd->add_option("--algo-mode", a.algo_mode, "perf|memory");
  cmd->add_option("--capacity", a.capacity, "pool capacity override (e.g. 12GiB, unlimited)");
  cmd->add_option("--device", a.device, "device preset (titanx)");
  cmd->add_option("--link", a.link, "link preset (pcie3|page_migration)");
  cmd->add_option("--decision", a.decision, "decision file (JSON) to replay");
  cmd->add_option("--out", a.out_dir, "directory for CSV/JSON artifacts");
  cmd->add_option("--format", a.format, "table|csv|json")
      ->check(CLI::IsMember({"table", "csv", "json"}));
  cmd->add_flag("--trace-pool", a.trace_pool, "emit a per-alloc/free pool trace CSV");
  cmd->add_option("--seed", a.seed, "random seed (fuzz)");
}

ExperimentConfig make_config(const CliArgs& a) {
  ExperimentConfig cfg;
  if (!a.config_path.empty()) {
    auto path = vdnnsim::detail::resolve_path(a.config_path);
    if (!path) throw ConfigError("config file not found: " + a.config_path);
    cfg = load_config(*path);
  }
  if (!a.network.empty()) {
    cfg.network = a.network;
    cfg.inline_layers.clear();
  }
  if (a.batch) cfg.batch = *a.batch;
  if (!a.policy.empty()) cfg.policy = a.policy;
  if (!a.algo_mode.empty()) {
    if (a.algo_mode == "perf") cfg.algo_mode = AlgoMode::PerfOptimal;
    else if (a.algo_mode == "memory") cfg.algo_mode = AlgoMode::MemoryOptimal;
    else throw ConfigError("--algo-mode must be perf or memory");
  }
  if (!a.capacity.empty()) cfg.capacity = parse_bytes(a.capacity);
  if (!a.device.empty()) {
    bool wg = cfg.include_weight_grads;
    vdnnsim::detail::apply_device_key(cfg.cost, wg, "preset", a.device);
    cfg.include_weight_grads = wg;
  }
  if (!a.link.empty()) vdnnsim::detail::apply_link_key(cfg.cost, "preset", a.link);
  if (!a.decision.empty()) {
    cfg.decision_file = a.decision;
    cfg.policy = "decision-file";
  }
  if (a.seed) cfg.seed = *a.seed;
  return cfg;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
  fs::create_directories(dir);
  std::ofstream out(fs::path(dir) / name);
  if (!out) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
  out << content;
}

PolicyDecision load_decision_file(const std::string& name, const NetworkGraph& g) {
  auto path = vdnnsim::detail::resolve_path(name);
  if (!path) throw ConfigError("decision file not found: " + name);
  std::ifstream in(*path);
  json j;
  in >> j;
  return decision_from_json(j, g);
}

struct ResolvedPolicy {
  std::optional<PolicyDecision> decision;  // nullopt: untrainable
  std::vector<ProfilePassResult> passes;   // non-empty for vdnn-dyn
};

ResolvedPolicy resolve_policy(const ExperimentConfig& cfg, const NetworkGraph& g) {
  ResolvedPolicy r;
  if (cfg.policy == "baseline") {
    r.decision = static_decision(PolicyKind::Baseline, cfg.algo_mode, g, cfg.cost);
  } else if (cfg.policy == "vdnn-all") {
    r.decision = static_decision(PolicyKind::VdnnAll, cfg.algo_mode, g, cfg.cost);
  } else if (cfg.policy == "vdnn-conv") {
    r.decision = static_decision(PolicyKind::VdnnConv, cfg.algo_mode, g, cfg.cost);
  } else if (cfg.policy == "vdnn-dyn") {
    DynamicSelection sel = dynamic_select(g, cfg.effective_capacity(), cfg.cost);
    r.passes = std::move(sel.passes);
    r.decision = std::move(sel.decision);
  } else if (cfg.policy == "decision-file") {
    if (cfg.decision_file.empty()) throw ConfigError("policy decision-file needs --decision <file>");
    r.decision = load_decision_file(cfg.decision_file, g);
  } else {
    throw ConfigError("unknown policy: " + cfg.policy);
  }
  return r;
}

std::string percent(double x) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << 100.0 * x << "%";
  return os.str();
}

// ---- subcommands ----------------------------------------------------------

int cmd_footprint(const CliArgs& a) {
  const ExperimentConfig cfg = make_config(a);
  const NetworkGraph g = build_network(cfg);
  const AlgoAssignment algos = assign_algos(g, cfg.algo_mode, cfg.cost);
  const FootprintReport fp = baseline_footprint(g, algos, cfg.cost, cfg.include_weight_grads);
  if (a.format == "json") {
    json j = footprint_to_json(fp);
    j["network"] = cfg.network;
    j["batch"] = cfg.batch;
    std::cout << j.dump(2) << "\n";
  } else if (a.format == "csv") {
    std::cout << "network,batch,weights,feature_maps,gradient_buffers,workspace,total\n"
              << cfg.network << ',' << cfg.batch << ',' << fp.weights_bytes << ','
              << fp.feature_maps_bytes << ',' << fp.gradient_buffers_bytes << ','
              << fp.workspace_bytes << ',' << fp.total_bytes << "\n";
  } else {
    std::cout << "baseline footprint of " << cfg.network << " (batch " << cfg.batch << ")\n"
              << "  weights           " << format_bytes(fp.weights_bytes) << "\n"
              << "  feature maps      " << format_bytes(fp.feature_maps_bytes) << "\n"
              << "  gradient buffers  " << format_bytes(fp.gradient_buffers_bytes) << "\n"
              << "  workspace         " << format_bytes(fp.workspace_bytes) << "\n"
              << "  total             " << format_bytes(fp.total_bytes) << "\n"
              << "  feature-map fraction         " << percent(fp.feature_map_fraction()) << "\n"
              << "  feature-extraction fraction  " << percent(fp.feature_extraction_fraction())
              << "\n";
  }
  if (!a.out_dir.empty()) {
    json j = footprint_to_json(fp);
    j["network"] = cfg.network;
    j["batch"] = cfg.batch;
    write_file(a.out_dir, "footprint.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

void print_run_summary(const ExperimentConfig& cfg, const std::string& label, const RunReport& r,
                       const RunReport& oracle, const FootprintReport& fp_perf) {
  std::cout << "network " << cfg.network << " batch " << cfg.batch << "  policy " << label << "\n";
  std::cout << "  verdict          " << r.verdict() << "\n";
  const std::string cap_str = cfg.effective_capacity() >= kUnlimitedBytes
                                  ? "unlimited"
                                  : format_bytes(cfg.effective_capacity());
  std::cout << "  max memory       " << format_bytes(r.max_mem_bytes) << "  (capacity " << cap_str
            << ")\n";
  std::cout << "  avg memory       " << format_bytes(r.avg_mem_bytes) << " (time-weighted)\n";
  if (fp_perf.total_bytes > 0) {
    std::cout << "  savings vs baseline footprint  max "
              << percent(1.0 - double(r.max_mem_bytes) / double(fp_perf.total_bytes)) << "  avg "
              << percent(1.0 - double(r.avg_mem_bytes) / double(fp_perf.total_bytes)) << "\n";
  }
  const double host_fraction =
      r.host_peak_bytes + r.max_mem_bytes > 0
          ? double(r.host_peak_bytes) / double(r.host_peak_bytes + r.max_mem_bytes)
          : 0.0;
  std::cout << "  offload traffic  " << format_bytes(r.offload_traffic_bytes) << "  host peak "
            << format_bytes(r.host_peak_bytes) << " (host fraction " << percent(host_fraction)
            << ")\n";
  std::cout << "  time             " << format_seconds(r.total_ns);
  if (oracle.total_ns > 0) {
    std::cout << "  slowdown vs oracle " << std::fixed << std::setprecision(2)
              << double(r.total_ns) / double(oracle.total_ns) << "x";
  }
  std::cout << "\n";
  std::cout << "  stalls           fwd-offload " << format_seconds(r.stall_fwd_offload_ns)
            << "  bwd-prefetch " << format_seconds(r.stall_bwd_prefetch_ns) << "\n";
  std::cout << "  worst-case DRAM interference bound " << percent(r.interference_bound) << "\n";
}

int cmd_simulate(const CliArgs& a) {
  const ExperimentConfig cfg = make_config(a);
  const NetworkGraph g = build_network(cfg);
  ResolvedPolicy rp = resolve_policy(cfg, g);
  if (!rp.passes.empty()) {
    std::cout << "profiling passes:\n";
    for (const ProfilePassResult& p : rp.passes) {
      std::cout << "  " << p.phase << "  " << std::left << std::setw(18) << p.decision.label
                << (p.pass ? "PASS" : "OOM ") << "  max " << format_bytes(p.max_mem_bytes)
                << "  time " << format_seconds(p.total_ns) << "\n";
    }
    if (!a.out_dir.empty()) write_file(a.out_dir, "profile_passes.csv", profile_passes_csv(rp.passes));
  }
  if (!rp.decision) {
    std::cout << "verdict: UNTRAINABLE (memory floor does not fit in "
              << format_bytes(cfg.effective_capacity()) << ")\n";
    return kExitOom;
  }

  SimOptions opts;
  opts.include_weight_grads = cfg.include_weight_grads;
  std::vector<PoolTraceRow> trace;
  const RunReport r = a.trace_pool
                          ? simulate_with_trace(g, *rp.decision, cfg.cost,
                                                cfg.effective_capacity(), trace, opts)
                          : simulate(g, *rp.decision, cfg.cost, cfg.effective_capacity(), opts);
  const RunReport oracle = simulate_oracle(g, cfg.cost);
  const FootprintReport fp_perf =
      baseline_footprint(g, assign_algos(g, AlgoMode::PerfOptimal, cfg.cost), cfg.cost,
                         cfg.include_weight_grads);

  if (a.format == "json") {
    json j = report_to_json(r, /*with_events=*/false);
    j["network"] = cfg.network;
    j["batch"] = cfg.batch;
    j["policy"] = rp.decision->label;
    j["oracle_total_ns"] = oracle.total_ns;
    j["baseline_footprint_perf_bytes"] = fp_perf.total_bytes;
    std::cout << j.dump(2) << "\n";
  } else {
    print_run_summary(cfg, rp.decision->label, r, oracle, fp_perf);
  }

  if (!a.out_dir.empty()) {
    write_file(a.out_dir, "timeline.csv", events_csv(r));
    json j = report_to_json(r);
    j["network"] = cfg.network;
    j["batch"] = cfg.batch;
    j["policy"] = rp.decision->label;
    j["oracle_total_ns"] = oracle.total_ns;
    j["baseline_footprint_perf_bytes"] = fp_perf.total_bytes;
    write_file(a.out_dir, "report.json", j.dump(2) + "\n");
    write_file(a.out_dir, "decision.json", decision_to_json(*rp.decision).dump(2) + "\n");
    if (a.trace_pool) write_file(a.out_dir, "pool_trace.csv", pool_trace_csv(trace));
  }
  return r.pass ? kExitOk : kExitOom;
}

int cmd_oracle(const CliArgs& a) {
  const ExperimentConfig cfg = make_config(a);
  const NetworkGraph g = build_network(cfg);
  const RunReport r = simulate_oracle(g, cfg.cost);
  if (a.format == "json") {
    json j = report_to_json(r, false);
    j["network"] = cfg.network;
    j["batch"] = cfg.batch;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "oracle (unlimited memory, fastest algorithms): " << cfg.network << " batch "
              << cfg.batch << "\n  time " << format_seconds(r.total_ns) << "  max memory "
              << format_bytes(r.max_mem_bytes) << "\n";
  }
  if (!a.out_dir.empty()) write_file(a.out_dir, "oracle.json", report_to_json(r, false).dump(2) + "\n");
  return kExitOk;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

int cmd_sweep(const CliArgs& a) {
  ExperimentConfig cfg = make_config(a);
  if (a.axis.empty()) throw ConfigError("sweep needs --axis policy|batch|depth|capacity");
  std::vector<std::string> values = split_csv(a.values);
  if (values.empty()) {
    if (a.axis == "policy") values = {"baseline", "vdnn-all", "vdnn-conv", "vdnn-dyn"};
    else if (a.axis == "depth") values = {"16", "116", "216", "316", "416"};
    else if (a.axis == "batch") values = {"64", "128", "256"};
    else throw ConfigError("sweep --axis capacity needs explicit --values");
  }

  std::ostringstream csv;
  csv << "axis_value,verdict,max_mem_bytes,avg_mem_bytes,baseline_footprint_bytes,"
         "savings_max,savings_avg,offload_traffic_bytes,total_ns,slowdown\n";
  std::cout << std::left << std::setw(12) << a.axis << std::setw(14) << "verdict" << std::setw(12)
            << "max" << std::setw(12) << "avg" << std::setw(12) << "traffic" << std::setw(12)
            << "time" << std::setw(10) << "slowdown" << "\n";

  for (const std::string& value : values) {
    ExperimentConfig point = cfg;
    if (a.axis == "policy") point.policy = value;
    else if (a.axis == "batch") point.batch = std::stoull(value);
    else if (a.axis == "depth") point.network = "vgg" + value;
    else if (a.axis == "capacity") point.capacity = parse_bytes(value);
    else throw ConfigError("unknown sweep axis: " + a.axis);

    std::string verdict = "PASS";
    RunReport r;
    FootprintReport fp;
    TimeNs oracle_ns = 0;
    try {
      const NetworkGraph g = build_network(point);
      fp = baseline_footprint(g, assign_algos(g, AlgoMode::PerfOptimal, point.cost), point.cost,
                              point.include_weight_grads);
      oracle_ns = simulate_oracle(g, point.cost).total_ns;
      ResolvedPolicy rp = resolve_policy(point, g);
      if (!rp.decision) {
        verdict = "UNTRAINABLE";
      } else {
        SimOptions opts;
        opts.include_weight_grads = point.include_weight_grads;
        r = simulate(g, *rp.decision, point.cost, point.effective_capacity(), opts);
        verdict = r.verdict();
      }
    } catch (const Error& e) {
      verdict = std::string("ERROR: ") + e.what();
    }
    const bool ok = verdict == "PASS";
    const double slow = ok && oracle_ns > 0 ? double(r.total_ns) / double(oracle_ns) : 0.0;
    const double smax = ok && fp.total_bytes ? 1.0 - double(r.max_mem_bytes) / double(fp.total_bytes) : 0.0;
    const double savg = ok && fp.total_bytes ? 1.0 - double(r.avg_mem_bytes) / double(fp.total_bytes) : 0.0;
    csv << value << ',' << verdict << ',' << (ok ? r.max_mem_bytes : 0) << ','
        << (ok ? r.avg_mem_bytes : 0) << ',' << fp.total_bytes << ',' << smax << ',' << savg << ','
        << (ok ? r.offload_traffic_bytes : 0) << ',' << (ok ? r.total_ns : 0) << ',' << slow << "\n";
    std::ostringstream slow_col;
    if (ok) slow_col << std::fixed << std::setprecision(2) << slow;
    else slow_col << "-";
    std::cout << std::left << std::setw(12) << value << std::setw(14) << (ok ? "PASS" : verdict)
              << std::setw(12) << (ok ? format_bytes(r.max_mem_bytes) : "-") << std::setw(12)
              << (ok ? format_bytes(r.avg_mem_bytes) : "-") << std::setw(12)
              << (ok ? format_bytes(r.offload_traffic_bytes) : "-") << std::setw(12)
              << (ok ? format_seconds(r.total_ns) : "-") << slow_col.str() << "\n";
  }
  if (!a.out_dir.empty()) write_file(a.out_dir, "sweep.csv", csv.str());
  if (a.format == "csv") std::cout << csv.str();
  return kExitOk;
}

int cmd_dump_graph(const CliArgs& a) {
  const ExperimentConfig cfg = make_config(a);
  const NetworkGraph g = build_network(cfg);
  const std::string text = graph_to_json(g).dump(2) + "\n";
  if (!a.out_dir.empty()) write_file(a.out_dir, "graph.json", text);
  else std::cout << text;
  return kExitOk;
}

int cmd_fuzz(const CliArgs& a) {
  const ExperimentConfig cfg = make_config(a);
  const int trials = a.trials;
  const std::uint64_t seed = cfg.seed;
  const FuzzResult r = run_fuzz_campaign(seed, trials);
  std::cout << "fuzz campaign: seed " << seed << ", " << r.trials << " trials, " << r.violations
            << " violations (" << r.failed_trials << " failing trials)\n";
  for (const std::string& s : r.samples) std::cout << "  " << s << "\n";
  return r.violations == 0 ? kExitOk : kExitOom;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layer-wise DNN training memory simulator"};
  app.require_subcommand(1);
  CliArgs args;

  CLI::App* footprint = app.add_subcommand("footprint", "baseline memory accounting");
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run one policy end to end");
  CLI::App* oracle = app.add_subcommand("oracle", "unlimited-memory reference run");
  CLI::App* sweep = app.add_subcommand("sweep", "run a grid of configurations");
  CLI::App* dump = app.add_subcommand("dump-graph", "emit the network as JSON");
  CLI::App* fuzz = app.add_subcommand("fuzz", "randomized invariant campaign");
  for (CLI::App* cmd : {footprint, simulate_cmd, oracle, sweep, dump, fuzz}) {
    add_common_options(cmd, args);
  }
  sweep->add_option("--axis", args.axis, "policy|batch|depth|capacity");
  sweep->add_option("--values", args.values, "comma-separated axis values");
  fuzz->add_option("--trials", args.trials, "number of random trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (footprint->parsed()) return cmd_footprint(args);
    if (simulate_cmd->parsed()) return cmd_simulate(args);
    if (oracle->parsed()) return cmd_oracle(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (dump->parsed()) return cmd_dump_graph(args);
    if (fuzz->parsed()) return cmd_fuzz(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
