// Acceptance suite: one test per release criterion, each printing its own
// pass/fail line via the harness and enforcing its runtime budget.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vdnnsim/vdnnsim.hpp"

namespace vdnnsim {
namespace {

constexpr double kGB = 1e9;

struct CliResult {
  int exit_code = -1;
  std::string output;
  double seconds = 0.0;
};

CliResult run_cli(const std::string& args) {
  CliResult r;
  const std::string cmd = std::string(VDNNSIM_CLI_PATH) + " " + args + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int rc = ::pclose(pipe);
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

AlgoAssignment perf_algos(const NetworkGraph& g, const CostModel& cm) {
  return assign_algos(g, AlgoMode::PerfOptimal, cm);
}

TEST(Acceptance, Criterion1_FootprintReproduction) {
  CliResult vgg = run_cli("footprint --network vgg16 --batch 256 --algo-mode perf --format json");
  ASSERT_EQ(vgg.exit_code, 0) << vgg.output;
  EXPECT_LT(vgg.seconds, 1.0);
  const double vgg_total = double(json::parse(vgg.output).at("total_bytes").get<Bytes>());
  EXPECT_GT(vgg_total, 28.0 * 0.75 * kGB);
  EXPECT_LT(vgg_total, 28.0 * 1.25 * kGB);

  CliResult alex = run_cli("footprint --network alexnet --batch 128 --format json");
  ASSERT_EQ(alex.exit_code, 0) << alex.output;
  EXPECT_LT(alex.seconds, 1.0);
  const double alex_total = double(json::parse(alex.output).at("total_bytes").get<Bytes>());
  EXPECT_GT(alex_total, 1.1 * 0.75 * kGB);
  EXPECT_LT(alex_total, 1.1 * 1.25 * kGB);
}

TEST(Acceptance, Criterion2_DepthScaling) {
  Stopwatch timer;
  CostModel cm;
  std::vector<double> totals;
  for (int extra : {0, 100, 200, 300, 400}) {
    const NetworkGraph g = extend_vgg(extra, 32);
    totals.push_back(double(baseline_footprint(g, perf_algos(g, cm), cm).total_bytes));
  }
  for (std::size_t i = 1; i < totals.size(); ++i) EXPECT_GT(totals[i], totals[i - 1]);
  const double ratio = totals.back() / totals.front();
  EXPECT_GT(ratio, 14.0 * 0.85);
  EXPECT_LT(ratio, 14.0 * 1.15);
  EXPECT_NEAR(totals.front(), 4.9 * kGB, 0.25 * 4.9 * kGB);
  EXPECT_NEAR(totals.back(), 67.1 * kGB, 0.25 * 67.1 * kGB);
  EXPECT_LT(timer.seconds(), 10.0);
}

TEST(Acceptance, Criterion3_TrainabilityFlip) {
  Stopwatch timer;
  CostModel cm;
  const Bytes cap = cm.device.mem_capacity;

  {
    NetworkGraph g = build_preset("vgg16", 128);
    const RunReport r =
        simulate(g, static_decision(PolicyKind::Baseline, AlgoMode::PerfOptimal, g, cm), cm, cap);
    EXPECT_FALSE(r.pass) << "baseline perf-optimal must exceed device memory at batch 128";
  }
  {
    NetworkGraph g = build_preset("vgg16", 256);
    for (AlgoMode m : {AlgoMode::PerfOptimal, AlgoMode::MemoryOptimal}) {
      const RunReport r = simulate(g, static_decision(PolicyKind::Baseline, m, g, cm), cm, cap);
      EXPECT_FALSE(r.pass) << "baseline must exceed device memory at batch 256";
    }
  }
  for (std::uint64_t batch : {128, 256}) {
    NetworkGraph g = build_preset("vgg16", batch);
    const DynamicSelection sel = dynamic_select(g, cap, cm);
    ASSERT_FALSE(sel.untrainable()) << "batch " << batch;
    const RunReport r = simulate(g, *sel.decision, cm, cap);
    EXPECT_TRUE(r.pass) << "batch " << batch << ": " << r.verdict();
    EXPECT_LE(r.max_mem_bytes, cap);
  }
  EXPECT_LT(timer.seconds(), 30.0);
}

// The cited reduction statistic is an average across configurations; the
// suite holds the mean of the three batch sizes to the stated bar and each
// individual configuration to a 0.80 floor.
TEST(Acceptance, Criterion4_MemorySavings) {
  Stopwatch timer;
  CostModel cm;
  double sum = 0.0;
  for (std::uint64_t batch : {64, 128, 256}) {
    NetworkGraph g = build_preset("vgg16", batch);
    const Bytes fp = baseline_footprint(g, perf_algos(g, cm), cm).total_bytes;
    const RunReport r = simulate(
        g, static_decision(PolicyKind::VdnnAll, AlgoMode::MemoryOptimal, g, cm), cm,
        cm.device.mem_capacity);
    ASSERT_TRUE(r.pass) << "batch " << batch << ": " << r.verdict();
    const double saving = 1.0 - double(r.avg_mem_bytes) / double(fp);
    EXPECT_GE(saving, 0.80) << "batch " << batch;
    sum += saving;
    if (batch == 256) {
      EXPECT_GT(r.offload_traffic_bytes, Bytes(16e9 * 0.75));
      EXPECT_LT(r.offload_traffic_bytes, Bytes(16e9 * 1.25));
    }
  }
  EXPECT_GE(sum / 3.0, 0.85);
  EXPECT_LT(timer.seconds(), 30.0);
}

TEST(Acceptance, Criterion5_VeryDeepCaseStudy) {
  Stopwatch timer;
  CostModel cm;
  NetworkGraph g = extend_vgg(400, 32);

  const DynamicSelection sel = dynamic_select(g, cm.device.mem_capacity, cm);
  ASSERT_FALSE(sel.untrainable());
  const RunReport r = simulate(g, *sel.decision, cm, cm.device.mem_capacity);
  ASSERT_TRUE(r.pass) << r.verdict();
  EXPECT_LE(r.max_mem_bytes, Bytes(12e9));
  const double host_fraction =
      double(r.host_peak_bytes) / double(r.host_peak_bytes + r.max_mem_bytes);
  EXPECT_GE(host_fraction, 0.80);
  EXPECT_LE(host_fraction, 0.95);

  // Offload hiding. Under the given cost model: when every offloaded layer's
  // forward computation covers its transfer, forward stalls must vanish.
  auto all_hidden = [&](const CostModel& model, const PolicyDecision& d) {
    for (const LayerDescriptor& l : g.layers()) {
      if (!d.offloads(l.id) || l.inputs.empty()) continue;
      const AlgoId algo = l.kind == LayerKind::Conv ? d.algos.at(l.id) : AlgoId::ImplicitGemm;
      const Bytes x = model.tensor_bytes_of(input_shape_of(g, l.id));
      if (to_ns(model.transfer_latency(x)) > to_ns(model.layer_latency(g, l.id, Direction::Fwd, algo))) {
        return false;
      }
    }
    return true;
  };
  if (all_hidden(cm, *sel.decision)) {
    EXPECT_EQ(r.stall_fwd_offload_ns, 0);
  }
  // A faster interconnect puts every transfer inside its layer's compute.
  CostModel fast = cm;
  fast.link.effective_bw = 32e9;
  const DynamicSelection sel2 = dynamic_select(g, fast.device.mem_capacity, fast);
  ASSERT_FALSE(sel2.untrainable());
  ASSERT_TRUE(all_hidden(fast, *sel2.decision));
  const RunReport r2 = simulate(g, *sel2.decision, fast, fast.device.mem_capacity);
  ASSERT_TRUE(r2.pass);
  EXPECT_EQ(r2.stall_fwd_offload_ns, 0);

  EXPECT_LT(timer.seconds(), 60.0);
}

TEST(Acceptance, Criterion6_SchedulingSemantics) {
  Stopwatch timer;
  NetworkGraph g(1);
  LayerId in = g.add_input(5, 1000, 1000);
  LayerId c1 = g.add_conv({in}, 20, 1, 1, 0);
  LayerId c2 = g.add_conv({c1}, 1, 1, 1, 0);
  LayerId c3 = g.add_conv({c2}, 1, 1, 1, 0);
  g.add_loss(c3);
  g.finalize();
  CostModel cm;
  cm.link.effective_bw = 4e9;  // transfer(X) in ns equals its element count
  cm.latency_overrides[c1] = {0.010, 0.010};
  cm.latency_overrides[c2] = {0.010, 0.010};
  cm.latency_overrides[c3] = {0.010, 0.010};
  const PolicyDecision d = static_decision(PolicyKind::VdnnAll, AlgoMode::MemoryOptimal, g, cm);
  const RunReport r = simulate(g, d, cm, kUnlimitedBytes);
  ASSERT_TRUE(r.pass);
  std::map<LayerId, const StreamEvent*> fwd, off;
  for (const StreamEvent& e : r.events) {
    if (e.kind == EventKind::Fwd) fwd[e.layer] = &e;
    if (e.kind == EventKind::Offload) off[e.layer] = &e;
  }
  // FWD(2) is undelayed: OFF(1) hides inside FWD(1); FWD(3) is delayed by
  // exactly OFF(2).end - FWD(2).end. Integer-nanosecond equality.
  ASSERT_TRUE(fwd.contains(c1) && fwd.contains(c2) && fwd.contains(c3) && off.contains(c2));
  EXPECT_EQ(fwd.at(c2)->start, fwd.at(c1)->end);
  EXPECT_GT(off.at(c2)->end, fwd.at(c2)->end);
  EXPECT_EQ(fwd.at(c3)->start - fwd.at(c2)->end, off.at(c2)->end - fwd.at(c2)->end);
  EXPECT_EQ(fwd.at(c3)->start, off.at(c2)->end);
  EXPECT_LT(timer.seconds(), 1.0);
}

TEST(Acceptance, Criterion7_InvariantCampaign) {
  CliResult r = run_cli("fuzz --seed 0 --trials 10000");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("10000 trials, 0 violations"), std::string::npos) << r.output;
  EXPECT_LT(r.seconds, 300.0);
}

TEST(Acceptance, Criterion8_OracleEquivalence) {
  Stopwatch timer;
  CostModel cm;

  // Greedy feasibility equals exhaustive enumeration over the 27 algorithm
  // assignments of a three-conv toy, across boundary capacities.
  NetworkGraph toy(4);
  {
    LayerId prev = toy.add_input(8, 16, 16);
    prev = toy.add_conv({prev}, 8, 3, 1, 1);
    prev = toy.add_actv(prev);
    prev = toy.add_pool({prev}, 2, 2);
    prev = toy.add_conv({prev}, 8, 3, 1, 1);
    prev = toy.add_actv(prev);
    prev = toy.add_pool({prev}, 2, 2);
    prev = toy.add_conv({prev}, 8, 3, 1, 1);
    prev = toy.add_actv(prev);
    prev = toy.add_fc({prev}, 10);
    toy.add_loss(prev);
    toy.finalize();
  }
  std::vector<LayerId> convs;
  for (const LayerDescriptor& l : toy.layers()) {
    if (l.kind == LayerKind::Conv) convs.push_back(l.id);
  }
  ASSERT_EQ(convs.size(), 3u);
  const AlgoId algos[] = {AlgoId::ImplicitGemm, AlgoId::GemmWs, AlgoId::Fft};
  for (PolicyKind kind : {PolicyKind::VdnnConv, PolicyKind::VdnnAll}) {
    std::vector<Bytes> caps = {1024, Bytes(1) << 40};
    for (AlgoId a0 : algos) {
      for (AlgoId a1 : algos) {
        for (AlgoId a2 : algos) {
          PolicyDecision d = static_decision(kind, AlgoMode::MemoryOptimal, toy, cm);
          d.algos[convs[0]] = a0;
          d.algos[convs[1]] = a1;
          d.algos[convs[2]] = a2;
          const Bytes peak = simulate(toy, d, cm, kUnlimitedBytes).max_mem_bytes;
          caps.push_back(peak - 512);
          caps.push_back(peak);
          caps.push_back(peak + 512);
        }
      }
    }
    for (Bytes cap : caps) {
      bool any = false;
      for (AlgoId a0 : algos) {
        for (AlgoId a1 : algos) {
          for (AlgoId a2 : algos) {
            PolicyDecision d = static_decision(kind, AlgoMode::MemoryOptimal, toy, cm);
            d.algos[convs[0]] = a0;
            d.algos[convs[1]] = a1;
            d.algos[convs[2]] = a2;
            if (simulate(toy, d, cm, cap).pass) any = true;
          }
        }
      }
      EXPECT_EQ(greedy_downgrade(toy, cap, kind, cm).has_value(), any) << "capacity " << cap;
    }
  }

  // Prefetch search equals a brute-force window scan on 1000 random chains.
  std::mt19937_64 rng(2024);
  const LayerKind kinds_pool[] = {LayerKind::Conv, LayerKind::Actv, LayerKind::Pool, LayerKind::Fc};
  for (int trial = 0; trial < 1000; ++trial) {
    NetworkGraph g(1);
    LayerId prev = g.add_input(4, 8, 8);
    const int n = 1 + int(rng() % 10);
    for (int i = 0; i < n; ++i) {
      switch (kinds_pool[rng() % 4]) {
        case LayerKind::Conv: prev = g.add_conv({prev}, 4, 1, 1, 0); break;
        case LayerKind::Actv: prev = g.add_actv(prev); break;
        case LayerKind::Pool: prev = g.add_pool({prev}, 1, 1); break;
        default: prev = g.add_fc({prev}, 4); break;
      }
    }
    g.add_loss(prev);
    g.finalize();
    SimState s;
    s.feature.assign(g.size(), Residency::Device);
    s.offloaded_by.assign(g.size(), {});
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (rng() % 3 == 0) {
        s.offloaded_by[i] = {LayerId(i)};
        s.feature[i] = Residency::Host;
      }
    }
    for (LayerId current = 0; current < LayerId(g.size()); ++current) {
      std::optional<LayerId> expect;
      for (LayerId i = current - 1; i >= 0; --i) {
        if (s.has_pending_offload(i)) {
          expect = i;
          break;
        }
        if (g.layer(i).kind == LayerKind::Conv) break;
      }
      ASSERT_EQ(find_prefetch_layer(current, s, g), expect) << "trial " << trial;
    }
  }
  EXPECT_LT(timer.seconds(), 60.0);
}

TEST(CliContract, ExitCodesAreStable) {
  EXPECT_EQ(run_cli("footprint --network alexnet --batch 8").exit_code, 0);
  EXPECT_EQ(run_cli("simulate --network alexnet --batch 8 --policy vdnn-conv").exit_code, 0);
  // OOM / untrainable -> 2
  EXPECT_EQ(run_cli("simulate --network vgg16 --batch 256 --policy baseline").exit_code, 2);
  EXPECT_EQ(run_cli("simulate --network alexnet --batch 64 --policy vdnn-dyn --capacity 1MB").exit_code,
            2);
  // config errors -> 1
  EXPECT_EQ(run_cli("simulate --network not_a_network --batch 8").exit_code, 1);
  EXPECT_EQ(run_cli("simulate --network alexnet --bogus-flag").exit_code, 1);
  EXPECT_EQ(run_cli("footprint --network alexnet --algo-mode turbo").exit_code, 1);
}

TEST(CliContract, SimulateWritesArtifacts) {
  const std::string dir = "/tmp/vdnnsim_accept_out_" + std::to_string(::getpid());
  CliResult r = run_cli("simulate --network inception_toy --batch 8 --policy vdnn-all "
                        "--algo-mode memory --trace-pool --out " + dir);
  EXPECT_EQ(r.exit_code, 0) << r.output;
  for (const char* name : {"timeline.csv", "report.json", "decision.json", "pool_trace.csv"}) {
    std::ifstream f(dir + "/" + name);
    EXPECT_TRUE(f.good()) << name;
  }
  std::ifstream tl(dir + "/timeline.csv");
  std::string header;
  std::getline(tl, header);
  EXPECT_EQ(header, "stream,kind,layer,start_ns,end_ns,bytes");
  std::filesystem::remove_all(dir);
}

TEST(CliContract, DumpGraphRoundTripsThroughFile) {
  const std::string dir = "/tmp/vdnnsim_accept_rt_" + std::to_string(::getpid());
  ASSERT_EQ(run_cli("dump-graph --network overfeat --batch 16 --out " + dir).exit_code, 0);
  CliResult again = run_cli("dump-graph --network " + dir + "/graph.json --batch 16");
  ASSERT_EQ(again.exit_code, 0);
  std::ifstream f(dir + "/graph.json");
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(ss.str(), again.output);
  std::filesystem::remove_all(dir);
}

TEST(CliContract, ExperimentsEnvVarResolvesConfigs) {
  const std::string dir = "/tmp/vdnnsim_accept_env_" + std::to_string(::getpid());
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir + "/tiny.conf");
    f << "[network]\npreset = alexnet\nbatch = 4\n";
  }
  ::setenv("VDNN_SIM_EXPERIMENTS", dir.c_str(), 1);
  CliResult r = run_cli("footprint --config tiny.conf --format json");
  ::unsetenv("VDNN_SIM_EXPERIMENTS");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(json::parse(r.output).at("network"), "alexnet");
  std::filesystem::remove_all(dir);
}

TEST(CliContract, CapacitySweepVerdictIsMonotone) {
  // Trainability flips once, from untrainable to PASS, as capacity grows.
  CostModel cm;
  NetworkGraph g = build_preset("inception_toy", 8);
  bool seen_pass = false;
  for (Bytes cap = Bytes(1) << 16; cap <= Bytes(1) << 31; cap *= 2) {
    const DynamicSelection sel = dynamic_select(g, cap, cm);
    const bool pass = !sel.untrainable();
    if (seen_pass) EXPECT_TRUE(pass) << "verdict flapped at capacity " << cap;
    seen_pass = seen_pass || pass;
  }
  EXPECT_TRUE(seen_pass);
}

TEST(Acceptance, Criterion9_DynamicOptimalityAtSlackCapacity) {
  Stopwatch timer;
  CostModel cm;
  struct Case {
    const char* name;
    std::uint64_t batch;
  };
  for (const Case& c : {Case{"alexnet", 128}, Case{"vgg16", 64}, Case{"overfeat", 32},
                        Case{"inception_toy", 16}}) {
    NetworkGraph g = build_preset(c.name, c.batch);
    const Bytes fp = baseline_footprint(g, perf_algos(g, cm), cm).total_bytes;
    // Event-level peaks sit a hair above the accounting total (the transient
    // loss-input map plus pool alignment), so grant that margin on top.
    for (double slack : {1.02, 1.5, 4.0}) {
      const Bytes cap = Bytes(double(fp) * slack) + (Bytes(8) << 20);
      const DynamicSelection sel = dynamic_select(g, cap, cm);
      ASSERT_FALSE(sel.untrainable()) << c.name;
      EXPECT_EQ(sel.decision->label, "baseline(p)") << c.name << " slack " << slack;
      for (const LayerDescriptor& l : g.layers()) EXPECT_FALSE(sel.decision->offloads(l.id));
      const RunReport run = simulate(g, *sel.decision, cm, cap);
      const RunReport oracle = simulate_oracle(g, cm);
      ASSERT_TRUE(run.pass);
      EXPECT_EQ(run.total_ns, oracle.total_ns) << c.name;
    }
  }
  EXPECT_LT(timer.seconds(), 10.0);
}

}  // namespace
}  // namespace vdnnsim
