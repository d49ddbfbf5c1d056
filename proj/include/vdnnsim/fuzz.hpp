#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vdnnsim/policy.hpp"
#include "vdnnsim/replay.hpp"
#include "vdnnsim/simulator.hpp"

namespace vdnnsim {

struct FuzzResult {
  int trials = 0;
  int failed_trials = 0;
  int violations = 0;
  std::vector<std::string> samples;  // first few violation descriptions
};

namespace fuzzdetail {

// Structured random graphs: a linear spine with occasional fork/join motifs,
// capped at `max_layers` layers, always closed by a loss layer.
inline NetworkGraph random_graph(std::mt19937_64& rng, int max_layers = 12) {
  const std::uint64_t batch = 1 + rng() % 4;
  NetworkGraph g(batch);
  const std::uint64_t dims[] = {4, 8, 16};
  std::uint64_t h = dims[rng() % 3];
  LayerId prev = g.add_input(1 + rng() % 4, h, h);
  bool fc_seen = false;
  while (g.size() + 1 < std::size_t(max_layers)) {
    const std::size_t budget = std::size_t(max_layers) - g.size() - 1;
    const int pick = int(rng() % 10);
    if (fc_seen || pick < 1) {
      prev = g.add_fc({prev}, 1 + rng() % 16);
      fc_seen = true;
      if (rng() % 2 == 0 && g.size() + 1 < std::size_t(max_layers)) prev = g.add_actv(prev);
      if (rng() % 2 == 0) break;
      continue;
    }
    if (pick < 4) {
      const std::uint64_t k = rng() % 2 == 0 ? 1 : 3;
      prev = g.add_conv({prev}, 1 + rng() % 8, k, 1, k / 2);
    } else if (pick < 6) {
      prev = g.add_actv(prev);
    } else if (pick < 8 && h >= 4 && h % 2 == 0) {
      prev = g.add_pool({prev}, 2, 2);
      h /= 2;
    } else if (budget >= 3) {
      // fork/join: two single-layer branches rejoined by a concat conv
      LayerId a = g.add_conv({prev}, 1 + rng() % 4, 1, 1, 0);
      LayerId b = rng() % 2 == 0 ? g.add_actv(prev) : g.add_conv({prev}, 1 + rng() % 4, 3, 1, 1);
      prev = g.add_conv({a, b}, 1 + rng() % 8, 1, 1, 0, JoinRule::Concat);
    } else {
      prev = g.add_actv(prev);
    }
  }
  g.add_loss(prev);
  g.finalize();
  return g;
}

inline PolicyDecision random_decision(std::mt19937_64& rng, const NetworkGraph& g,
                                      const CostModel& cm) {
  PolicyDecision d;
  d.label = "fuzz-random";
  d.gradient_scheme = GradientScheme::PerLayer;
  d.offload.assign(g.size(), 0);
  for (const LayerDescriptor& l : g.layers()) {
    if (offload_eligible(l.kind) && rng() % 2 == 0) d.offload[std::size_t(l.id)] = 1;
    if (l.kind == LayerKind::Conv) {
      switch (rng() % 3) {
        case 0: d.algos[l.id] = AlgoId::ImplicitGemm; break;
        case 1: d.algos[l.id] = AlgoId::GemmWs; break;
        default: d.algos[l.id] = cm.fft_applicable(g, l.id) ? AlgoId::Fft : AlgoId::GemmWs; break;
      }
    }
  }
  return d;
}

}  // namespace fuzzdetail

// Randomized invariant campaign: random graphs x random capacities x the four
// policies plus fully random decisions; every produced report must replay
// cleanly and the pool must stay conserved (the pool throws on violation).
inline FuzzResult run_fuzz_campaign(std::uint64_t seed, int trials, int max_layers = 12) {
  std::mt19937_64 rng(seed);
  CostModel cm;
  FuzzResult result;
  auto note = [&result](const std::string& line) {
    ++result.violations;
    if (result.samples.size() < 16) result.samples.push_back(line);
  };

  for (int trial = 0; trial < trials; ++trial) {
    ++result.trials;
    const NetworkGraph g = fuzzdetail::random_graph(rng, max_layers);
    const Bytes fp = baseline_footprint(g, assign_algos(g, AlgoMode::PerfOptimal, cm), cm).total_bytes;
    const Bytes lo = 4096;
    const Bytes hi = std::max<Bytes>(2 * fp + 8192, lo + 1);
    const double u = double(rng() % 1000000) / 1000000.0;
    const Bytes capacity = Bytes(double(lo) * std::pow(double(hi) / double(lo), u));

    std::vector<std::pair<PolicyDecision, bool>> runs;  // (decision, expected-valid)
    const int mode = int(rng() % 5);
    bool bad_trial = false;
    try {
      switch (mode) {
        case 0:
          runs.push_back({static_decision(PolicyKind::Baseline,
                                          rng() % 2 ? AlgoMode::PerfOptimal : AlgoMode::MemoryOptimal,
                                          g, cm),
                          true});
          break;
        case 1:
          runs.push_back({static_decision(PolicyKind::VdnnAll,
                                          rng() % 2 ? AlgoMode::PerfOptimal : AlgoMode::MemoryOptimal,
                                          g, cm),
                          true});
          break;
        case 2:
          runs.push_back({static_decision(PolicyKind::VdnnConv,
                                          rng() % 2 ? AlgoMode::PerfOptimal : AlgoMode::MemoryOptimal,
                                          g, cm),
                          true});
          break;
        case 3: {
          const DynamicSelection sel = dynamic_select(g, capacity, cm);
          if (sel.decision) runs.push_back({*sel.decision, true});
          break;
        }
        default:
          runs.push_back({fuzzdetail::random_decision(rng, g, cm), true});
          break;
      }
      for (const auto& [decision, expected] : runs) {
        const RunReport r = simulate(g, decision, cm, capacity);
        if (mode == 3 && !r.pass) {
          note("trial " + std::to_string(trial) + ": dynamic decision failed to simulate PASS");
          bad_trial = true;
        }
        for (const Violation& v : replay_check(r, g, decision, capacity)) {
          note("trial " + std::to_string(trial) + " [" + decision.label + "]: " + v.kind + ": " +
               v.detail);
          bad_trial = true;
        }
      }
    } catch (const Error& e) {
      note("trial " + std::to_string(trial) + ": exception: " + e.what());
      bad_trial = true;
    }
    if (bad_trial) ++result.failed_trials;
  }
  return result;
}

}  // namespace vdnnsim
