#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vdnnsim/config.hpp"
#include "vdnnsim/fuzz.hpp"
#include "vdnnsim/presets.hpp"
#include "vdnnsim/report.hpp"
#include "vdnnsim/simulator.hpp"

namespace vdnnsim {
namespace {

class TempFile {
 public:
  explicit TempFile(const std::string& content, const std::string& suffix = ".conf") {
    static int counter = 0;
    path_ = "/tmp/vdnnsim_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++) + suffix;
    std::ofstream out(path_);
    out << content;
  }
  ~TempFile() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

TEST(ParseBytes, SuffixesAndScientific) {
  EXPECT_EQ(parse_bytes("1024"), 1024u);
  EXPECT_EQ(parse_bytes("12GB"), Bytes(12e9));
  EXPECT_EQ(parse_bytes("12GiB"), Bytes(12884901888ull));
  EXPECT_EQ(parse_bytes("1.5MB"), Bytes(1500000));
  EXPECT_EQ(parse_bytes("4KiB"), 4096u);
  EXPECT_EQ(parse_bytes("2e9"), Bytes(2000000000));
  EXPECT_EQ(parse_bytes("unlimited"), kUnlimitedBytes);
  EXPECT_THROW(parse_bytes("twelve"), ConfigError);
}

TEST(Config, LoadsSectionsAndOverrides) {
  TempFile f(R"(
# reproduction config
[network]
preset = vgg16
batch = 128

[device]
preset = titanx
compute_efficiency = 0.4

[link]
effective_bw = 10GB
nominal_bw = 16GB

[policy]
policy = vdnn-conv
algo_mode = memory
capacity = 8GiB
)");
  const ExperimentConfig cfg = load_config(f.path());
  EXPECT_EQ(cfg.network, "vgg16");
  EXPECT_EQ(cfg.batch, 128u);
  EXPECT_DOUBLE_EQ(cfg.cost.device.compute_efficiency, 0.4);
  EXPECT_DOUBLE_EQ(cfg.cost.link.effective_bw, 10e9);
  EXPECT_EQ(cfg.policy, "vdnn-conv");
  EXPECT_EQ(cfg.algo_mode, AlgoMode::MemoryOptimal);
  EXPECT_EQ(cfg.effective_capacity(), Bytes(8) << 30);
}

TEST(Config, RejectsUnknownKeys) {
  TempFile f("[network]\npreset = vgg16\nbogus = 1\n");
  EXPECT_THROW(load_config(f.path()), ConfigError);
  TempFile g("[nonsense]\nx = 1\n");
  EXPECT_THROW(load_config(g.path()), ConfigError);
}

TEST(Config, InlineLayerNetwork) {
  TempFile f(R"(
[network]
batch = 2
layer0 = input c=3 h=8 w=8
layer1 = conv inputs=0 out=4 k=3 s=1 p=1
layer2 = actv inputs=1
layer3 = conv inputs=0 out=4 k=1 s=1 p=0
layer4 = conv inputs=2,3 join=concat out=8 k=1 s=1 p=0
layer5 = loss inputs=4
)");
  const ExperimentConfig cfg = load_config(f.path());
  EXPECT_EQ(cfg.network, "custom");
  const NetworkGraph g = build_network(cfg);
  EXPECT_EQ(g.size(), 6u);
  EXPECT_EQ(g.shape(4).c, 8u);
  EXPECT_EQ(input_shape_of(g, 4).c, 8u);  // 4 + 4 concat
}

TEST(Config, LatencyOverrideSection) {
  TempFile f(R"(
[network]
preset = alexnet
batch = 4
[latencies]
1 = 0.010 0.020
)");
  const ExperimentConfig cfg = load_config(f.path());
  const NetworkGraph g = build_network(cfg);
  EXPECT_DOUBLE_EQ(cfg.cost.layer_latency(g, 1, Direction::Fwd, AlgoId::Fft), 0.010);
  EXPECT_DOUBLE_EQ(cfg.cost.layer_latency(g, 1, Direction::Bwd, AlgoId::Fft), 0.020);
}

TEST(Config, VggDepthNames) {
  ExperimentConfig cfg;
  cfg.batch = 2;
  cfg.network = "vgg116";
  EXPECT_EQ(build_network(cfg).count_kind(LayerKind::Conv), 116u);
  cfg.network = "vgg416";
  EXPECT_EQ(build_network(cfg).count_kind(LayerKind::Conv), 416u);
  cfg.network = "nope";
  EXPECT_THROW(build_network(cfg), UnknownPreset);
}

TEST(GraphJson, RoundTripsLosslessly) {
  for (const char* name : {"alexnet", "overfeat", "vgg16", "inception_toy"}) {
    NetworkGraph g = build_preset(name, 8);
    NetworkGraph h = graph_from_json(graph_to_json(g));
    EXPECT_TRUE(g.same_structure(h)) << name;
    EXPECT_EQ(graph_to_json(g).dump(), graph_to_json(h).dump()) << name;
  }
}

TEST(DecisionJson, RoundTripsLosslessly) {
  NetworkGraph g = build_preset("alexnet", 8);
  CostModel cm;
  for (PolicyKind k : {PolicyKind::Baseline, PolicyKind::VdnnAll, PolicyKind::VdnnConv}) {
    PolicyDecision d = static_decision(k, AlgoMode::PerfOptimal, g, cm);
    PolicyDecision e = decision_from_json(decision_to_json(d), g);
    EXPECT_EQ(d.offload, e.offload);
    EXPECT_EQ(d.algos, e.algos);
    EXPECT_EQ(d.gradient_scheme, e.gradient_scheme);
    EXPECT_EQ(d.label, e.label);
  }
}

TEST(DecisionJson, RejectsUnknownLayer) {
  NetworkGraph g = build_preset("alexnet", 8);
  json j;
  j["offload_layers"] = {999};
  j["algorithms"] = json::object();
  EXPECT_THROW(decision_from_json(j, g), Error);
}

TEST(EventsCsv, HasSixDocumentedColumns) {
  NetworkGraph g = build_preset("inception_toy", 2);
  CostModel cm;
  PolicyDecision d = static_decision(PolicyKind::VdnnAll, AlgoMode::MemoryOptimal, g, cm);
  const RunReport r = simulate(g, d, cm, kUnlimitedBytes);
  const std::string csv = events_csv(r);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "stream,kind,layer,start_ns,end_ns,bytes");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
    ++rows;
  }
  EXPECT_EQ(rows, r.events.size());
}

TEST(ReportJson, CarriesVerdictAndTotals) {
  NetworkGraph g = build_preset("alexnet", 4);
  CostModel cm;
  PolicyDecision d = static_decision(PolicyKind::VdnnConv, AlgoMode::PerfOptimal, g, cm);
  const RunReport r = simulate(g, d, cm, kUnlimitedBytes);
  const json j = report_to_json(r);
  EXPECT_EQ(j.at("verdict"), "PASS");
  EXPECT_EQ(j.at("max_mem_bytes").get<Bytes>(), r.max_mem_bytes);
  EXPECT_EQ(j.at("events").size(), r.events.size());
  const json compact = report_to_json(r, false);
  EXPECT_FALSE(compact.contains("events"));
}

TEST(PoolTraceCsv, MatchesDocumentedSchema) {
  NetworkGraph g = build_preset("alexnet", 4);
  CostModel cm;
  PolicyDecision d = static_decision(PolicyKind::VdnnAll, AlgoMode::MemoryOptimal, g, cm);
  std::vector<PoolTraceRow> trace;
  simulate_with_trace(g, d, cm, kUnlimitedBytes, trace);
  const std::string csv = pool_trace_csv(trace);
  std::istringstream is(csv);
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "time_ns,op,tag,offset,bytes,current,high_water");
}

TEST(Fuzz, SmallCampaignIsClean) {
  const FuzzResult r = run_fuzz_campaign(7, 500);
  EXPECT_EQ(r.trials, 500);
  EXPECT_EQ(r.violations, 0) << (r.samples.empty() ? "" : r.samples[0]);
}

TEST(Fuzz, GraphsStayWithinLayerBudgetAndParse) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const NetworkGraph g = fuzzdetail::random_graph(rng, 12);
    EXPECT_LE(g.size(), 12u);
    EXPECT_EQ(g.layer(LayerId(g.size() - 1)).kind, LayerKind::Loss);
    // round-trip through the dump format as a structural check
    EXPECT_TRUE(g.same_structure(graph_from_json(graph_to_json(g))));
  }
}

}  // namespace
}  // namespace vdnnsim
