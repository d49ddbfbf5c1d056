#include "vdnnsim/footprint.hpp"

#include <gtest/gtest.h>

#include "vdnnsim/presets.hpp"

namespace vdnnsim {
namespace {

constexpr double kGB = 1e9;

AlgoAssignment all_algos(const NetworkGraph& g, AlgoId a) {
  AlgoAssignment m;
  for (const LayerDescriptor& l : g.layers()) {
    if (l.kind == LayerKind::Conv) m[l.id] = a;
  }
  return m;
}

AlgoAssignment perf_algos(const NetworkGraph& g, const CostModel& cm) {
  AlgoAssignment m;
  for (const LayerDescriptor& l : g.layers()) {
    if (l.kind == LayerKind::Conv) m[l.id] = cm.fastest_algo(g, l.id);
  }
  return m;
}

TEST(TensorBytes, HandValues) {
  EXPECT_EQ(tensor_bytes(TensorShape{64, 64, 224, 224}, 4), Bytes{822083584});
  EXPECT_EQ(tensor_bytes(TensorShape{1, 1, 1, 1}, 4), Bytes{4});
  EXPECT_EQ(tensor_bytes(TensorShape{256, 3, 224, 224}, 4), Bytes{154140672});
}

TEST(TensorBytes, OverflowDetected) {
  TensorShape huge{std::uint64_t(1) << 32, std::uint64_t(1) << 32, 1, 1};
  EXPECT_THROW(tensor_bytes(huge, 4), OverflowError);
}

TEST(Footprint, EmptyGraphIsZero) {
  NetworkGraph g(8);
  LayerId in = g.add_input(3, 16, 16);
  g.add_loss(in);
  g.finalize();
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, {}, cm);
  EXPECT_EQ(r.weights_bytes, 0u);
  EXPECT_EQ(r.feature_maps_bytes, 0u);
  EXPECT_EQ(r.gradient_buffers_bytes, 0u);
  EXPECT_EQ(r.workspace_bytes, 0u);
  EXPECT_EQ(r.total_bytes, 0u);
}

TEST(Footprint, Vgg16Batch256TotalInRange) {
  NetworkGraph g = build_preset("vgg16", 256);
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, perf_algos(g, cm), cm);
  EXPECT_GT(r.total_bytes, 21.0 * kGB);
  EXPECT_LT(r.total_bytes, 35.0 * kGB);
  EXPECT_GT(r.feature_extraction_fraction(), 0.8);
}

TEST(Footprint, AlexnetBatch128TotalInRange) {
  NetworkGraph g = build_preset("alexnet", 128);
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, perf_algos(g, cm), cm);
  EXPECT_GT(r.total_bytes, 0.825 * kGB);
  EXPECT_LT(r.total_bytes, 1.375 * kGB);
  EXPECT_GT(r.feature_extraction_fraction(), 0.8);
}

TEST(Footprint, ComponentsSumToTotal) {
  for (const char* name : {"alexnet", "overfeat", "vgg16", "inception_toy"}) {
    NetworkGraph g = build_preset(name, 16);
    CostModel cm;
    const FootprintReport r = baseline_footprint(g, all_algos(g, AlgoId::Fft), cm);
    EXPECT_EQ(r.total_bytes,
              r.weights_bytes + r.feature_maps_bytes + r.gradient_buffers_bytes + r.workspace_bytes)
        << name;
  }
}

TEST(Footprint, GradientBuffersAreTwiceMaxMap) {
  NetworkGraph g = build_preset("vgg16", 64);
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, {}, cm);
  // Largest gradient map in VGG-16: a 64-channel 224x224 batch-sized tensor.
  EXPECT_EQ(r.gradient_buffers_bytes, 2 * tensor_bytes(TensorShape{64, 64, 224, 224}, 4));
}

TEST(Footprint, MemoryOptimalHasNoWorkspace) {
  NetworkGraph g = build_preset("vgg16", 64);
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, all_algos(g, AlgoId::ImplicitGemm), cm);
  EXPECT_EQ(r.workspace_bytes, 0u);
}

TEST(Footprint, WeightGradFlagDoublesWeights) {
  NetworkGraph g = build_preset("alexnet", 8);
  CostModel cm;
  const FootprintReport a = baseline_footprint(g, {}, cm, false);
  const FootprintReport b = baseline_footprint(g, {}, cm, true);
  EXPECT_EQ(b.weights_bytes, 2 * a.weights_bytes);
}

// Accounting linearity against a brute-force enumeration of live tensors on a
// hand-built graph: input -> conv -> actv -> pool -> fc -> loss, batch 2.
TEST(Footprint, HandGraphEnumeration) {
  NetworkGraph g(2);
  LayerId in = g.add_input(3, 8, 8);          // 2*3*8*8*4    = 1536 B
  LayerId c = g.add_conv({in}, 4, 3, 1, 1);   // 2*4*8*8*4    = 2048 B
  LayerId a = g.add_actv(c);                  // aliases conv
  LayerId p = g.add_pool({a}, 2, 2);          // 2*4*4*4*4    = 512 B
  LayerId f = g.add_fc({p}, 10);              // 2*10*4       = 80 B, feeds loss only
  g.add_loss(f);
  g.finalize();
  CostModel cm;
  const FootprintReport r = baseline_footprint(g, {}, cm);
  EXPECT_EQ(r.feature_maps_bytes, Bytes{1536 + 2048 + 512});
  // weights: conv 9*3*4*4 = 432; fc (64+1)*10*4 = 2600
  EXPECT_EQ(r.weights_bytes, Bytes{432 + 2600});
  // gradient maps: dX(conv)=none (input data), dX(pool)=2048, dX(actv)=alias,
  // dX(fc)=512, dX(loss)=80 -> max 2048, doubled.
  EXPECT_EQ(r.gradient_buffers_bytes, Bytes{2 * 2048});
  EXPECT_EQ(r.total_bytes, r.weights_bytes + r.feature_maps_bytes + r.gradient_buffers_bytes);
}

TEST(Footprint, DepthSweepScaling) {
  CostModel cm;
  std::vector<double> totals;
  for (int extra : {0, 100, 200, 300, 400}) {
    NetworkGraph g = extend_vgg(extra, 32);
    totals.push_back(double(baseline_footprint(g, perf_algos(g, cm), cm).total_bytes));
  }
  for (std::size_t i = 1; i < totals.size(); ++i) EXPECT_GT(totals[i], totals[i - 1]);
  const double ratio = totals.back() / totals.front();
  EXPECT_GT(ratio, 14.0 * 0.85);
  EXPECT_LT(ratio, 14.0 * 1.15);
  EXPECT_NEAR(totals.front(), 4.9 * kGB, 0.25 * 4.9 * kGB);
  EXPECT_NEAR(totals.back(), 67.1 * kGB, 0.25 * 67.1 * kGB);
}

}  // namespace
}  // namespace vdnnsim
