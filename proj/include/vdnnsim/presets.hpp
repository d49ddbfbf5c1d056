#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "vdnnsim/net_graph.hpp"

namespace vdnnsim {

namespace detail {

// VGG-style feature extraction: five groups of 3x3 s1 p1 convolutions (each
// followed by an in-place activation), separated by 2x2 s2 pooling.
inline LayerId vgg_feature_layers(NetworkGraph& g, LayerId prev,
                                  const std::vector<std::pair<std::uint64_t, int>>& groups) {
  for (const auto& [channels, convs] : groups) {
    for (int i = 0; i < convs; ++i) {
      prev = g.add_conv({prev}, channels, 3, 1, 1);
      prev = g.add_actv(prev);
    }
    prev = g.add_pool({prev}, 2, 2);
  }
  return prev;
}

inline NetworkGraph vgg_variant(int extra_convs_per_group, std::uint64_t batch) {
  NetworkGraph g(batch);
  LayerId prev = g.add_input(3, 224, 224);
  const std::vector<std::pair<std::uint64_t, int>> base = {
      {64, 2}, {128, 2}, {256, 4}, {512, 4}, {512, 4}};
  std::vector<std::pair<std::uint64_t, int>> groups;
  for (const auto& [ch, n] : base) groups.emplace_back(ch, n + extra_convs_per_group);
  prev = vgg_feature_layers(g, prev, groups);
  prev = g.add_fc({prev}, 4096);
  prev = g.add_actv(prev);
  prev = g.add_fc({prev}, 4096);
  prev = g.add_actv(prev);
  prev = g.add_fc({prev}, 1000);
  g.add_loss(prev);
  g.finalize();
  return g;
}

// Caffe-style single-tower AlexNet geometry (227x227 input keeps the stride-4
// first convolution on exact arithmetic). Matches the 5 CONV + 2 FC layout.
inline NetworkGraph alexnet(std::uint64_t batch) {
  NetworkGraph g(batch);
  LayerId prev = g.add_input(3, 227, 227);
  prev = g.add_conv({prev}, 64, 11, 4, 0);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 3, 2);
  prev = g.add_conv({prev}, 192, 5, 1, 2);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 3, 2);
  prev = g.add_conv({prev}, 384, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_conv({prev}, 256, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_conv({prev}, 256, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 3, 2);
  prev = g.add_fc({prev}, 4096);
  prev = g.add_actv(prev);
  prev = g.add_fc({prev}, 1000);
  g.add_loss(prev);
  g.finalize();
  return g;
}

// OverFeat "fast" variant.
inline NetworkGraph overfeat(std::uint64_t batch) {
  NetworkGraph g(batch);
  LayerId prev = g.add_input(3, 231, 231);
  prev = g.add_conv({prev}, 96, 11, 4, 0);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 2, 2);
  prev = g.add_conv({prev}, 256, 5, 1, 0);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 2, 2);
  prev = g.add_conv({prev}, 512, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_conv({prev}, 1024, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_conv({prev}, 1024, 3, 1, 1);
  prev = g.add_actv(prev);
  prev = g.add_pool({prev}, 2, 2);
  prev = g.add_fc({prev}, 3072);
  prev = g.add_actv(prev);
  prev = g.add_fc({prev}, 4096);
  prev = g.add_actv(prev);
  prev = g.add_fc({prev}, 1000);
  g.add_loss(prev);
  g.finalize();
  return g;
}

// Small fork/join surrogate for dependency-tracking tests: one stem whose
// activation feeds three branches, rejoined by a channel-concat convolution.
inline NetworkGraph inception_toy(std::uint64_t batch) {
  NetworkGraph g(batch);
  LayerId prev = g.add_input(3, 32, 32);
  prev = g.add_conv({prev}, 64, 3, 1, 1);
  const LayerId fork = g.add_actv(prev);
  LayerId a = g.add_conv({fork}, 32, 1, 1, 0);
  a = g.add_actv(a);
  LayerId b = g.add_conv({fork}, 32, 3, 1, 1);
  b = g.add_actv(b);
  LayerId c = g.add_conv({fork}, 16, 5, 1, 2);
  c = g.add_actv(c);
  LayerId join = g.add_conv({a, b, c}, 64, 3, 1, 1, JoinRule::Concat);
  join = g.add_actv(join);
  join = g.add_pool({join}, 2, 2);
  join = g.add_fc({join}, 10);
  g.add_loss(join);
  g.finalize();
  return g;
}

}  // namespace detail

inline NetworkGraph build_preset(std::string_view name, std::uint64_t batch) {
  if (batch < 1) throw Error("batch must be >= 1");
  if (name == "vgg16") return detail::vgg_variant(0, batch);
  if (name == "alexnet") return detail::alexnet(batch);
  if (name == "overfeat") return detail::overfeat(batch);
  if (name == "inception_toy") return detail::inception_toy(batch);
  throw UnknownPreset("unknown network preset: " + std::string(name));
}

// VGG-16 deepened by `extra_conv_layers` convolutions, spread as
// extra/5 additional 3x3 convolutions per group (same group channel count),
// each followed by an activation; pool positions are preserved.
inline NetworkGraph extend_vgg(int extra_conv_layers, std::uint64_t batch) {
  if (extra_conv_layers < 0 || extra_conv_layers % 100 != 0) {
    throw InvalidDepth("extra conv layers must be a non-negative multiple of 100 (20 per group)");
  }
  return detail::vgg_variant(extra_conv_layers / 5, batch);
}

}  // namespace vdnnsim
