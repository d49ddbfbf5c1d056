#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vdnnsim/core.hpp"

namespace vdnnsim {

// NCHW feature-map geometry. Gradient maps share the shape of the feature
// maps they correspond to.
struct TensorShape {
  std::uint64_t n = 1;  // batch size (images)
  std::uint64_t c = 1;  // channels
  std::uint64_t h = 1;  // height (pixels)
  std::uint64_t w = 1;  // width (pixels)

  std::uint64_t elements() const {
    Bytes e = checked_mul(n, c, "TensorShape");
    e = checked_mul(e, h, "TensorShape");
    return checked_mul(e, w, "TensorShape");
  }

  bool operator==(const TensorShape&) const = default;
};

enum class LayerKind { Input, Conv, Actv, Pool, Fc, Loss };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::Actv: return "actv";
    case LayerKind::Pool: return "pool";
    case LayerKind::Fc: return "fc";
    case LayerKind::Loss: return "loss";
  }
  return "?";
}

inline LayerKind layer_kind_from(std::string_view s) {
  if (s == "input") return LayerKind::Input;
  if (s == "conv") return LayerKind::Conv;
  if (s == "actv") return LayerKind::Actv;
  if (s == "pool") return LayerKind::Pool;
  if (s == "fc") return LayerKind::Fc;
  if (s == "loss") return LayerKind::Loss;
  throw ConfigError("unknown layer kind: " + std::string(s));
}

struct ConvParams {
  std::uint64_t kernel = 1;
  std::uint64_t stride = 1;
  std::uint64_t pad = 0;
  std::uint64_t out_channels = 1;
  bool operator==(const ConvParams&) const = default;
};

struct PoolParams {
  std::uint64_t window = 2;
  std::uint64_t stride = 2;
  bool operator==(const PoolParams&) const = default;
};

struct FcParams {
  std::uint64_t out_features = 1;
  bool operator==(const FcParams&) const = default;
};

struct InputParams {
  std::uint64_t c = 1;
  std::uint64_t h = 1;
  std::uint64_t w = 1;
  bool operator==(const InputParams&) const = default;
};

// How a multi-input layer combines its inputs: channel concatenation
// (inception-style) or elementwise combination of identical shapes.
enum class JoinRule { Concat, Elementwise };

struct LayerDescriptor {
  LayerId id = 0;
  LayerKind kind = LayerKind::Input;
  std::vector<LayerId> inputs;
  JoinRule join = JoinRule::Concat;  // meaningful only when inputs.size() > 1
  std::optional<ConvParams> conv;
  std::optional<PoolParams> pool;
  std::optional<FcParams> fc;
  std::optional<InputParams> input;

  bool operator==(const LayerDescriptor&) const = default;
};

// Directed acyclic producer/consumer graph of layers. Layers are stored in
// topological order: every layer's inputs have smaller ids, so the storage
// order is the forward traversal order and its reverse is the backward order.
class NetworkGraph {
 public:
  NetworkGraph() = default;
  explicit NetworkGraph(std::uint64_t batch) : batch_(batch) {}

  std::uint64_t batch() const { return batch_; }
  void set_batch(std::uint64_t b) { batch_ = b; }

  LayerId add_layer(LayerDescriptor d) {
    d.id = static_cast<LayerId>(layers_.size());
    layers_.push_back(std::move(d));
    return layers_.back().id;
  }

  LayerId add_input(std::uint64_t c, std::uint64_t h, std::uint64_t w) {
    LayerDescriptor d;
    d.kind = LayerKind::Input;
    d.input = InputParams{c, h, w};
    return add_layer(std::move(d));
  }

  LayerId add_conv(std::vector<LayerId> inputs, std::uint64_t out_channels,
                   std::uint64_t kernel, std::uint64_t stride, std::uint64_t pad,
                   JoinRule join = JoinRule::Concat) {
    LayerDescriptor d;
    d.kind = LayerKind::Conv;
    d.inputs = std::move(inputs);
    d.join = join;
    d.conv = ConvParams{kernel, stride, pad, out_channels};
    return add_layer(std::move(d));
  }

  LayerId add_actv(LayerId input) {
    LayerDescriptor d;
    d.kind = LayerKind::Actv;
    d.inputs = {input};
    return add_layer(std::move(d));
  }

  LayerId add_pool(std::vector<LayerId> inputs, std::uint64_t window,
                   std::uint64_t stride, JoinRule join = JoinRule::Concat) {
    LayerDescriptor d;
    d.kind = LayerKind::Pool;
    d.inputs = std::move(inputs);
    d.join = join;
    d.pool = PoolParams{window, stride};
    return add_layer(std::move(d));
  }

  LayerId add_fc(std::vector<LayerId> inputs, std::uint64_t out_features,
                 JoinRule join = JoinRule::Concat) {
    LayerDescriptor d;
    d.kind = LayerKind::Fc;
    d.inputs = std::move(inputs);
    d.join = join;
    d.fc = FcParams{out_features};
    return add_layer(std::move(d));
  }

  LayerId add_loss(LayerId input) {
    LayerDescriptor d;
    d.kind = LayerKind::Loss;
    d.inputs = {input};
    return add_layer(std::move(d));
  }

  std::size_t size() const { return layers_.size(); }
  const LayerDescriptor& layer(LayerId id) const { return layers_.at(static_cast<std::size_t>(id)); }
  const std::vector<LayerDescriptor>& layers() const { return layers_; }

  bool has_shapes() const { return shapes_.size() == layers_.size(); }
  const TensorShape& shape(LayerId id) const { return shapes_.at(static_cast<std::size_t>(id)); }
  const std::vector<TensorShape>& shapes() const { return shapes_; }

  bool has_refcounts() const { return refcnt_.size() == layers_.size(); }
  int refcnt(LayerId id) const { return refcnt_.at(static_cast<std::size_t>(id)); }
  const std::vector<int>& refcnts() const { return refcnt_; }
  const std::vector<LayerId>& consumers(LayerId id) const { return consumers_.at(static_cast<std::size_t>(id)); }

  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& l : layers_) e += l.inputs.size();
    return e;
  }

  std::size_t count_kind(LayerKind k) const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += (l.kind == k) ? 1 : 0;
    return n;
  }

  // Forward order is the storage (topological) order; backward is its reverse.
  std::vector<LayerId> forward_order() const {
    std::vector<LayerId> o(layers_.size());
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = static_cast<LayerId>(i);
    return o;
  }

  std::vector<LayerId> backward_order() const {
    std::vector<LayerId> o = forward_order();
    std::reverse(o.begin(), o.end());
    return o;
  }

  void validate() const;
  void infer_shapes_inplace();
  void compute_refcounts_inplace();

  // Validates, infers shapes and recomputes refcounts; call after building.
  NetworkGraph& finalize() {
    validate();
    infer_shapes_inplace();
    compute_refcounts_inplace();
    return *this;
  }

  bool same_structure(const NetworkGraph& o) const {
    return batch_ == o.batch_ && layers_ == o.layers_;
  }

 private:
  TensorShape joined_input_shape(const LayerDescriptor& l) const;

  std::uint64_t batch_ = 1;
  std::vector<LayerDescriptor> layers_;
  std::vector<TensorShape> shapes_;
  std::vector<int> refcnt_;
  std::vector<std::vector<LayerId>> consumers_;
};

inline void NetworkGraph::validate() const {
  if (batch_ < 1) throw Error("batch must be >= 1");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerDescriptor& l = layers_[i];
    const std::string where = "layer " + std::to_string(i);
    if (l.id != static_cast<LayerId>(i)) throw Error(where + ": id does not match position");
    for (LayerId in : l.inputs) {
      if (in < 0 || in >= l.id) throw Error(where + ": inputs must reference earlier layers");
    }
    for (std::size_t a = 0; a < l.inputs.size(); ++a) {
      for (std::size_t b = a + 1; b < l.inputs.size(); ++b) {
        if (l.inputs[a] == l.inputs[b]) throw Error(where + ": duplicate input");
      }
    }
    const bool needs_conv = l.kind == LayerKind::Conv;
    const bool needs_pool = l.kind == LayerKind::Pool;
    const bool needs_fc = l.kind == LayerKind::Fc;
    const bool needs_input = l.kind == LayerKind::Input;
    if (l.conv.has_value() != needs_conv) throw Error(where + ": conv params presence mismatch");
    if (l.pool.has_value() != needs_pool) throw Error(where + ": pool params presence mismatch");
    if (l.fc.has_value() != needs_fc) throw Error(where + ": fc params presence mismatch");
    if (l.input.has_value() != needs_input) throw Error(where + ": input params presence mismatch");
    switch (l.kind) {
      case LayerKind::Input:
        if (!l.inputs.empty()) throw Error(where + ": INPUT layers take no inputs");
        if (l.input->c < 1 || l.input->h < 1 || l.input->w < 1) throw Error(where + ": input dims must be >= 1");
        break;
      case LayerKind::Actv:
        if (l.inputs.size() != 1) throw Error(where + ": ACTV layers take exactly one input");
        break;
      case LayerKind::Conv:
        if (l.inputs.empty()) throw Error(where + ": CONV layers need at least one input");
        if (l.conv->kernel < 1 || l.conv->stride < 1 || l.conv->out_channels < 1)
          throw Error(where + ": bad conv params");
        break;
      case LayerKind::Pool:
        if (l.inputs.empty()) throw Error(where + ": POOL layers need at least one input");
        if (l.pool->window < 1 || l.pool->stride < 1) throw Error(where + ": bad pool params");
        break;
      case LayerKind::Fc:
        if (l.inputs.empty()) throw Error(where + ": FC layers need at least one input");
        if (l.fc->out_features < 1) throw Error(where + ": bad fc params");
        break;
      case LayerKind::Loss:
        if (l.inputs.empty()) throw Error(where + ": LOSS layers need at least one input");
        break;
    }
  }
}

inline TensorShape NetworkGraph::joined_input_shape(const LayerDescriptor& l) const {
  TensorShape s = shapes_.at(static_cast<std::size_t>(l.inputs[0]));
  for (std::size_t i = 1; i < l.inputs.size(); ++i) {
    const TensorShape& t = shapes_.at(static_cast<std::size_t>(l.inputs[i]));
    if (l.join == JoinRule::Concat) {
      if (t.n != s.n || t.h != s.h || t.w != s.w) {
        throw ShapeMismatch("layer " + std::to_string(l.id) + ": concat inputs disagree on n/h/w");
      }
      s.c += t.c;
    } else {
      if (!(t == s)) {
        throw ShapeMismatch("layer " + std::to_string(l.id) + ": elementwise inputs must have identical shapes");
      }
    }
  }
  return s;
}

inline void NetworkGraph::infer_shapes_inplace() {
  shapes_.assign(layers_.size(), TensorShape{});
  for (const LayerDescriptor& l : layers_) {
    TensorShape& out = shapes_[static_cast<std::size_t>(l.id)];
    switch (l.kind) {
      case LayerKind::Input:
        out = TensorShape{batch_, l.input->c, l.input->h, l.input->w};
        break;
      case LayerKind::Conv: {
        const TensorShape in = joined_input_shape(l);
        const ConvParams& p = *l.conv;
        const auto span_h = in.h + 2 * p.pad;
        const auto span_w = in.w + 2 * p.pad;
        if (span_h < p.kernel || span_w < p.kernel) {
          throw ShapeMismatch("layer " + std::to_string(l.id) + ": kernel larger than padded input");
        }
        if ((span_h - p.kernel) % p.stride != 0 || (span_w - p.kernel) % p.stride != 0) {
          throw ShapeMismatch("layer " + std::to_string(l.id) + ": (h + 2p - k) not divisible by stride");
        }
        out = TensorShape{in.n, p.out_channels, (span_h - p.kernel) / p.stride + 1,
                          (span_w - p.kernel) / p.stride + 1};
        break;
      }
      case LayerKind::Actv:
        out = shapes_[static_cast<std::size_t>(l.inputs[0])];
        break;
      case LayerKind::Pool: {
        const TensorShape in = joined_input_shape(l);
        const PoolParams& p = *l.pool;
        if (in.h < p.window || in.w < p.window) {
          throw ShapeMismatch("layer " + std::to_string(l.id) + ": pool window larger than input");
        }
        out = TensorShape{in.n, in.c, (in.h - p.window) / p.stride + 1,
                          (in.w - p.window) / p.stride + 1};
        break;
      }
      case LayerKind::Fc: {
        const TensorShape in = joined_input_shape(l);
        out = TensorShape{in.n, l.fc->out_features, 1, 1};
        break;
      }
      case LayerKind::Loss: {
        const TensorShape in = joined_input_shape(l);
        out = TensorShape{in.n, 1, 1, 1};
        break;
      }
    }
  }
}

inline void NetworkGraph::compute_refcounts_inplace() {
  refcnt_.assign(layers_.size(), 0);
  consumers_.assign(layers_.size(), {});
  for (const LayerDescriptor& l : layers_) {
    for (LayerId in : l.inputs) {
      refcnt_[static_cast<std::size_t>(in)] += 1;
      consumers_[static_cast<std::size_t>(in)].push_back(l.id);
    }
  }
}

inline NetworkGraph infer_shapes(NetworkGraph g) {
  g.infer_shapes_inplace();
  return g;
}

inline NetworkGraph compute_refcounts(NetworkGraph g) {
  g.compute_refcounts_inplace();
  return g;
}

// FC input features are the flattened c*h*w of the (joined) input.
inline std::uint64_t fc_in_features(const NetworkGraph& g, const LayerDescriptor& l) {
  std::uint64_t c = 0, h = 0, w = 0;
  const TensorShape& first = g.shape(l.inputs[0]);
  h = first.h;
  w = first.w;
  for (LayerId in : l.inputs) {
    const TensorShape& t = g.shape(in);
    if (l.join == JoinRule::Concat) c += t.c;
    else c = t.c;
  }
  return c * h * w;
}

// In-place activations write their output into the producer's buffer, so an
// ACTV layer's feature map is owned by the nearest non-ACTV ancestor.
inline LayerId feature_owner(const NetworkGraph& g, LayerId id) {
  while (g.layer(id).kind == LayerKind::Actv) id = g.layer(id).inputs[0];
  return id;
}

// Shape of a layer's (joined) input X: concat sums channels, elementwise
// keeps the common shape.
inline TensorShape input_shape_of(const NetworkGraph& g, LayerId id) {
  const LayerDescriptor& l = g.layer(id);
  if (l.inputs.empty()) return TensorShape{g.batch(), 0, 0, 0};
  TensorShape s = g.shape(l.inputs[0]);
  for (std::size_t i = 1; i < l.inputs.size(); ++i) {
    if (l.join == JoinRule::Concat) s.c += g.shape(l.inputs[i]).c;
  }
  return s;
}

}  // namespace vdnnsim
