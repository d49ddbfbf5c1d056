#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "vdnnsim/net_graph.hpp"

namespace vdnnsim {

struct DeviceProfile {
  double peak_flops = 7e12;          // FLOP/s
  double dram_bw = 336e9;            // bytes/s
  Bytes mem_capacity = 12884901888;  // bytes (12 GiB)
  double compute_efficiency = 0.5;   // fraction of peak_flops actually achieved
};

struct LinkProfile {
  double effective_bw = 12.8e9;        // bytes/s achieved by DMA transfers
  double nominal_bw = 16e9;            // bytes/s interconnect peak
  double fixed_launch_overhead = 0.0;  // seconds per transfer
};

inline DeviceProfile titanx_device() { return DeviceProfile{}; }
inline LinkProfile pcie3_link() { return LinkProfile{}; }
inline LinkProfile page_migration_link() { return LinkProfile{200e6, 200e6, 0.0}; }

// Three representative points on the convolution speed/workspace frontier.
enum class AlgoId { ImplicitGemm, GemmWs, Fft };

inline const char* to_string(AlgoId a) {
  switch (a) {
    case AlgoId::ImplicitGemm: return "implicit_gemm";
    case AlgoId::GemmWs: return "gemm_ws";
    case AlgoId::Fft: return "fft";
  }
  return "?";
}

inline AlgoId algo_from(std::string_view s) {
  if (s == "implicit_gemm") return AlgoId::ImplicitGemm;
  if (s == "gemm_ws") return AlgoId::GemmWs;
  if (s == "fft") return AlgoId::Fft;
  throw ConfigError("unknown convolution algorithm: " + std::string(s));
}

// One step down the speed/workspace frontier; ImplicitGemm is the floor.
inline std::optional<AlgoId> downgrade_of(AlgoId a) {
  switch (a) {
    case AlgoId::Fft: return AlgoId::GemmWs;
    case AlgoId::GemmWs: return AlgoId::ImplicitGemm;
    case AlgoId::ImplicitGemm: return std::nullopt;
  }
  return std::nullopt;
}

enum class Direction { Fwd, Bwd };

// Analytic per-layer latency / workspace / transfer model. Pure functions of
// immutable profiles; freely shareable.
class CostModel {
 public:
  DeviceProfile device;
  LinkProfile link;
  Bytes elem_size = 4;   // single-precision throughout
  double bwd_fwd_ratio = 2.0;
  double speed_factor_implicit_gemm = 1.0;
  double speed_factor_gemm_ws = 0.8;
  double speed_factor_fft = 0.6;
  // Calibration hook: pinned absolute latencies override the analytic model.
  std::map<LayerId, std::pair<double, double>> latency_overrides;  // id -> (fwd s, bwd s)

  double speed_factor(AlgoId a) const {
    switch (a) {
      case AlgoId::ImplicitGemm: return speed_factor_implicit_gemm;
      case AlgoId::GemmWs: return speed_factor_gemm_ws;
      case AlgoId::Fft: return speed_factor_fft;
    }
    return 1.0;
  }

  bool fft_applicable(const NetworkGraph& g, LayerId id) const {
    const LayerDescriptor& l = g.layer(id);
    return l.kind == LayerKind::Conv && l.conv->stride == 1;
  }

  AlgoId fastest_algo(const NetworkGraph& g, LayerId id) const {
    return fft_applicable(g, id) ? AlgoId::Fft : AlgoId::GemmWs;
  }

  double flops(const NetworkGraph& g, LayerId id, Direction dir) const {
    const LayerDescriptor& l = g.layer(id);
    const TensorShape& out = g.shape(id);
    double f = 0.0;
    switch (l.kind) {
      case LayerKind::Conv: {
        const TensorShape in = input_shape_of(g, id);
        const ConvParams& p = *l.conv;
        f = 2.0 * double(p.kernel) * double(p.kernel) * double(in.c) * double(out.c) *
            double(out.h) * double(out.w) * double(out.n);
        break;
      }
      case LayerKind::Actv:
        f = double(out.elements());
        break;
      case LayerKind::Pool:
        f = double(l.pool->window) * double(l.pool->window) * double(out.elements());
        break;
      case LayerKind::Fc:
        f = 2.0 * double(fc_in_features(g, l)) * double(l.fc->out_features) * double(out.n);
        break;
      case LayerKind::Input:
      case LayerKind::Loss:
        return 0.0;
    }
    return dir == Direction::Bwd ? bwd_fwd_ratio * f : f;
  }

  Bytes moved_bytes(const NetworkGraph& g, LayerId id) const {
    const LayerDescriptor& l = g.layer(id);
    switch (l.kind) {
      case LayerKind::Actv:
        return 2 * tensor_bytes_of(g.shape(id));
      case LayerKind::Pool:
        return tensor_bytes_of(input_shape_of(g, id)) + tensor_bytes_of(g.shape(id));
      case LayerKind::Fc:
        return weight_bytes(g, id) + tensor_bytes_of(input_shape_of(g, id)) +
               tensor_bytes_of(g.shape(id));
      default:
        return 0;
    }
  }

  // CONV is FLOP-bound with a per-algorithm speed factor; ACTV/POOL/FC take
  // the max of FLOP-bound and DRAM-bandwidth-bound time. Backward costs
  // bwd_fwd_ratio x forward (covers data + weight gradients).
  double layer_latency(const NetworkGraph& g, LayerId id, Direction dir,
                       AlgoId algo = AlgoId::ImplicitGemm) const {
    if (auto it = latency_overrides.find(id); it != latency_overrides.end()) {
      return dir == Direction::Fwd ? it->second.first : it->second.second;
    }
    const LayerDescriptor& l = g.layer(id);
    if (l.kind == LayerKind::Input || l.kind == LayerKind::Loss) return 0.0;
    const double eff_flops = device.compute_efficiency * device.peak_flops;
    const double flop_time = flops(g, id, dir) / eff_flops;
    if (l.kind == LayerKind::Conv) return flop_time * speed_factor(algo);
    double bw_time = double(moved_bytes(g, id)) / device.dram_bw;
    if (dir == Direction::Bwd) bw_time *= bwd_fwd_ratio;
    return std::max(flop_time, bw_time);
  }

  Bytes conv_workspace(const NetworkGraph& g, LayerId id, AlgoId algo) const {
    const LayerDescriptor& l = g.layer(id);
    if (l.kind != LayerKind::Conv) throw WrongLayerKind("conv_workspace on non-CONV layer");
    const TensorShape in = input_shape_of(g, id);
    const TensorShape& out = g.shape(id);
    switch (algo) {
      case AlgoId::ImplicitGemm:
        return 0;
      case AlgoId::GemmWs: {
        // im2col buffer
        Bytes b = checked_mul(l.conv->kernel * l.conv->kernel, in.c, "workspace");
        b = checked_mul(b, out.h * out.w, "workspace");
        b = checked_mul(b, out.n, "workspace");
        return checked_mul(b, elem_size, "workspace");
      }
      case AlgoId::Fft: {
        // frequency-domain planes padded to the next power of two
        const Bytes ph = std::bit_ceil(in.h);
        const Bytes pw = std::bit_ceil(in.w);
        Bytes b = checked_mul(Bytes{2} * std::max(in.c, out.c), ph * pw, "workspace");
        b = checked_mul(b, out.n, "workspace");
        return checked_mul(b, elem_size, "workspace");
      }
    }
    return 0;
  }

  double transfer_latency(Bytes bytes) const {
    return link.fixed_launch_overhead + double(bytes) / link.effective_bw;
  }

  // Worst-case fraction of DRAM bandwidth the offload/prefetch traffic can
  // steal from compute.
  double offload_interference_bound() const { return link.nominal_bw / device.dram_bw; }

  Bytes tensor_bytes_of(const TensorShape& s) const {
    return checked_mul(s.elements(), elem_size, "tensor_bytes");
  }

  // CONV weights are k*k*c_in*c_out; FC weights include the bias vector.
  Bytes weight_bytes(const NetworkGraph& g, LayerId id) const {
    const LayerDescriptor& l = g.layer(id);
    switch (l.kind) {
      case LayerKind::Conv: {
        const TensorShape in = input_shape_of(g, id);
        Bytes b = checked_mul(l.conv->kernel * l.conv->kernel, in.c, "weights");
        b = checked_mul(b, l.conv->out_channels, "weights");
        return checked_mul(b, elem_size, "weights");
      }
      case LayerKind::Fc: {
        Bytes b = checked_mul(fc_in_features(g, l) + 1, l.fc->out_features, "weights");
        return checked_mul(b, elem_size, "weights");
      }
      default:
        return 0;
    }
  }
};

inline Bytes tensor_bytes(const TensorShape& shape, Bytes elem_size) {
  return checked_mul(shape.elements(), elem_size, "tensor_bytes");
}

}  // namespace vdnnsim
