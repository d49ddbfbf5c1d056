#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vdnnsim/cost_model.hpp"
#include "vdnnsim/decision.hpp"
#include "vdnnsim/net_graph.hpp"
#include "vdnnsim/presets.hpp"
#include "vdnnsim/report.hpp"

namespace vdnnsim {

// Byte sizes accept decimal (KB/MB/GB) and binary (KiB/MiB/GiB) suffixes,
// plain integers, and scientific notation.
inline Bytes parse_bytes(std::string s) {
  if (s == "unlimited" || s == "inf") return kUnlimitedBytes;
  double mult = 1.0;
  auto ends_with = [&s](const char* suf) {
    const std::string t(suf);
    return s.size() >= t.size() && s.compare(s.size() - t.size(), t.size(), t) == 0;
  };
  auto chop = [&s](std::size_t n) { s.resize(s.size() - n); };
  if (ends_with("GiB")) { mult = 1073741824.0; chop(3); }
  else if (ends_with("MiB")) { mult = 1048576.0; chop(3); }
  else if (ends_with("KiB")) { mult = 1024.0; chop(3); }
  else if (ends_with("GB")) { mult = 1e9; chop(2); }
  else if (ends_with("MB")) { mult = 1e6; chop(2); }
  else if (ends_with("KB")) { mult = 1e3; chop(2); }
  else if (ends_with("B")) { chop(1); }
  try {
    return static_cast<Bytes>(std::stod(s) * mult);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse byte size: '" + s + "'");
  }
}

inline double parse_rate(const std::string& s) {  // bytes per second
  return double(parse_bytes(s));
}

struct ExperimentConfig {
  std::string network = "vgg16";  // preset, vggN, or a .conf/.json path
  std::uint64_t batch = 64;
  std::string policy = "baseline";  // baseline|vdnn-all|vdnn-conv|vdnn-dyn|decision-file
  AlgoMode algo_mode = AlgoMode::PerfOptimal;
  std::optional<Bytes> capacity;  // defaults to the device capacity
  std::string decision_file;
  CostModel cost;
  bool include_weight_grads = false;
  std::uint64_t seed = 0;
  // Inline layer list from a config file, if present.
  std::vector<std::string> inline_layers;

  Bytes effective_capacity() const { return capacity.value_or(cost.device.mem_capacity); }
};

namespace detail {

struct IniFile {
  // section -> ordered (key, value) pairs
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline IniFile parse_ini(std::istream& in, const std::string& where) {
  IniFile f;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.resize(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ":" + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where + ":" + std::to_string(lineno) + ": expected key = value");
    }
    f.sections[section].emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return f;
}

inline void apply_device_key(CostModel& cm, bool& weight_grads, const std::string& key,
                             const std::string& val) {
  if (key == "preset") {
    if (val == "titanx") cm.device = titanx_device();
    else throw ConfigError("unknown device preset: " + val);
  } else if (key == "peak_flops") cm.device.peak_flops = std::stod(val);
  else if (key == "dram_bw") cm.device.dram_bw = parse_rate(val);
  else if (key == "mem_capacity") cm.device.mem_capacity = parse_bytes(val);
  else if (key == "compute_efficiency") cm.device.compute_efficiency = std::stod(val);
  else if (key == "elem_size") cm.elem_size = parse_bytes(val);
  else if (key == "bwd_fwd_ratio") cm.bwd_fwd_ratio = std::stod(val);
  else if (key == "include_weight_grads") weight_grads = val == "true" || val == "1";
  else throw ConfigError("unknown [device] key: " + key);
}

inline void apply_link_key(CostModel& cm, const std::string& key, const std::string& val) {
  if (key == "preset") {
    if (val == "pcie3") cm.link = pcie3_link();
    else if (val == "page_migration") cm.link = page_migration_link();
    else throw ConfigError("unknown link preset: " + val);
  } else if (key == "effective_bw") cm.link.effective_bw = parse_rate(val);
  else if (key == "nominal_bw") cm.link.nominal_bw = parse_rate(val);
  else if (key == "launch_overhead") cm.link.fixed_launch_overhead = std::stod(val);
  else throw ConfigError("unknown [link] key: " + key);
}

// Per-layer latency pin: "<layer-id> = <fwd seconds> <bwd seconds>".
inline void apply_latency_key(CostModel& cm, const std::string& key, const std::string& val) {
  std::istringstream is(val);
  double fwd = 0, bwd = 0;
  if (!(is >> fwd >> bwd)) throw ConfigError("bad [latencies] entry for layer " + key);
  cm.latency_overrides[LayerId(std::stol(key))] = {fwd, bwd};
}

}  // namespace detail

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  const detail::IniFile f = detail::parse_ini(in, path);
  ExperimentConfig cfg;
  bool network_named = false;
  for (const auto& [section, entries] : f.sections) {
    for (const auto& [key, val] : entries) {
      if (section == "network") {
        if (key == "preset" || key == "file") {
          cfg.network = val;
          network_named = true;
        } else if (key == "batch") cfg.batch = std::stoull(val);
        else if (key.rfind("layer", 0) == 0) cfg.inline_layers.push_back(val);
        else throw ConfigError("unknown [network] key: " + key);
      } else if (section == "device") {
        detail::apply_device_key(cfg.cost, cfg.include_weight_grads, key, val);
      } else if (section == "link") {
        detail::apply_link_key(cfg.cost, key, val);
      } else if (section == "latencies") {
        detail::apply_latency_key(cfg.cost, key, val);
      } else if (section == "policy") {
        if (key == "policy") cfg.policy = val;
        else if (key == "algo_mode") {
          if (val == "perf") cfg.algo_mode = AlgoMode::PerfOptimal;
          else if (val == "memory") cfg.algo_mode = AlgoMode::MemoryOptimal;
          else throw ConfigError("algo_mode must be perf or memory");
        } else if (key == "capacity") cfg.capacity = parse_bytes(val);
        else if (key == "decision") cfg.decision_file = val;
        else if (key == "seed") cfg.seed = std::stoull(val);
        else throw ConfigError("unknown [policy] key: " + key);
      } else {
        throw ConfigError("unknown config section: [" + section + "]");
      }
    }
  }
  if (!cfg.inline_layers.empty() && !network_named) cfg.network = "custom";
  return cfg;
}

namespace detail {

// Inline layer schema: "<kind> [inputs=a,b] [join=concat|eltwise] k=.. s=.. p=.. out=..
// window=.. stride=.. c=.. h=.. w=.."
inline LayerDescriptor parse_inline_layer(const std::string& text) {
  std::istringstream is(text);
  std::string kind_word;
  is >> kind_word;
  LayerDescriptor d;
  d.kind = layer_kind_from(kind_word);
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("bad layer attribute: " + tok);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  if (kv.contains("inputs")) {
    std::istringstream ls(kv["inputs"]);
    std::string part;
    while (std::getline(ls, part, ',')) d.inputs.push_back(LayerId(std::stol(part)));
  }
  if (kv.contains("join")) d.join = kv["join"] == "eltwise" ? JoinRule::Elementwise : JoinRule::Concat;
  auto num = [&kv](const char* key, std::uint64_t fallback) {
    return kv.contains(key) ? std::stoull(kv[key]) : fallback;
  };
  switch (d.kind) {
    case LayerKind::Conv:
      d.conv = ConvParams{num("k", 3), num("s", 1), num("p", 0), num("out", 1)};
      break;
    case LayerKind::Pool:
      d.pool = PoolParams{num("window", 2), num("stride", 2)};
      break;
    case LayerKind::Fc:
      d.fc = FcParams{num("out", 1)};
      break;
    case LayerKind::Input:
      d.input = InputParams{num("c", 1), num("h", 1), num("w", 1)};
      break;
    default:
      break;
  }
  return d;
}

inline std::optional<std::string> resolve_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return name;
  if (const char* dir = std::getenv("VDNN_SIM_EXPERIMENTS")) {
    const fs::path candidate = fs::path(dir) / name;
    if (fs::exists(candidate)) return candidate.string();
  }
  return std::nullopt;
}

}  // namespace detail

// Resolve the configured network: a preset name, a deepened VGG (vgg116,
// vgg216, ...), an inline layer list, a dumped graph (.json), or a nested
// network config (.conf). File names are also looked up under
// $VDNN_SIM_EXPERIMENTS.
inline NetworkGraph build_network(const ExperimentConfig& cfg) {
  if (!cfg.inline_layers.empty()) {
    NetworkGraph g(cfg.batch);
    for (const std::string& text : cfg.inline_layers) g.add_layer(detail::parse_inline_layer(text));
    g.finalize();
    return g;
  }
  const std::string& name = cfg.network;
  for (const char* preset : {"alexnet", "overfeat", "vgg16", "inception_toy"}) {
    if (name == preset) return build_preset(name, cfg.batch);
  }
  if (name.rfind("vgg", 0) == 0 && name.size() > 3 && std::isdigit(name[3])) {
    const int convs = std::stoi(name.substr(3));
    return extend_vgg(convs - 16, cfg.batch);
  }
  if (auto path = detail::resolve_path(name)) {
    if (path->size() > 5 && path->compare(path->size() - 5, 5, ".json") == 0) {
      std::ifstream in(*path);
      json j;
      in >> j;
      NetworkGraph g = graph_from_json(j);
      return g;
    }
    ExperimentConfig nested = load_config(*path);
    nested.batch = cfg.batch;
    if (!nested.inline_layers.empty() || nested.network != cfg.network) return build_network(nested);
    throw ConfigError("network config file does not define a network: " + *path);
  }
  throw UnknownPreset("unknown network: " + name);
}

}  // namespace vdnnsim
