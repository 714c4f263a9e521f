#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "causal/ncm.hpp"

namespace causal {

// Versioned JSON checkpoint of a neural causal model: gamma and theta with
// shapes, plus the hash of the configuration that produced them.

inline nlohmann::json checkpoint_to_json(const NeuralCausalModel& ncm, std::uint64_t config_hash) {
  nlohmann::json j;
  j["format"] = "ncm-checkpoint";
  j["version"] = 1;
  j["config_hash"] = config_hash;
  j["n"] = ncm.functions.n;
  j["m"] = ncm.functions.m;
  j["hidden"] = ncm.functions.hidden;
  j["gamma"] = ncm.structure.gamma.data;
  nlohmann::json nets = nlohmann::json::array();
  for (const auto& net : ncm.functions.nets) {
    nets.push_back({{"w1", net.w1}, {"b1", net.b1}, {"w2", net.w2}, {"b2", net.b2}});
  }
  j["theta"] = std::move(nets);
  return j;
}

inline NeuralCausalModel checkpoint_from_json(const nlohmann::json& j,
                                              std::uint64_t* config_hash = nullptr) {
  if (j.value("format", "") != "ncm-checkpoint")
    throw std::runtime_error("checkpoint: not an ncm-checkpoint file");
  if (j.value("version", 0) != 1) throw std::runtime_error("checkpoint: unsupported version");
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  const int hidden = j.at("hidden").get<int>();
  if (n < 1 || m < 2 || hidden < 1) throw std::runtime_error("checkpoint: bad shape header");
  if (config_hash) *config_hash = j.value("config_hash", std::uint64_t{0});

  NeuralCausalModel ncm;
  ncm.structure = StructuralParams(n);
  ncm.structure.gamma.data = j.at("gamma").get<std::vector<double>>();
  if (ncm.structure.gamma.data.size() != static_cast<std::size_t>(n) * n)
    throw std::runtime_error("checkpoint: gamma shape mismatch");
  ncm.functions.n = n;
  ncm.functions.m = m;
  ncm.functions.hidden = hidden;
  const auto& nets = j.at("theta");
  if (nets.size() != static_cast<std::size_t>(n))
    throw std::runtime_error("checkpoint: theta must have one net per node");
  for (const auto& net_json : nets) {
    TwoLayerMlp net(n * m, hidden, m);
    net.w1 = net_json.at("w1").get<std::vector<double>>();
    net.b1 = net_json.at("b1").get<std::vector<double>>();
    net.w2 = net_json.at("w2").get<std::vector<double>>();
    net.b2 = net_json.at("b2").get<std::vector<double>>();
    if (net.w1.size() != static_cast<std::size_t>(hidden) * n * m ||
        net.b1.size() != static_cast<std::size_t>(hidden) ||
        net.w2.size() != static_cast<std::size_t>(m) * hidden ||
        net.b2.size() != static_cast<std::size_t>(m))
      throw std::runtime_error("checkpoint: theta tensor shape mismatch");
    ncm.functions.nets.push_back(std::move(net));
  }
  return ncm;
}

inline void save_checkpoint(const std::string& path, const NeuralCausalModel& ncm,
                            std::uint64_t config_hash) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
  f << checkpoint_to_json(ncm, config_hash).dump();
  f << "\n";
}

inline NeuralCausalModel load_checkpoint(const std::string& path,
                                         std::uint64_t* config_hash = nullptr) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  f >> j;
  return checkpoint_from_json(j, config_hash);
}

}  // namespace causal
