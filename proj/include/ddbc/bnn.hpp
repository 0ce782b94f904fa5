#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddbc/util.hpp"

namespace ddbc {

// An input record: one {0,1} value per feature.
struct Entity {
  std::vector<std::uint8_t> values;
  std::string id;

  static Entity from_mask(u64 mask, int n, std::string id = "") {
    Entity e;
    e.values.resize(size_t(n));
    for (int i = 0; i < n; ++i) e.values[size_t(i)] = (mask >> i) & 1u;
    e.id = std::move(id);
    return e;
  }

  u64 to_mask() const {
    u64 m = 0;
    for (size_t i = 0; i < values.size(); ++i)
      if (values[i]) m |= bit(int(i));
    return m;
  }

  int size() const { return int(values.size()); }
};

// One fully connected layer: weights[r][c] in {-1,+1}, one real bias per row.
struct Layer {
  std::vector<std::vector<int>> weights;  // rows = neurons, cols = inputs
  std::vector<double> biases;

  int neurons() const { return int(weights.size()); }
  int fan_in() const { return weights.empty() ? 0 : int(weights[0].size()); }
};

// A binarized network: +-1 weights, real biases, step activations, and a
// single output neuron. Immutable after construction; safe to share.
class BnnModel {
 public:
  BnnModel(std::vector<Layer> layers, std::vector<std::string> feature_names)
      : layers_(std::move(layers)), feature_names_(std::move(feature_names)) {
    validate();
  }

  int num_inputs() const { return int(feature_names_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }

 private:
  void validate() const {
    if (layers_.empty()) throw ValidationError("model has no layers");
    if (feature_names_.empty()) throw ValidationError("model has no inputs");
    int expect = num_inputs();
    for (size_t k = 0; k < layers_.size(); ++k) {
      const Layer& layer = layers_[k];
      if (layer.neurons() == 0)
        throw ValidationError("layer " + std::to_string(k) + " is empty");
      if (layer.biases.size() != layer.weights.size())
        throw ValidationError("layer " + std::to_string(k) +
                              ": bias count does not match neuron count");
      for (const auto& row : layer.weights) {
        if (int(row.size()) != expect)
          throw ValidationError("layer " + std::to_string(k) +
                                ": weight row width " +
                                std::to_string(row.size()) + ", expected " +
                                std::to_string(expect));
        for (int w : row)
          if (w != 1 && w != -1)
            throw ValidationError("weight entries must be -1 or +1");
      }
      for (double b : layer.biases)
        if (!std::isfinite(b)) throw ValidationError("bias must be finite");
      expect = layer.neurons();
    }
    if (layers_.back().neurons() != 1)
      throw ValidationError("final layer must have exactly one neuron");
  }

  std::vector<Layer> layers_;
  std::vector<std::string> feature_names_;
};

// Step activation over +-1 inputs. Fires (returns 1) iff w.input + b >= 0;
// otherwise -1 for hidden neurons and 0 for the output neuron. The dot
// product is integral, so only the final comparison touches floating point.
inline int step_activation(std::span<const int> w, double b,
                           std::span<const int> input, bool is_output) {
  if (w.size() != input.size())
    throw ValidationError("step_activation: dimension mismatch");
  long long dot = 0;
  for (size_t i = 0; i < w.size(); ++i) dot += (long long)w[i] * input[i];
  if (double(dot) + b >= 0.0) return 1;
  return is_output ? 0 : -1;
}

// The black-box label function: {0,1} features map to +-1 inputs via
// v -> 2v - 1 and propagate through every layer.
inline int forward(const BnnModel& model, const Entity& entity) {
  if (entity.size() != model.num_inputs())
    throw ValidationError("forward: entity has " +
                          std::to_string(entity.size()) + " values, model " +
                          std::to_string(model.num_inputs()) + " inputs");
  std::vector<int> signal(entity.values.size());
  for (size_t i = 0; i < signal.size(); ++i)
    signal[i] = entity.values[i] ? 1 : -1;
  for (size_t k = 0; k < model.layers().size(); ++k) {
    const Layer& layer = model.layers()[k];
    const bool is_output = k + 1 == model.layers().size();
    std::vector<int> next(size_t(layer.neurons()));
    for (int r = 0; r < layer.neurons(); ++r)
      next[size_t(r)] = step_activation(layer.weights[size_t(r)],
                                        layer.biases[size_t(r)], signal,
                                        is_output);
    signal = std::move(next);
  }
  return signal[0];
}

inline int forward_mask(const BnnModel& model, u64 mask) {
  return forward(model, Entity::from_mask(mask, model.num_inputs()));
}

// Deterministic test-fixture generator: weights uniform over {-1,+1},
// biases uniform in [-fan_in, fan_in].
inline BnnModel generate_random_bnn(int n_inputs,
                                    const std::vector<int>& hidden_sizes,
                                    u64 seed) {
  if (n_inputs < 1) throw ValidationError("generate_random_bnn: n_inputs < 1");
  for (int s : hidden_sizes)
    if (s < 1) throw ValidationError("generate_random_bnn: hidden size < 1");
  std::mt19937_64 rng(seed);
  std::vector<int> widths;
  widths.push_back(n_inputs);
  for (int s : hidden_sizes) widths.push_back(s);
  widths.push_back(1);

  std::vector<Layer> layers;
  for (size_t k = 1; k < widths.size(); ++k) {
    Layer layer;
    const int rows = widths[k], cols = widths[k - 1];
    for (int r = 0; r < rows; ++r) {
      std::vector<int> row(static_cast<size_t>(cols));
      for (int& w : row) w = (rng() & 1) ? 1 : -1;
      layer.weights.push_back(std::move(row));
      layer.biases.push_back((2.0 * canonical_unit(rng()) - 1.0) * cols);
    }
    layers.push_back(std::move(layer));
  }
  std::vector<std::string> names;
  for (int i = 1; i <= n_inputs; ++i) names.push_back("x" + std::to_string(i));
  return BnnModel(std::move(layers), std::move(names));
}

// --- model file format: JSON with feature_names and layers ----------------

inline std::string serialize_bnn(const BnnModel& model) {
  nlohmann::json j;
  j["feature_names"] = model.feature_names();
  j["layers"] = nlohmann::json::array();
  for (const Layer& layer : model.layers()) {
    nlohmann::json jl;
    jl["weights"] = layer.weights;
    jl["biases"] = layer.biases;
    j["layers"].push_back(std::move(jl));
  }
  return j.dump(2) + "\n";
}

inline BnnModel parse_bnn(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
  if (!j.contains("feature_names") || !j.contains("layers"))
    throw ValidationError("model file needs feature_names and layers");
  std::vector<std::string> names;
  for (const auto& n : j["feature_names"]) names.push_back(n.get<std::string>());
  std::vector<Layer> layers;
  for (const auto& jl : j["layers"]) {
    if (!jl.contains("weights") || !jl.contains("biases"))
      throw ValidationError("layer needs weights and biases");
    Layer layer;
    for (const auto& jrow : jl["weights"]) {
      std::vector<int> row;
      for (const auto& jw : jrow) {
        const double w = jw.get<double>();
        if (w != 1.0 && w != -1.0)
          throw ValidationError("weight entries must be -1 or +1");
        row.push_back(int(w));
      }
      layer.weights.push_back(std::move(row));
    }
    for (const auto& jb : jl["biases"]) layer.biases.push_back(jb.get<double>());
    layers.push_back(std::move(layer));
  }
  return BnnModel(std::move(layers), std::move(names));
}

}  // namespace ddbc
