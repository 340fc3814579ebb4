#pragma once

#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "ssb/net.hpp"
#include "ssb/scalars.hpp"

namespace ssb {

/// One unknown field: a parity-tagged network.
struct FieldModel {
  std::string name;
  ModelParams net;
  ParityTag parity = parity_none();
};

/// All trainables of a run: the field networks plus the problem scalars.
/// Provides the flat parameter vector view used by the optimizers
/// (field weights+biases in declaration order, then trainable scalar raws).
struct FieldSet {
  std::vector<FieldModel> fields;
  std::vector<ScalarSpec> scalars;

  std::size_t field_offset(std::size_t i) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < i; ++k) off += fields[k].net.n_params();
    return off;
  }

  std::size_t n_field_params() const { return field_offset(fields.size()); }

  std::size_t n_params() const {
    std::size_t n = n_field_params();
    for (const auto& s : scalars) {
      if (s.trainable) ++n;
    }
    return n;
  }

  /// Flat index of a trainable scalar, past the field block.
  std::size_t scalar_flat_index(std::size_t scalar_idx) const {
    std::size_t off = n_field_params();
    for (std::size_t k = 0; k < scalar_idx; ++k) {
      if (scalars[k].trainable) ++off;
    }
    return off;
  }

  void pack(std::vector<double>& flat) const {
    flat.resize(n_params());
    std::size_t off = 0;
    for (const auto& f : fields) {
      std::memcpy(flat.data() + off, f.net.weights.data(), f.net.weights.size() * sizeof(double));
      off += f.net.weights.size();
      std::memcpy(flat.data() + off, f.net.biases.data(), f.net.biases.size() * sizeof(double));
      off += f.net.biases.size();
    }
    for (const auto& s : scalars) {
      if (s.trainable) flat[off++] = s.window.raw;
    }
  }

  void unpack(std::span<const double> flat) {
    std::size_t off = 0;
    for (auto& f : fields) {
      std::memcpy(f.net.weights.data(), flat.data() + off, f.net.weights.size() * sizeof(double));
      off += f.net.weights.size();
      std::memcpy(f.net.biases.data(), flat.data() + off, f.net.biases.size() * sizeof(double));
      off += f.net.biases.size();
    }
    for (auto& s : scalars) {
      if (s.trainable) s.window.raw = flat[off++];
    }
  }

  int field_index(const std::string& name) const {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].name == name) return static_cast<int>(i);
    }
    throw ConfigError("unknown field: " + name);
  }

  int scalar_index(const std::string& name) const {
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      if (scalars[i].name == name) return static_cast<int>(i);
    }
    return -1;
  }

  double scalar_value(const std::string& name) const {
    const int i = scalar_index(name);
    if (i < 0) throw ConfigError("unknown scalar: " + name);
    return scalars[i].value();
  }
};

}  // namespace ssb
