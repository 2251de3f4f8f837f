#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "aed/error.hpp"

namespace aed::nn {

template <class T>
struct BasicTensor {
  std::vector<std::size_t> shape;
  std::vector<T> values;

  BasicTensor() = default;
  explicit BasicTensor(std::vector<std::size_t> dims, T fill = T{})
      : shape(std::move(dims)), values(element_count(shape), fill) {}

  static std::size_t element_count(const std::vector<std::size_t>& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
  }
  [[nodiscard]] std::size_t size() const { return values.size(); }

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;
};

using Tensor = BasicTensor<float>;

/// Named parameters; names in `frozen` never receive updates.
template <class T>
struct BasicParams {
  std::map<std::string, BasicTensor<T>> tensors;
  std::set<std::string> frozen;

  [[nodiscard]] const BasicTensor<T>& at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(Errc::missing_name, "missing parameter '" + name + "'");
    return it->second;
  }
  BasicTensor<T>& at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(Errc::missing_name, "missing parameter '" + name + "'");
    return it->second;
  }
  [[nodiscard]] bool contains(const std::string& name) const { return tensors.count(name) != 0; }
  [[nodiscard]] bool is_frozen(const std::string& name) const { return frozen.count(name) != 0; }

  [[nodiscard]] std::size_t parameter_count(bool include_frozen = true) const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors) {
      if (include_frozen || !is_frozen(name)) n += t.size();
    }
    return n;
  }

  /// Zero tensors for every non-frozen parameter.
  [[nodiscard]] BasicParams zeros_like_trainable() const {
    BasicParams g;
    for (const auto& [name, t] : tensors) {
      if (!is_frozen(name)) g.tensors.emplace(name, BasicTensor<T>(t.shape));
    }
    return g;
  }

  friend bool operator==(const BasicParams&, const BasicParams&) = default;
};

using NetworkParams = BasicParams<float>;

template <class To, class From>
BasicParams<To> cast_params(const BasicParams<From>& src) {
  BasicParams<To> out;
  out.frozen = src.frozen;
  for (const auto& [name, t] : src.tensors) {
    BasicTensor<To> c;
    c.shape = t.shape;
    c.values.assign(t.values.begin(), t.values.end());
    out.tensors.emplace(name, std::move(c));
  }
  return out;
}

}  // namespace aed::nn
