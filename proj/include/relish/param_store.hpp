// SPDX-FileCopyrightText: © 2026 The relish-head Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "relish/error.hpp"
#include "relish/tensor.hpp"

namespace relish {

/// Named trainable tensors, each paired with a gradient slot of identical shape.
/// Iteration order is the lexicographic order of names.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    Tensor2<T> value;
    Tensor2<T> grad;
  };

  void add(const std::string& name, Tensor2<T> value) {
    if (entries_.contains(name)) throw InternalError("duplicate parameter '" + name + "'");
    Tensor2<T> grad(value.rows(), value.cols());
    entries_.emplace(name, Entry{std::move(value), std::move(grad)});
  }

  [[nodiscard]] bool contains(const std::string& name) const { return entries_.contains(name); }

  Tensor2<T>& value(const std::string& name) { return entry(name).value; }
  const Tensor2<T>& value(const std::string& name) const { return entry(name).value; }
  Tensor2<T>& grad(const std::string& name) { return entry(name).grad; }
  const Tensor2<T>& grad(const std::string& name) const { return entry(name).grad; }

  void zero_grad() {
    for (auto& [name, e] : entries_) e.grad.fill(T{0});
  }

  [[nodiscard]] std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
  }

  [[nodiscard]] std::size_t tensor_count() const { return entries_.size(); }

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// Copies values into another precision; gradients start at zero.
  template <typename U>
  [[nodiscard]] ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, e] : entries_) out.add(name, e.value.template cast<U>());
    return out;
  }

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    auto it = b.entries_.begin();
    for (const auto& [name, e] : a.entries_) {
      if (name != it->first || !(e.value == it->second.value)) return false;
      ++it;
    }
    return true;
  }

 private:
  Entry& entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InternalError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Entry& entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InternalError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, Entry> entries_;
};

}  // namespace relish
