// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsrdm/transitions.hpp"

namespace hsrdm::detail {

using Json = nlohmann::ordered_json;

// Reads known keys from one JSON object, leaving defaults for absent keys.
// Type errors and keys never asked for are recorded as violations.
class StrictReader {
 public:
  StrictReader(const Json* node, std::string path, std::vector<std::string>& violations)
      : node_(node), path_(std::move(path)), violations_(&violations) {
    if (node_ && !node_->is_object()) {
      fail("", "expected an object");
      node_ = nullptr;
    }
  }

  bool has(const char* key) const { return node_ && node_->contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!has(key)) return;
    try {
      out = (*node_)[key].template get<T>();
    } catch (const std::exception&) {
      fail(key, "has the wrong type");
    }
  }

  StrictReader child(const char* key) {
    seen_.insert(key);
    return StrictReader(has(key) ? &(*node_)[key] : nullptr, join(key), *violations_);
  }

  const Json* raw(const char* key) {
    seen_.insert(key);
    return has(key) ? &(*node_)[key] : nullptr;
  }

  void fail(const std::string& key, const std::string& what) {
    violations_->push_back((key.empty() ? path_ : join(key)) + ": " + what);
  }

  void require(bool ok, const char* key, const std::string& what) {
    if (!ok) fail(key, what);
  }

  // Flags keys that were present but never read.
  void finish() {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown key");
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const Json* node_;
  std::string path_;
  std::vector<std::string>* violations_;
  std::set<std::string> seen_;
};

Json recurrence_to_json(const RecurrenceSpec& spec);
RecurrenceSpec recurrence_from_json(StrictReader reader);

}  // namespace hsrdm::detail
