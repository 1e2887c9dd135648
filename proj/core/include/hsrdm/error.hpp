// Copyright 2026 The HSRDM Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace hsrdm {

// Every library failure is reported as an Error carrying a stable,
// machine-readable code (e.g. "DegenerateCovariance") plus free-form detail.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace hsrdm
