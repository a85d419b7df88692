// Copyright 2026 The DHSNet Authors
// SPDX-License-Identifier: Apache-2.0

// Finite-difference gradient checking. Every check contracts the op output
// with a fixed random cotangent u, so the scalar L(x) = <u, f(x)> has the
// analytic gradient backward(u), and compares <grad, v> against the central
// difference (L(x + h v) - L(x - h v)) / 2h along random directions v, one
// input tensor at a time.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace dhs::grad {

struct CheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, for near-zero derivatives.
  double floor = 1e-6;
  std::size_t directions = 2;  // per input tensor
};

struct GradCase {
  std::string op;
  std::uint64_t seed = 0;
  std::vector<Tensor<double>> inputs;
  // Inputs excluded from checking (labels, integer-valued data).
  std::vector<bool> frozen;
  std::function<Tensor<double>(const std::vector<Tensor<double>>&)> forward;
  // Gradients for every input given d L / d output; frozen slots may be empty.
  std::function<std::vector<Tensor<double>>(const std::vector<Tensor<double>>&, const Tensor<double>&)> backward;
};

struct CheckResult {
  std::string op;
  std::uint64_t seed = 0;
  double max_rel_error = 0;
  std::string worst_input;  // index of the input with the largest error
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

CheckResult check_case(const GradCase& c, const CheckOptions& options = {});

/// Operators covered by the suite, in report order.
const std::vector<std::string>& suite_ops();

/// Builds the randomized case for one op. `fault_scale` multiplies the
/// weight gradient of ops with weights and the first input gradient of the
/// rest (1 means no fault).
GradCase make_case(const std::string& op, std::uint64_t seed, double fault_scale = 1.0);

struct SuiteOptions {
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
  std::size_t end_to_end_seeds = 20;
  double op_tolerance = 1e-4;
  double end_to_end_tolerance = 1e-3;
  // Op whose weight gradient is scaled by fault_scale; empty for none.
  std::string fault_op;
  double fault_scale = 1.01;
};

struct SuiteReport {
  std::vector<CheckResult> results;
  bool passed() const;
  std::string format() const;  // one line per result plus a summary
};

SuiteReport run_suite(const SuiteOptions& options = {});

/// Tiny DHSNet (base 2, 16x16 input) with randomized offset predictors;
/// checks every parameter tensor and the input image.
CheckResult check_end_to_end(std::uint64_t seed, const CheckOptions& options, double fault_scale = 1.0);

}  // namespace dhs::grad
