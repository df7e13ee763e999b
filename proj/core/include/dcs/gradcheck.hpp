#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dcs/tensor.hpp"

namespace dcs {

// Per-parameter analytic-vs-finite-difference comparison record.
struct GradReport {
  std::string parameter_name;
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_index = 0;
  bool pass = false;

  void write_csv(const std::string& path) const;
};

// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) per element.
// element_subset restricts evaluation to the given flat indices.
Tensor4 finite_diff_grad(const std::function<double(const Tensor4&)>& f, const Tensor4& x,
                         double h = 1e-5,
                         const std::optional<std::vector<std::size_t>>& element_subset = {});

// Elementwise comparison; pass iff every element satisfies the relative
// OR the absolute tolerance. Relative error uses
// |a - n| / max(|a|, |n|, 1e-12).
GradReport compare_grads(const std::string& parameter_name, const Tensor4& analytic,
                         const Tensor4& numeric, double rel_tol, double abs_tol);

GradReport compare_grads(const std::string& parameter_name, const std::vector<double>& analytic,
                         const std::vector<double>& numeric, double rel_tol, double abs_tol);

// Finite differences over a raw parameter vector: f is re-evaluated with
// one element of params perturbed at a time. Convenience wrapper used by
// the parameter-bundle checks.
std::vector<double> finite_diff_grad_vec(const std::function<double()>& f,
                                         std::vector<double>& params, double h = 1e-5);

}  // namespace dcs
