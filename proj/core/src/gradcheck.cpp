#include "dcs/gradcheck.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dcs {

namespace {
constexpr double kEpsFloor = 1e-12;
}

Tensor4 finite_diff_grad(const std::function<double(const Tensor4&)>& f, const Tensor4& x,
                         double h, const std::optional<std::vector<std::size_t>>& element_subset) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Tensor4 grad(x.n(), x.c(), x.h(), x.w());
  Tensor4 probe = x;

  auto eval_at = [&](std::size_t i, double v) {
    const double saved = probe[i];
    probe[i] = v;
    const double y = f(probe);
    probe[i] = saved;
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "finite_diff_grad: non-finite objective at element " << i;
      throw std::domain_error(os.str());
    }
    return y;
  };

  auto one = [&](std::size_t i) {
    const double fp = eval_at(i, x[i] + h);
    const double fm = eval_at(i, x[i] - h);
    grad[i] = (fp - fm) / (2.0 * h);
  };

  if (element_subset) {
    for (std::size_t i : *element_subset) {
      if (i >= x.size()) throw std::out_of_range("finite_diff_grad: subset index out of range");
      one(i);
    }
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) one(i);
  }
  return grad;
}

std::vector<double> finite_diff_grad_vec(const std::function<double()>& f,
                                         std::vector<double>& params, double h) {
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double fp = f();
    params[i] = saved - h;
    const double fm = f();
    params[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("finite_diff_grad_vec: non-finite objective at element " +
                              std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

GradReport compare_grads(const std::string& parameter_name, const std::vector<double>& analytic,
                         const std::vector<double>& numeric, double rel_tol, double abs_tol) {
  if (analytic.size() != numeric.size())
    throw std::invalid_argument("compare_grads: length mismatch for " + parameter_name);
  GradReport r;
  r.parameter_name = parameter_name;
  r.analytic = analytic;
  r.numeric = numeric;
  r.pass = true;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double abs_err = std::abs(analytic[i] - numeric[i]);
    const double rel_err =
        abs_err / std::max({std::abs(analytic[i]), std::abs(numeric[i]), kEpsFloor});
    if (abs_err > r.max_abs_error) r.max_abs_error = abs_err;
    if (rel_err > r.max_rel_error) {
      r.max_rel_error = rel_err;
      r.worst_index = i;
    }
    if (!(rel_err <= rel_tol || abs_err <= abs_tol)) r.pass = false;
  }
  return r;
}

GradReport compare_grads(const std::string& parameter_name, const Tensor4& analytic,
                         const Tensor4& numeric, double rel_tol, double abs_tol) {
  if (!analytic.same_dims(numeric))
    throw std::invalid_argument("compare_grads: shape mismatch for " + parameter_name);
  return compare_grads(parameter_name, analytic.data(), numeric.data(), rel_tol, abs_tol);
}

void GradReport::write_csv(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("GradReport: cannot open '" + path + "'");
  os << "parameter_name,index,analytic,numeric,rel_error,abs_error\n";
  os.precision(17);
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double abs_err = std::abs(analytic[i] - numeric[i]);
    const double rel_err =
        abs_err / std::max({std::abs(analytic[i]), std::abs(numeric[i]), kEpsFloor});
    os << parameter_name << "," << i << "," << analytic[i] << "," << numeric[i] << "," << rel_err
       << "," << abs_err << "\n";
  }
}

}  // namespace dcs
