#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "tooluse/tensor.hpp"

namespace tooluse {

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::vector<double> per_parameter_errors;
};

// Central finite differences against an analytic gradient.
// relative error = |a - f| / max(|a|, |f|, 1e-8)
inline GradCheckReport finite_diff_check(const std::function<double(const Tensor&)>& loss_fn,
                                         const Tensor& params, const Tensor& analytic_grads,
                                         double epsilon = 1e-5) {
    if (params.shape != analytic_grads.shape) {
        throw dimension_error("finite_diff_check: params " + shape_string(params.shape) +
                              " vs analytic grads " + shape_string(analytic_grads.shape));
    }
    GradCheckReport report;
    report.per_parameter_errors.resize(params.data.size());
    Tensor probe = params;
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + epsilon;
        const double up = loss_fn(probe);
        probe.data[i] = saved - epsilon;
        const double down = loss_fn(probe);
        probe.data[i] = saved;
        const double fd = (up - down) / (2.0 * epsilon);
        const double a = analytic_grads.data[i];
        const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
        const double rel = std::abs(a - fd) / denom;
        report.per_parameter_errors[i] = rel;
        report.max_relative_error = std::max(report.max_relative_error, rel);
    }
    return report;
}

}  // namespace tooluse
