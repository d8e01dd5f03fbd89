#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace openima {

// Central-difference gradient oracle used to certify analytic gradients.
// The loss must be evaluable at params +/- h on every coordinate; a
// non-finite loss value is rejected naming the offending coordinate.
inline std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& loss,
    const std::vector<double>& params, double h) {
    std::vector<double> p = params;
    std::vector<double> grad(params.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + h;
        const double fp = loss(p);
        p[i] = orig - h;
        const double fm = loss(p);
        p[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("finite_diff_grad: non-finite loss at coordinate " +
                                     std::to_string(i));
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace openima
