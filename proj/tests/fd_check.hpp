#pragma once

// Central finite-difference gradient checking shared by the module tests and
// the acceptance suite. A check passes when
//     |analytic - fd| <= abs_floor + tol * max(|analytic|, |fd|)
// with fd = (f(x+h) - f(x-h)) / 2h evaluated coordinate by coordinate.

#include <cmath>
#include <cstddef>
#include <vector>

#include "gael/rng.hpp"
#include "gael/tensor.hpp"

namespace fd {

struct Result {
    std::size_t checked = 0;
    std::size_t failed = 0;
    double worst_rel = 0.0;

    bool ok() const { return failed == 0 && checked > 0; }
    void merge(const Result& o) {
        checked += o.checked;
        failed += o.failed;
        if (o.worst_rel > worst_rel) worst_rel = o.worst_rel;
    }
};

// Compares `analytic` (d loss / d t, flat) against central differences of
// `eval` (recomputes the scalar loss from t's current data). Checks at most
// max_coords coordinates, randomly chosen when the tensor is larger.
template <typename Eval>
Result check_tensor_grad(gael::Tensor& t, const std::vector<double>& analytic, Eval&& eval,
                         gael::Rng& rng, double tol = 1e-4, double h = 1e-5,
                         std::size_t max_coords = 24, double abs_floor = 1e-8) {
    Result res;
    std::size_t n = t.numel();
    std::vector<std::size_t> coords;
    if (n <= max_coords) {
        for (std::size_t i = 0; i < n; ++i) coords.push_back(i);
    } else {
        for (std::size_t c = 0; c < max_coords; ++c) coords.push_back(rng.index(n));
    }
    for (std::size_t i : coords) {
        double saved = t.data[i];
        t.data[i] = saved + h;
        double fp = eval();
        t.data[i] = saved - h;
        double fm = eval();
        t.data[i] = saved;
        double fd_val = (fp - fm) / (2.0 * h);
        double a = analytic[i];
        double err = std::abs(a - fd_val);
        double scale = std::max(std::abs(a), std::abs(fd_val));
        double rel = err / std::max(scale, 1e-12);
        ++res.checked;
        if (err > abs_floor + tol * scale) ++res.failed;
        if (scale > 1e-6 && rel > res.worst_rel) res.worst_rel = rel;
    }
    return res;
}

}  // namespace fd
