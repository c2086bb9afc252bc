#include "gael/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace gael {

void Adam::attach(Tensor& param) {
    params_.push_back(&param);
    m_.emplace_back(param.numel(), 0.0);
    v_.emplace_back(param.numel(), 0.0);
}

void Adam::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t s = 0; s < params_.size(); ++s) {
        Tensor& p = *params_[s];
        if (p.grad.size() != p.data.size())
            throw ShapeError("Adam::step: parameter " + std::to_string(s) +
                             " has no gradient of shape " + p.shape_str());
        auto& m = m_[s];
        auto& v = v_[s];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
            double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
        }
    }
}

void Adam::restore(std::uint64_t step_count, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
    if (m.size() != params_.size() || v.size() != params_.size())
        throw std::invalid_argument("Adam::restore: slot count mismatch");
    for (std::size_t s = 0; s < params_.size(); ++s)
        if (m[s].size() != params_[s]->numel() || v[s].size() != params_[s]->numel())
            throw std::invalid_argument("Adam::restore: moment size mismatch at slot " +
                                        std::to_string(s));
    t_ = step_count;
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace gael
