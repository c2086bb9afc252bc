#pragma once

#include <cstdint>
#include <vector>

#include "gael/tensor.hpp"

namespace gael {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double epsilon = 1e-8;
};

// Adam with bias correction over a fixed set of attached parameters.
// step() consumes each parameter's .grad in attach order; moments live here.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void attach(Tensor& param);
    void step();

    const AdamConfig& config() const { return cfg_; }
    std::uint64_t step_count() const { return t_; }
    std::size_t param_count() const { return params_.size(); }

    // Checkpoint access, slot index in attach order.
    const std::vector<double>& moment1(std::size_t slot) const { return m_[slot]; }
    const std::vector<double>& moment2(std::size_t slot) const { return v_[slot]; }
    void restore(std::uint64_t step_count, std::vector<std::vector<double>> m,
                 std::vector<std::vector<double>> v);

private:
    AdamConfig cfg_;
    std::uint64_t t_ = 0;
    std::vector<Tensor*> params_;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace gael
