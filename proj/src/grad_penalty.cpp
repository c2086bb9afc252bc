#include "gael/grad_penalty.hpp"

#include <cmath>
#include <vector>

#include "gael/kernels.hpp"

namespace gael {

using kernels::active;

Tensor draw_interpolation_coeffs(Rng& rng, std::size_t batch) {
    Tensor t = Tensor::zeros({batch});
    for (auto& v : t.data) v = rng.uniform();
    return t;
}

Tensor interpolate(const Tensor& real, const Tensor& fake, const Tensor& t) {
    if (!real.same_shape(fake))
        throw ShapeError("interpolate: real " + real.shape_str() + " vs fake " +
                         fake.shape_str());
    if (t.numel() != real.rows())
        throw ShapeError("interpolate: coeff count " + t.shape_str() + " vs batch " +
                         real.shape_str());
    Tensor out = Tensor::zeros(real.shape);
    std::size_t d = real.cols();
    for (std::size_t b = 0; b < real.rows(); ++b) {
        double tb = t.data[b];
        for (std::size_t j = 0; j < d; ++j)
            out.data[b * d + j] =
                tb * real.data[b * d + j] + (1.0 - tb) * fake.data[b * d + j];
    }
    return out;
}

namespace {

// Everything both entry points need: pre-activations, the backward chain
// P_l = d score / d A_l (mask-gated), the per-sample input gradient G, and
// the scalar penalty.
struct PenaltyForward {
    std::vector<Tensor> pre;  // A_l, l = 0..L-1, each (B x h_l)
    std::vector<Tensor> p;    // P_l, same shapes
    Tensor g;                 // (B x d0) input gradients
    std::vector<double> norm;  // per-sample ||g_b||
    double penalty = 0.0;
};

PenaltyForward run_chains(JointCriticNet& c, const Tensor& xhat) {
    if (xhat.rank() != 2 || xhat.cols() != c.data_dim())
        throw ShapeError("gradient_penalty: batch " + xhat.shape_str() +
                         " does not match data dim " + std::to_string(c.data_dim()));
    const auto& k = active();
    const std::size_t B = xhat.rows();
    const std::size_t L = c.trunk.size();

    PenaltyForward f;
    f.pre.reserve(L);
    Tensor h = xhat;
    for (std::size_t l = 0; l < L; ++l) {
        const MlpLayer& lay = c.trunk[l];
        Tensor a = Tensor::zeros({B, lay.w.cols()});
        k.matmul_nn(h.data.data(), lay.w.data.data(), a.data.data(), B, lay.w.rows(),
                    lay.w.cols());
        k.add_rowvec(a.data.data(), lay.b.data.data(), B, lay.w.cols());
        h = Tensor::zeros(a.shape);
        k.leaky_relu(a.data.data(), c.slope, h.data.data(), a.numel());
        f.pre.push_back(std::move(a));
    }

    // P_L: score-head weight broadcast over the batch, gated by the last mask.
    f.p.resize(L);
    {
        const Tensor& a_last = f.pre[L - 1];
        Tensor wrow = Tensor::zeros(a_last.shape);
        k.add_rowvec(wrow.data.data(), c.score.w.data.data(), B, a_last.cols());
        f.p[L - 1] = Tensor::zeros(a_last.shape);
        k.leaky_mask_mul(a_last.data.data(), wrow.data.data(), c.slope,
                         f.p[L - 1].data.data(), a_last.numel());
    }
    for (std::size_t l = L - 1; l > 0; --l) {
        const MlpLayer& lay = c.trunk[l];
        const Tensor& a_prev = f.pre[l - 1];
        Tensor back = Tensor::zeros(a_prev.shape);
        k.matmul_nt_acc(f.p[l].data.data(), lay.w.data.data(), back.data.data(), B,
                        lay.w.cols(), lay.w.rows());
        f.p[l - 1] = Tensor::zeros(a_prev.shape);
        k.leaky_mask_mul(a_prev.data.data(), back.data.data(), c.slope,
                         f.p[l - 1].data.data(), a_prev.numel());
    }

    f.g = Tensor::zeros({B, c.data_dim()});
    k.matmul_nt_acc(f.p[0].data.data(), c.trunk[0].w.data.data(), f.g.data.data(), B,
                    c.trunk[0].w.cols(), c.trunk[0].w.rows());

    f.norm.resize(B);
    double acc = 0.0;
    const std::size_t d0 = c.data_dim();
    for (std::size_t b = 0; b < B; ++b) {
        const double* row = f.g.data.data() + b * d0;
        f.norm[b] = std::sqrt(k.dot(row, row, d0));
        double r = f.norm[b] - 1.0;
        acc += r * r;
    }
    f.penalty = acc / static_cast<double>(B);
    return f;
}

}  // namespace

double gradient_penalty_value(JointCriticNet& c, const Tensor& xhat) {
    return run_chains(c, xhat).penalty;
}

double gradient_penalty_backward(JointCriticNet& c, const Tensor& xhat, double coeff) {
    const auto& k = active();
    PenaltyForward f = run_chains(c, xhat);
    const std::size_t B = xhat.rows();
    const std::size_t L = c.trunk.size();
    const std::size_t d0 = c.data_dim();

    // U = d(coeff * penalty)/dG: row b = coeff * (2/B) * (n_b - 1)/n_b * g_b
    Tensor u = Tensor::zeros({B, d0});
    for (std::size_t b = 0; b < B; ++b) {
        double n = f.norm[b];
        if (n < 1e-12) continue;  // (n-1)^2 has vanishing gradient direction here
        double s = coeff * 2.0 / static_cast<double>(B) * (n - 1.0) / n;
        k.scale(f.g.data.data() + b * d0, s, u.data.data() + b * d0, d0);
    }

    // Forward chain C_l = mask_l((C_{l-1} W_l)), C_0 = U; every step pairs
    // with P_l for the weight gradient, and the top pairs with the score w.
    Tensor cprev = std::move(u);
    for (std::size_t l = 0; l < L; ++l) {
        MlpLayer& lay = c.trunk[l];
        lay.w.ensure_grad();
        k.matmul_tn_acc(cprev.data.data(), f.p[l].data.data(), lay.w.grad.data(), B,
                        lay.w.rows(), lay.w.cols());

        Tensor lin = Tensor::zeros({B, lay.w.cols()});
        k.matmul_nn(cprev.data.data(), lay.w.data.data(), lin.data.data(), B, lay.w.rows(),
                    lay.w.cols());
        Tensor cl = Tensor::zeros(lin.shape);
        k.leaky_mask_mul(f.pre[l].data.data(), lin.data.data(), c.slope, cl.data.data(),
                         lin.numel());
        cprev = std::move(cl);
    }
    c.score.w.ensure_grad();
    k.colsum_acc(cprev.data.data(), c.score.w.grad.data(), B, c.score.w.rows());
    return f.penalty;
}

}  // namespace gael
