#include "gael/autodiff.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "gael/kernels.hpp"

namespace gael::ad {

using kernels::active;

double softplus_stable(double x) {
    // log(1 + e^x) without overflow: for x > 0, x + log1p(e^-x).
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid_stable(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_str() + " and " + b.shape_str() +
                     " do not conform");
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2)
        throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " + t.shape_str());
}

}  // namespace

ValueId Tape::push(Node n) {
    if (nodes_.size() >= 0xffffffffu) throw std::length_error("Tape: too many nodes");
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
}

ValueId Tape::leaf(const Tensor& t, bool requires_grad) {
    Node n;
    n.kind = OpKind::Leaf;
    n.value = t;
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

ValueId Tape::param(Tensor& t) {
    auto it = bound_ids_.find(&t);
    if (it != bound_ids_.end()) return it->second;
    Node n;
    n.kind = OpKind::Leaf;
    n.value = t;
    n.needs_grad = t.requires_grad;
    n.bound = &t;
    ValueId id = push(std::move(n));
    bound_ids_.emplace(&t, id);
    return id;
}

// --- shape checking + eager forward ---------------------------------------

Tensor Tape::compute(const Node& n) const {
    const auto& k = active();
    switch (n.kind) {
        case OpKind::Leaf:
            return n.value;
        case OpKind::Add:
        case OpKind::Sub:
        case OpKind::MulElem: {
            const Tensor& a = node(n.a).value;
            const Tensor& b = node(n.b).value;
            Tensor out = Tensor::zeros(a.shape);
            if (n.kind == OpKind::Add) k.add(a.data.data(), b.data.data(), out.data.data(), a.numel());
            else if (n.kind == OpKind::Sub) k.sub(a.data.data(), b.data.data(), out.data.data(), a.numel());
            else k.mul(a.data.data(), b.data.data(), out.data.data(), a.numel());
            return out;
        }
        case OpKind::MatMul: {
            const Tensor& a = node(n.a).value;
            const Tensor& b = node(n.b).value;
            Tensor out = Tensor::zeros({a.rows(), b.cols()});
            k.matmul_nn(a.data.data(), b.data.data(), out.data.data(), a.rows(), a.cols(),
                        b.cols());
            return out;
        }
        case OpKind::Affine: {
            const Tensor& x = node(n.a).value;
            const Tensor& w = node(n.b).value;
            const Tensor& bias = node(n.c).value;
            Tensor out = Tensor::zeros({x.rows(), w.cols()});
            k.matmul_nn(x.data.data(), w.data.data(), out.data.data(), x.rows(), x.cols(),
                        w.cols());
            k.add_rowvec(out.data.data(), bias.data.data(), x.rows(), w.cols());
            return out;
        }
        case OpKind::Broadcast: {
            const Tensor& v = node(n.a).value;
            std::size_t rows = static_cast<std::size_t>(n.scalar_arg);
            Tensor out = Tensor::zeros({rows, v.numel()});
            k.add_rowvec(out.data.data(), v.data.data(), rows, v.numel());
            return out;
        }
        case OpKind::LeakyRelu: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            k.leaky_relu(x.data.data(), n.scalar_arg, out.data.data(), x.numel());
            return out;
        }
        case OpKind::Tanh: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            for (std::size_t i = 0; i < x.numel(); ++i) out.data[i] = std::tanh(x.data[i]);
            return out;
        }
        case OpKind::Exp: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            for (std::size_t i = 0; i < x.numel(); ++i) out.data[i] = std::exp(x.data[i]);
            return out;
        }
        case OpKind::Log: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            for (std::size_t i = 0; i < x.numel(); ++i) {
                if (!(x.data[i] > 0.0))
                    throw std::domain_error("log: non-positive input " +
                                            std::to_string(x.data[i]));
                out.data[i] = std::log(x.data[i]);
            }
            return out;
        }
        case OpKind::Square: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            k.mul(x.data.data(), x.data.data(), out.data.data(), x.numel());
            return out;
        }
        case OpKind::Softplus: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            for (std::size_t i = 0; i < x.numel(); ++i) out.data[i] = softplus_stable(x.data[i]);
            return out;
        }
        case OpKind::Scale: {
            const Tensor& x = node(n.a).value;
            Tensor out = Tensor::zeros(x.shape);
            k.scale(x.data.data(), n.scalar_arg, out.data.data(), x.numel());
            return out;
        }
        case OpKind::Sum: {
            const Tensor& x = node(n.a).value;
            return Tensor::scalar(k.reduce_sum(x.data.data(), x.numel()));
        }
        case OpKind::Mean: {
            const Tensor& x = node(n.a).value;
            return Tensor::scalar(k.reduce_sum(x.data.data(), x.numel()) /
                                  static_cast<double>(x.numel()));
        }
    }
    throw std::logic_error("Tape::compute: unknown op");
}

namespace {
Node make_node(OpKind kind, ValueId a, ValueId b, ValueId c, std::uint8_t arity, double s) {
    Node n;
    n.kind = kind;
    n.a = a;
    n.b = b;
    n.c = c;
    n.arity = arity;
    n.scalar_arg = s;
    return n;
}
}  // namespace

ValueId Tape::add(ValueId x, ValueId y) {
    if (!node(x).value.same_shape(node(y).value)) shape_fail("add", node(x).value, node(y).value);
    Node n = make_node(OpKind::Add, x, y, 0, 2, 0.0);
    n.needs_grad = node(x).needs_grad || node(y).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::sub(ValueId x, ValueId y) {
    if (!node(x).value.same_shape(node(y).value)) shape_fail("sub", node(x).value, node(y).value);
    Node n = make_node(OpKind::Sub, x, y, 0, 2, 0.0);
    n.needs_grad = node(x).needs_grad || node(y).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::mul(ValueId x, ValueId y) {
    if (!node(x).value.same_shape(node(y).value))
        shape_fail("mul_elem", node(x).value, node(y).value);
    Node n = make_node(OpKind::MulElem, x, y, 0, 2, 0.0);
    n.needs_grad = node(x).needs_grad || node(y).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::matmul(ValueId x, ValueId y) {
    require_rank2("matmul", node(x).value);
    require_rank2("matmul", node(y).value);
    if (node(x).value.cols() != node(y).value.rows())
        shape_fail("matmul", node(x).value, node(y).value);
    Node n = make_node(OpKind::MatMul, x, y, 0, 2, 0.0);
    n.needs_grad = node(x).needs_grad || node(y).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::affine(ValueId x, ValueId w, ValueId bias) {
    require_rank2("affine", node(x).value);
    require_rank2("affine", node(w).value);
    if (node(x).value.cols() != node(w).value.rows())
        shape_fail("affine", node(x).value, node(w).value);
    if (node(bias).value.rank() != 1 || node(bias).value.numel() != node(w).value.cols())
        shape_fail("affine bias", node(bias).value, node(w).value);
    Node n = make_node(OpKind::Affine, x, w, bias, 3, 0.0);
    n.needs_grad = node(x).needs_grad || node(w).needs_grad || node(bias).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::broadcast(ValueId rowvec, std::size_t rows) {
    if (node(rowvec).value.rank() != 1)
        throw ShapeError("broadcast: expected a rank-1 tensor, got " +
                         node(rowvec).value.shape_str());
    if (rows == 0) throw ShapeError("broadcast: zero rows");
    Node n = make_node(OpKind::Broadcast, rowvec, 0, 0, 1, static_cast<double>(rows));
    n.needs_grad = node(rowvec).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::leaky_relu(ValueId x, double slope) {
    Node n = make_node(OpKind::LeakyRelu, x, 0, 0, 1, slope);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::tanh(ValueId x) {
    Node n = make_node(OpKind::Tanh, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::exp(ValueId x) {
    Node n = make_node(OpKind::Exp, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::log(ValueId x) {
    Node n = make_node(OpKind::Log, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::square(ValueId x) {
    Node n = make_node(OpKind::Square, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::softplus(ValueId x) {
    Node n = make_node(OpKind::Softplus, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::scale(ValueId x, double c) {
    Node n = make_node(OpKind::Scale, x, 0, 0, 1, c);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::sum(ValueId x) {
    Node n = make_node(OpKind::Sum, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

ValueId Tape::mean(ValueId x) {
    Node n = make_node(OpKind::Mean, x, 0, 0, 1, 0.0);
    n.needs_grad = node(x).needs_grad;
    n.value = compute(n);
    return push(std::move(n));
}

// --- backward --------------------------------------------------------------

std::vector<double> Tape::grad(ValueId id) const {
    const Node& n = node(id);
    if (n.grad.empty()) return std::vector<double>(n.value.numel(), 0.0);
    return n.grad;
}

void Tape::backward(ValueId root) {
    const Node& r = node(root);
    if (r.value.numel() != 1)
        throw ShapeError("backward: root must be a scalar, got " + r.value.shape_str());

    for (auto& n : nodes_) n.grad.clear();
    auto ensure = [&](ValueId id) -> std::vector<double>& {
        Node& n = nodes_[id];
        if (n.grad.empty()) n.grad.assign(n.value.numel(), 0.0);
        return n.grad;
    };
    ensure(root)[0] = 1.0;

    const auto& k = active();
    for (ValueId id = root + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.needs_grad || n.grad.empty()) continue;
        const double* g = n.grad.data();
        switch (n.kind) {
            case OpKind::Leaf:
                break;
            case OpKind::Add: {
                if (nodes_[n.a].needs_grad) k.acc(g, ensure(n.a).data(), n.value.numel());
                if (nodes_[n.b].needs_grad) k.acc(g, ensure(n.b).data(), n.value.numel());
                break;
            }
            case OpKind::Sub: {
                if (nodes_[n.a].needs_grad) k.acc(g, ensure(n.a).data(), n.value.numel());
                if (nodes_[n.b].needs_grad)
                    k.scale_acc(g, -1.0, ensure(n.b).data(), n.value.numel());
                break;
            }
            case OpKind::MulElem: {
                if (nodes_[n.a].needs_grad)
                    k.mul_acc(g, nodes_[n.b].value.data.data(), ensure(n.a).data(),
                              n.value.numel());
                if (nodes_[n.b].needs_grad)
                    k.mul_acc(g, nodes_[n.a].value.data.data(), ensure(n.b).data(),
                              n.value.numel());
                break;
            }
            case OpKind::MatMul: {
                const Tensor& a = nodes_[n.a].value;
                const Tensor& b = nodes_[n.b].value;
                std::size_t m = a.rows(), kk = a.cols(), nn = b.cols();
                if (nodes_[n.a].needs_grad)
                    k.matmul_nt_acc(g, b.data.data(), ensure(n.a).data(), m, nn, kk);
                if (nodes_[n.b].needs_grad)
                    k.matmul_tn_acc(a.data.data(), g, ensure(n.b).data(), m, kk, nn);
                break;
            }
            case OpKind::Affine: {
                const Tensor& x = nodes_[n.a].value;
                const Tensor& w = nodes_[n.b].value;
                std::size_t m = x.rows(), kk = x.cols(), nn = w.cols();
                if (nodes_[n.a].needs_grad)
                    k.matmul_nt_acc(g, w.data.data(), ensure(n.a).data(), m, nn, kk);
                if (nodes_[n.b].needs_grad)
                    k.matmul_tn_acc(x.data.data(), g, ensure(n.b).data(), m, kk, nn);
                if (nodes_[n.c].needs_grad) k.colsum_acc(g, ensure(n.c).data(), m, nn);
                break;
            }
            case OpKind::Broadcast: {
                const Tensor& v = nodes_[n.a].value;
                std::size_t rows = n.value.rows();
                if (nodes_[n.a].needs_grad)
                    k.colsum_acc(g, ensure(n.a).data(), rows, v.numel());
                break;
            }
            case OpKind::LeakyRelu: {
                if (nodes_[n.a].needs_grad)
                    k.leaky_relu_grad_acc(nodes_[n.a].value.data.data(), g, n.scalar_arg,
                                          ensure(n.a).data(), n.value.numel());
                break;
            }
            case OpKind::Tanh: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                const auto& y = n.value.data;
                for (std::size_t i = 0; i < y.size(); ++i)
                    ga[i] = std::fma(g[i], 1.0 - y[i] * y[i], ga[i]);
                break;
            }
            case OpKind::Exp: {
                if (!nodes_[n.a].needs_grad) break;
                k.mul_acc(g, n.value.data.data(), ensure(n.a).data(), n.value.numel());
                break;
            }
            case OpKind::Log: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                const auto& x = nodes_[n.a].value.data;
                for (std::size_t i = 0; i < x.size(); ++i) ga[i] += g[i] / x[i];
                break;
            }
            case OpKind::Square: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                const auto& x = nodes_[n.a].value.data;
                for (std::size_t i = 0; i < x.size(); ++i)
                    ga[i] = std::fma(g[i], 2.0 * x[i], ga[i]);
                break;
            }
            case OpKind::Softplus: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                const auto& x = nodes_[n.a].value.data;
                for (std::size_t i = 0; i < x.size(); ++i)
                    ga[i] = std::fma(g[i], sigmoid_stable(x[i]), ga[i]);
                break;
            }
            case OpKind::Scale: {
                if (nodes_[n.a].needs_grad)
                    k.scale_acc(g, n.scalar_arg, ensure(n.a).data(), n.value.numel());
                break;
            }
            case OpKind::Sum: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                double g0 = g[0];
                for (auto& v : ga) v += g0;
                break;
            }
            case OpKind::Mean: {
                if (!nodes_[n.a].needs_grad) break;
                auto& ga = ensure(n.a);
                double g0 = g[0] / static_cast<double>(ga.size());
                for (auto& v : ga) v += g0;
                break;
            }
        }
    }

    for (auto& n : nodes_) {
        if (n.bound && n.needs_grad && !n.grad.empty()) {
            n.bound->ensure_grad();
            k.acc(n.grad.data(), n.bound->grad.data(), n.grad.size());
        }
    }
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        if (n.kind == OpKind::Leaf) continue;
        Tensor again = compute(n);
        if (again.shape != n.value.shape) return false;
        if (std::memcmp(again.data.data(), n.value.data.data(),
                        again.numel() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

void Tape::clear() {
    nodes_.clear();
    bound_ids_.clear();
}

}  // namespace gael::ad
