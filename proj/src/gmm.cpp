#include "gael/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gael {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kVarFloor = 1e-6;
constexpr double kRespFloor = 1e-10;

// Lower-triangular Cholesky; false if the matrix is not positive definite.
bool cholesky(const double* a, double* l, std::size_t d) {
    for (std::size_t i = 0; i < d * d; ++i) l[i] = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a[i * d + j];
            for (std::size_t p = 0; p < j; ++p) s -= l[i * d + p] * l[j * d + p];
            if (i == j) {
                if (s <= 0.0) return false;
                l[i * d + i] = std::sqrt(s);
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    return true;
}

// Per-component quantities needed to evaluate log-densities quickly.
struct CompDensity {
    std::vector<double> chol;  // full mode: lower factor
    std::vector<double> inv_diag;  // diagonal mode: 1/var
    double log_norm = 0.0;         // -0.5*(d log 2pi + log det)
};

CompDensity prepare(const GmmModel& m, std::size_t comp) {
    CompDensity cd;
    std::size_t d = m.dim;
    if (m.cov_mode == CovMode::Full) {
        cd.chol.resize(d * d);
        if (!cholesky(m.cov(comp), cd.chol.data(), d))
            throw std::runtime_error("gmm: covariance of component " + std::to_string(comp) +
                                     " is not positive definite");
        double logdet = 0.0;
        for (std::size_t i = 0; i < d; ++i) logdet += 2.0 * std::log(cd.chol[i * d + i]);
        cd.log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
    } else {
        cd.inv_diag.resize(d);
        double logdet = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            double v = m.cov(comp)[i];
            cd.inv_diag[i] = 1.0 / v;
            logdet += std::log(v);
        }
        cd.log_norm = -0.5 * (static_cast<double>(d) * kLog2Pi + logdet);
    }
    return cd;
}

double log_density(const GmmModel& m, std::size_t comp, const CompDensity& cd, const double* x,
                   double* scratch) {
    std::size_t d = m.dim;
    const double* mu = m.mean(comp);
    if (m.cov_mode == CovMode::Full) {
        // solve L y = (x - mu), quad = |y|^2
        for (std::size_t i = 0; i < d; ++i) {
            double s = x[i] - mu[i];
            for (std::size_t p = 0; p < i; ++p) s -= cd.chol[i * d + p] * scratch[p];
            scratch[i] = s / cd.chol[i * d + i];
        }
        double quad = 0.0;
        for (std::size_t i = 0; i < d; ++i) quad += scratch[i] * scratch[i];
        return cd.log_norm - 0.5 * quad;
    }
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double r = x[i] - mu[i];
        quad += r * r * cd.inv_diag[i];
    }
    return cd.log_norm - 0.5 * quad;
}

void check_data(const Tensor& data) {
    if (data.rank() != 2 || data.rows() == 0 || data.cols() == 0)
        throw ShapeError("gmm: data must be a nonempty (n x d) matrix, got " + data.shape_str());
    if (!data.all_finite()) throw std::invalid_argument("gmm: data contains non-finite values");
}

// n x K matrix of log(pi_k) + log N(x | k).
std::vector<double> weighted_log_densities(const GmmModel& m, const Tensor& data) {
    std::size_t n = data.rows(), d = m.dim;
    std::vector<CompDensity> cds;
    cds.reserve(m.k);
    for (std::size_t c = 0; c < m.k; ++c) cds.push_back(prepare(m, c));
    std::vector<double> logw(m.k);
    for (std::size_t c = 0; c < m.k; ++c) logw[c] = std::log(m.weights[c]);
    std::vector<double> out(n * m.k);
    std::vector<double> scratch(d);
    for (std::size_t b = 0; b < n; ++b) {
        const double* x = data.data.data() + b * d;
        for (std::size_t c = 0; c < m.k; ++c)
            out[b * m.k + c] = logw[c] + log_density(m, c, cds[c], x, scratch.data());
    }
    return out;
}

double row_logsumexp(const double* row, std::size_t k) {
    double mx = row[0];
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, row[c]);
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(row[c] - mx);
    return mx + std::log(s);
}

// Dimension-wise mean and full covariance of the whole dataset (the
// initial / rescue component shape), floored.
void global_moments(const Tensor& data, std::vector<double>& mean, std::vector<double>& cov,
                    CovMode mode) {
    std::size_t n = data.rows(), d = data.cols();
    mean.assign(d, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < d; ++i) mean[i] += data.at(b, i);
    for (auto& v : mean) v /= static_cast<double>(n);
    if (mode == CovMode::Full) {
        cov.assign(d * d, 0.0);
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    cov[i * d + j] +=
                        (data.at(b, i) - mean[i]) * (data.at(b, j) - mean[j]);
        for (auto& v : cov) v /= static_cast<double>(n);
        for (std::size_t i = 0; i < d; ++i) cov[i * d + i] = std::max(cov[i * d + i], kVarFloor);
    } else {
        cov.assign(d, 0.0);
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < d; ++i) {
                double r = data.at(b, i) - mean[i];
                cov[i] += r * r;
            }
        for (auto& v : cov) v = std::max(v / static_cast<double>(n), kVarFloor);
    }
}

// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
// a (d x d, symmetric) is overwritten with garbage; on return eigvals holds
// the eigenvalues and vecs the corresponding orthonormal columns.
void jacobi_eigen(std::vector<double>& a, std::size_t d, std::vector<double>& eigvals,
                  std::vector<double>& vecs) {
    vecs.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) vecs[i * d + i] = 1.0;
    for (int sweep = 0; sweep < 50; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
        if (off <= 1e-30) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                double apq = a[p * d + q];
                if (apq == 0.0) continue;
                // rotation angle that zeroes a[p][q]
                double theta = 0.5 * (a[q * d + q] - a[p * d + p]) / apq;
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t i = 0; i < d; ++i) {
                    double aip = a[i * d + p], aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double api = a[p * d + i], aqi = a[q * d + i];
                    a[p * d + i] = c * api - s * aqi;
                    a[q * d + i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < d; ++i) {
                    double vip = vecs[i * d + p], viq = vecs[i * d + q];
                    vecs[i * d + p] = c * vip - s * viq;
                    vecs[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }
    eigvals.resize(d);
    for (std::size_t i = 0; i < d; ++i) eigvals[i] = a[i * d + i];
}

// Enforces the variance floor. Diagonal mode clips each variance; full mode
// clips the eigenvalues of the matrix at the floor and reconstructs. Doing
// this after every M-step (rather than repairing only outright Cholesky
// failures) matters for monotonicity: clipping is the exact maximizer of the
// expected complete-data log-likelihood over floor-respecting covariances,
// and it stops a collapsing component's likelihood spike before it forms.
void apply_floor(std::vector<double>& cov, std::size_t offset, std::size_t d, CovMode mode) {
    if (mode == CovMode::Diagonal) {
        for (std::size_t i = 0; i < d; ++i)
            cov[offset + i] = std::max(cov[offset + i], kVarFloor);
        return;
    }
    std::vector<double> work(cov.begin() + offset, cov.begin() + offset + d * d);
    std::vector<double> eigvals, vecs;
    jacobi_eigen(work, d, eigvals, vecs);
    bool clipped = false;
    for (double& v : eigvals) {
        if (v < kVarFloor) {
            v = kVarFloor;
            clipped = true;
        }
    }
    if (!clipped) return;  // leave well-conditioned matrices bit-untouched
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < d; ++p)
                s += vecs[i * d + p] * eigvals[p] * vecs[j * d + p];
            cov[offset + i * d + j] = s;
            cov[offset + j * d + i] = s;
        }
    }
}

GmmModel init_model(const Tensor& data, std::size_t k, CovMode mode, Rng& rng) {
    std::size_t n = data.rows(), d = data.cols();
    GmmModel m;
    m.k = k;
    m.dim = d;
    m.cov_mode = mode;
    m.weights.assign(k, 1.0 / static_cast<double>(k));

    // k-means++ seeding: first center uniform, the rest proportional to the
    // squared distance to the nearest already-chosen center.
    std::vector<std::size_t> centers;
    centers.push_back(rng.index(n));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (centers.size() < k) {
        const double* last = data.data.data() + centers.back() * d;
        double total = 0.0;
        for (std::size_t b = 0; b < n; ++b) {
            const double* x = data.data.data() + b * d;
            double s = 0.0;
            for (std::size_t i = 0; i < d; ++i) s += (x[i] - last[i]) * (x[i] - last[i]);
            d2[b] = std::min(d2[b], s);
            total += d2[b];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            double run = 0.0;
            pick = n - 1;
            for (std::size_t b = 0; b < n; ++b) {
                run += d2[b];
                if (run >= target) {
                    pick = b;
                    break;
                }
            }
        } else {
            pick = rng.index(n);  // all points identical to chosen centers
        }
        centers.push_back(pick);
    }

    m.means.resize(k * d);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t i = 0; i < d; ++i) m.means[c * d + i] = data.at(centers[c], i);

    std::vector<double> gmean, gcov;
    global_moments(data, gmean, gcov, mode);
    std::size_t cov_len = mode == CovMode::Full ? d * d : d;
    m.covs.resize(k * cov_len);
    for (std::size_t c = 0; c < k; ++c)
        std::copy(gcov.begin(), gcov.end(), m.covs.begin() + c * cov_len);
    for (std::size_t c = 0; c < k; ++c) apply_floor(m.covs, c * cov_len, d, mode);
    return m;
}

}  // namespace

Tensor e_step(const GmmModel& model, const Tensor& data) {
    check_data(data);
    if (data.cols() != model.dim)
        throw ShapeError("gmm e_step: data " + data.shape_str() + " vs model dim " +
                         std::to_string(model.dim));
    std::size_t n = data.rows(), k = model.k;
    auto logp = weighted_log_densities(model, data);
    Tensor resp = Tensor::zeros({n, k});
    for (std::size_t b = 0; b < n; ++b) {
        const double* row = logp.data() + b * k;
        double mx = row[0];
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, row[c]);
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += std::exp(row[c] - mx);
        for (std::size_t c = 0; c < k; ++c) resp.at(b, c) = std::exp(row[c] - mx) / s;
    }
    return resp;
}

GmmModel m_step(const Tensor& data, const Tensor& resp, const GmmModel& prev) {
    check_data(data);
    std::size_t n = data.rows(), d = data.cols(), k = prev.k;
    if (resp.rank() != 2 || resp.rows() != n || resp.cols() != k)
        throw ShapeError("gmm m_step: responsibilities " + resp.shape_str() +
                         " do not match (n x K)");

    GmmModel m;
    m.k = k;
    m.dim = d;
    m.cov_mode = prev.cov_mode;
    std::size_t cov_len = m.cov_mode == CovMode::Full ? d * d : d;
    m.weights.assign(k, 0.0);
    m.means.assign(k * d, 0.0);
    m.covs.assign(k * cov_len, 0.0);

    std::vector<double> nk(k, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t c = 0; c < k; ++c) nk[c] += resp.at(b, c);

    std::vector<std::size_t> degenerate;
    for (std::size_t c = 0; c < k; ++c) {
        if (nk[c] < kRespFloor) {
            degenerate.push_back(c);
            continue;
        }
        for (std::size_t b = 0; b < n; ++b) {
            double g = resp.at(b, c);
            for (std::size_t i = 0; i < d; ++i) m.means[c * d + i] += g * data.at(b, i);
        }
        for (std::size_t i = 0; i < d; ++i) m.means[c * d + i] /= nk[c];
        if (m.cov_mode == CovMode::Full) {
            for (std::size_t b = 0; b < n; ++b) {
                double g = resp.at(b, c);
                for (std::size_t i = 0; i < d; ++i) {
                    double ri = data.at(b, i) - m.means[c * d + i];
                    for (std::size_t j = 0; j <= i; ++j) {
                        double rj = data.at(b, j) - m.means[c * d + j];
                        m.covs[c * cov_len + i * d + j] += g * ri * rj;
                    }
                }
            }
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j <= i; ++j) {
                    double v = m.covs[c * cov_len + i * d + j] / nk[c];
                    m.covs[c * cov_len + i * d + j] = v;
                    m.covs[c * cov_len + j * d + i] = v;
                }
        } else {
            for (std::size_t b = 0; b < n; ++b) {
                double g = resp.at(b, c);
                for (std::size_t i = 0; i < d; ++i) {
                    double r = data.at(b, i) - m.means[c * d + i];
                    m.covs[c * cov_len + i] += g * r * r;
                }
            }
            for (std::size_t i = 0; i < d; ++i) m.covs[c * cov_len + i] /= nk[c];
        }
        apply_floor(m.covs, c * cov_len, d, m.cov_mode);
        m.weights[c] = nk[c] / static_cast<double>(n);
    }

    if (!degenerate.empty()) {
        // Rescue rule: re-seed each collapsed component at the sample the
        // healthy mixture explains worst, with the global covariance.
        double healthy_mass = 0.0;
        for (std::size_t c = 0; c < k; ++c) healthy_mass += m.weights[c];
        if (healthy_mass <= 0.0)
            throw std::runtime_error("gmm m_step: every component degenerate");

        std::vector<double> gmean, gcov;
        global_moments(data, gmean, gcov, m.cov_mode);

        // log-density of each sample under the healthy components only;
        // degenerate slots get placeholder parameters and vanishing weight
        // so they cannot influence the scoring.
        std::vector<char> used(n, 0);
        std::vector<double> dens(n);
        {
            GmmModel eval = m;
            for (std::size_t c = 0; c < k; ++c) eval.weights[c] = m.weights[c] / healthy_mass;
            for (std::size_t c : degenerate) {
                for (std::size_t i = 0; i < d; ++i) eval.means[c * d + i] = gmean[i];
                std::copy(gcov.begin(), gcov.end(), eval.covs.begin() + c * cov_len);
                apply_floor(eval.covs, c * cov_len, d, eval.cov_mode);
                eval.weights[c] = 1e-300;
            }
            auto logp = weighted_log_densities(eval, data);
            for (std::size_t b = 0; b < n; ++b) dens[b] = row_logsumexp(logp.data() + b * k, k);
        }

        for (std::size_t c : degenerate) {
            std::size_t worst = 0;
            double lowest = std::numeric_limits<double>::infinity();
            for (std::size_t b = 0; b < n; ++b) {
                if (used[b]) continue;
                if (dens[b] < lowest) {
                    lowest = dens[b];
                    worst = b;
                }
            }
            used[worst] = 1;
            for (std::size_t i = 0; i < d; ++i) m.means[c * d + i] = data.at(worst, i);
            std::copy(gcov.begin(), gcov.end(), m.covs.begin() + c * cov_len);
            apply_floor(m.covs, c * cov_len, d, m.cov_mode);
            m.weights[c] = 1.0 / static_cast<double>(n);
        }
    }

    // Weight invariant: strictly positive and normalized.
    double wsum = 0.0;
    for (auto& w : m.weights) w = std::max(w, 1e-12);
    for (double w : m.weights) wsum += w;
    for (auto& w : m.weights) w /= wsum;
    return m;
}

double log_likelihood(const GmmModel& model, const Tensor& data) {
    check_data(data);
    auto logp = weighted_log_densities(model, data);
    double total = 0.0;
    for (std::size_t b = 0; b < data.rows(); ++b)
        total += row_logsumexp(logp.data() + b * model.k, model.k);
    return total;
}

GmmFitResult fit_em(const Tensor& data, std::size_t k, const GmmFitConfig& cfg) {
    check_data(data);
    if (k == 0) throw std::invalid_argument("gmm fit_em: k must be positive");
    if (data.rows() < k)
        throw std::invalid_argument("gmm fit_em: need at least K samples, have " +
                                    std::to_string(data.rows()));

    Rng rng(cfg.seed);
    GmmFitResult best;
    bool have_best = false;
    std::size_t restarts = std::max<std::size_t>(1, cfg.n_restarts);
    double n = static_cast<double>(data.rows());

    for (std::size_t r = 0; r < restarts; ++r) {
        GmmModel m = init_model(data, k, cfg.cov_mode, rng);
        std::vector<double> history;
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (std::size_t it = 0; it < cfg.max_iters; ++it) {
            Tensor resp = e_step(m, data);
            m = m_step(data, resp, m);
            double ll = log_likelihood(m, data);
            history.push_back(ll);
            if (std::isfinite(prev_ll) && (ll - prev_ll) / n < cfg.tol) {
                prev_ll = ll;
                break;
            }
            prev_ll = ll;
        }
        if (!have_best || prev_ll > best.log_likelihood) {
            best.model = std::move(m);
            best.log_likelihood = prev_ll;
            best.ll_history = std::move(history);
            have_best = true;
        }
    }
    return best;
}

GmmDraw sample(const GmmModel& model, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("gmm sample: n must be positive");
    std::size_t d = model.dim;
    Rng rng(seed);

    // Cholesky factors (full) / standard deviations (diagonal) per component.
    std::vector<std::vector<double>> factor(model.k);
    for (std::size_t c = 0; c < model.k; ++c) {
        if (model.cov_mode == CovMode::Full) {
            factor[c].resize(d * d);
            if (!cholesky(model.cov(c), factor[c].data(), d))
                throw std::runtime_error("gmm sample: component covariance not positive definite");
        } else {
            factor[c].resize(d);
            for (std::size_t i = 0; i < d; ++i) factor[c][i] = std::sqrt(model.cov(c)[i]);
        }
    }

    GmmDraw out;
    out.points = Tensor::zeros({n, d});
    out.labels.resize(n);
    std::vector<double> z(d);
    for (std::size_t s = 0; s < n; ++s) {
        double u = rng.uniform();
        double run = 0.0;
        std::size_t comp = model.k - 1;
        for (std::size_t c = 0; c < model.k; ++c) {
            run += model.weights[c];
            if (u < run) {
                comp = c;
                break;
            }
        }
        out.labels[s] = static_cast<int>(comp);
        for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
        const double* mu = model.mean(comp);
        double* row = out.points.data.data() + s * d;
        if (model.cov_mode == CovMode::Full) {
            const double* l = factor[comp].data();
            for (std::size_t i = 0; i < d; ++i) {
                double acc = mu[i];
                for (std::size_t j = 0; j <= i; ++j) acc += l[i * d + j] * z[j];
                row[i] = acc;
            }
        } else {
            for (std::size_t i = 0; i < d; ++i) row[i] = mu[i] + factor[comp][i] * z[i];
        }
    }
    return out;
}

std::vector<int> predict(const GmmModel& model, const Tensor& data) {
    check_data(data);
    if (data.cols() != model.dim)
        throw ShapeError("gmm predict: data " + data.shape_str() + " vs model dim " +
                         std::to_string(model.dim));
    auto logp = weighted_log_densities(model, data);
    std::vector<int> labels(data.rows());
    for (std::size_t b = 0; b < data.rows(); ++b) {
        const double* row = logp.data() + b * model.k;
        std::size_t arg = 0;
        for (std::size_t c = 1; c < model.k; ++c)
            if (row[c] > row[arg]) arg = c;
        labels[b] = static_cast<int>(arg);
    }
    return labels;
}

}  // namespace gael
