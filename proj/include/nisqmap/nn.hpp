#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nisqmap/tensor.hpp"

namespace nisqmap::nn {

using ad::Param;
using ad::Ref;
using ad::Tape;
using ad::Tensor;

inline void init_uniform_fanin(Param& p, int fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : p.value.d) x = rng.uniform(-bound, bound);
}

struct Linear {
    Param w;  // (in x out)
    Param b;  // (1 x out)

    Linear() = default;
    Linear(const std::string& name, int in, int out, Rng& rng, bool decay = false)
        : w(name + ".w", in, out, decay), b(name + ".b", 1, out, decay) {
        init_uniform_fanin(w, in, rng);
        init_uniform_fanin(b, in, rng);
    }

    Ref forward(Tape& t, Ref x) {
        return t.add_rowvec(t.matmul(x, t.param(w)), t.param(b));
    }

    void collect(std::vector<Param*>& ps) {
        ps.push_back(&w);
        ps.push_back(&b);
    }
};

/// Factorized-Gaussian noisy linear layer. In noisy mode the effective
/// weights are mu + sigma (*) (f(eps_in) x f(eps_out)); with the noise (or
/// all sigma parameters) zeroed it reduces to the plain layer bit-exactly.
struct NoisyLinear {
    Param w_mu, w_sigma;  // (in x out)
    Param b_mu, b_sigma;  // (1 x out)

    NoisyLinear() = default;
    NoisyLinear(const std::string& name, int in, int out, double sigma0, Rng& rng)
        : w_mu(name + ".w_mu", in, out), w_sigma(name + ".w_sigma", in, out),
          b_mu(name + ".b_mu", 1, out), b_sigma(name + ".b_sigma", 1, out) {
        init_uniform_fanin(w_mu, in, rng);
        init_uniform_fanin(b_mu, in, rng);
        double s = sigma0 / std::sqrt(static_cast<double>(in));
        for (double& x : w_sigma.value.d) x = s;
        for (double& x : b_sigma.value.d) x = s;
    }

    Ref forward(Tape& t, Ref x, bool noisy, Rng& rng) {
        if (!noisy) return t.add_rowvec(t.matmul(x, t.param(w_mu)), t.param(b_mu));
        const int in = w_mu.value.r, out = w_mu.value.c;
        auto f = [](double v) { return (v < 0 ? -1.0 : 1.0) * std::sqrt(std::fabs(v)); };
        std::vector<double> ein(in), eout(out);
        for (double& v : ein) v = f(rng.normal());
        for (double& v : eout) v = f(rng.normal());
        Tensor wn(in, out);
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) wn.at(i, j) = ein[i] * eout[j];
        Tensor bn(1, out);
        for (int j = 0; j < out; ++j) bn.at(0, j) = eout[j];
        Ref w_eff = t.add(t.param(w_mu), t.mul_const(t.param(w_sigma), std::move(wn)));
        Ref b_eff = t.add(t.param(b_mu), t.mul_const(t.param(b_sigma), std::move(bn)));
        return t.add_rowvec(t.matmul(x, w_eff), b_eff);
    }

    void collect(std::vector<Param*>& ps) {
        ps.push_back(&w_mu);
        ps.push_back(&w_sigma);
        ps.push_back(&b_mu);
        ps.push_back(&b_sigma);
    }
};

/// Batch normalization over columns. Train mode requires batch >= 2 and
/// updates running statistics (momentum 0.9); infer mode uses the frozen
/// running statistics.
struct BatchNorm {
    Param gamma, beta;
    Tensor run_mean, run_var;
    double momentum = 0.9;
    double eps = 1e-5;

    BatchNorm() = default;
    BatchNorm(const std::string& name, int dim, bool decay = false)
        : gamma(name + ".gamma", 1, dim, decay), beta(name + ".beta", 1, dim, decay),
          run_mean(1, dim), run_var(1, dim) {
        for (double& x : gamma.value.d) x = 1.0;
        for (double& x : run_var.d) x = 1.0;
    }

    Ref forward(Tape& t, Ref x, bool train) {
        const int b = x->val.r, dim = x->val.c;
        if (dim != gamma.value.c) throw ShapeError("batchnorm: feature dim mismatch");
        if (train) {
            if (b < 2) throw ContractError("batchnorm: train mode requires batch size >= 2");
            Tensor mu(1, dim), var(1, dim);
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < dim; ++j) mu.at(0, j) += x->val.at(i, j);
            for (double& v : mu.d) v /= b;
            for (int i = 0; i < b; ++i)
                for (int j = 0; j < dim; ++j) {
                    double d = x->val.at(i, j) - mu.at(0, j);
                    var.at(0, j) += d * d;
                }
            for (double& v : var.d) v /= b;
            for (int j = 0; j < dim; ++j) {
                run_mean.at(0, j) = momentum * run_mean.at(0, j) + (1 - momentum) * mu.at(0, j);
                run_var.at(0, j) = momentum * run_var.at(0, j) + (1 - momentum) * var.at(0, j);
            }
            Ref xhat = batch_normalize(t, x, mu, var);
            return t.add_rowvec(row_scale(t, xhat, t.param(gamma)), t.param(beta));
        }
        // infer: affine transform with frozen constants
        Tensor inv_std(1, dim), shift(1, dim);
        for (int j = 0; j < dim; ++j) inv_std.at(0, j) = 1.0 / std::sqrt(run_var.at(0, j) + eps);
        Tensor neg_mean_scaled(1, dim);
        for (int j = 0; j < dim; ++j) neg_mean_scaled.at(0, j) = -run_mean.at(0, j) * inv_std.at(0, j);
        Tensor inv_full(b, dim), off_full(b, dim);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < dim; ++j) {
                inv_full.at(i, j) = inv_std.at(0, j);
                off_full.at(i, j) = neg_mean_scaled.at(0, j);
            }
        Ref xhat = t.add_const(t.mul_const(x, std::move(inv_full)), off_full);
        return t.add_rowvec(row_scale(t, xhat, t.param(gamma)), t.param(beta));
    }

    void collect(std::vector<Param*>& ps) {
        ps.push_back(&gamma);
        ps.push_back(&beta);
    }

private:
    // y = x * broadcast_row(g)
    static Ref row_scale(Tape& t, Ref x, Ref g) {
        Tensor ones(x->val.r, 1);
        for (double& v : ones.d) v = 1.0;
        Ref expanded = t.matmul(t.constant(std::move(ones)), g);  // (b x dim)
        return t.mul(x, expanded);
    }

    // dedicated node for the train-mode normalization with full backward
    Ref batch_normalize(Tape& t, Ref x, const Tensor& mu, const Tensor& var) {
        const int b = x->val.r, dim = x->val.c;
        Tensor out(b, dim);
        Tensor inv_std(1, dim);
        for (int j = 0; j < dim; ++j) inv_std.at(0, j) = 1.0 / std::sqrt(var.at(0, j) + eps);
        for (int i = 0; i < b; ++i)
            for (int j = 0; j < dim; ++j)
                out.at(i, j) = (x->val.at(i, j) - mu.at(0, j)) * inv_std.at(0, j);
        Ref xhat = t.constant(std::move(out));
        Ref xr = x;
        Ref nh = xhat;
        Tensor mu_c = mu, ist_c = inv_std;
        nh->back = [nh, xr, mu_c, ist_c, b, dim] {
            // standard batch-norm backward through batch statistics
            for (int j = 0; j < dim; ++j) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int i = 0; i < b; ++i) {
                    sum_dy += nh->grad.at(i, j);
                    sum_dy_xhat += nh->grad.at(i, j) * nh->val.at(i, j);
                }
                for (int i = 0; i < b; ++i) {
                    double dy = nh->grad.at(i, j);
                    double xh = nh->val.at(i, j);
                    xr->grad.at(i, j) +=
                        ist_c.at(0, j) * (dy - sum_dy / b - xh * sum_dy_xhat / b);
                }
            }
        };
        return xhat;
    }
};

/// Standard gated LSTM cell parameters, gate order [i, f, g, o].
/// Forget-gate bias initialized to +1.
struct LstmParams {
    Param wx;  // (in x 4h)
    Param wh;  // (h x 4h)
    Param b;   // (1 x 4h)
    int hidden = 0;

    LstmParams() = default;
    LstmParams(const std::string& name, int in, int h, Rng& rng, bool decay = false)
        : wx(name + ".wx", in, 4 * h, decay), wh(name + ".wh", h, 4 * h, decay),
          b(name + ".b", 1, 4 * h, decay), hidden(h) {
        init_uniform_fanin(wx, in, rng);
        init_uniform_fanin(wh, h, rng);
        init_uniform_fanin(b, in, rng);
        for (int j = h; j < 2 * h; ++j) b.value.at(0, j) += 1.0;
    }

    /// One step: x (batch x in), h/c (batch x hidden) -> (h', c').
    std::pair<Ref, Ref> step(Tape& t, Ref x, Ref h_prev, Ref c_prev) {
        const int h = hidden;
        Ref gates = t.add_rowvec(
            t.add(t.matmul(x, t.param(wx)), t.matmul(h_prev, t.param(wh))), t.param(b));
        Ref i = t.sigmoid(t.slice_cols(gates, 0, h));
        Ref f = t.sigmoid(t.slice_cols(gates, h, 2 * h));
        Ref g = t.tanh(t.slice_cols(gates, 2 * h, 3 * h));
        Ref o = t.sigmoid(t.slice_cols(gates, 3 * h, 4 * h));
        Ref c = t.add(t.mul(f, c_prev), t.mul(i, g));
        Ref hn = t.mul(o, t.tanh(c));
        return {hn, c};
    }

    /// Unroll over a sequence (vector of batch x in inputs); returns per-step
    /// hidden states. reverse=true scans the sequence back to front and
    /// returns outputs aligned with the input order.
    std::vector<Ref> unroll(Tape& t, const std::vector<Ref>& xs, bool reverse = false) {
        const int batch = xs.at(0)->val.r;
        Ref h = t.constant(Tensor(batch, hidden));
        Ref c = t.constant(Tensor(batch, hidden));
        std::vector<Ref> out(xs.size());
        if (!reverse) {
            for (size_t s = 0; s < xs.size(); ++s) {
                auto [hn, cn] = step(t, xs[s], h, c);
                h = hn;
                c = cn;
                out[s] = hn;
            }
        } else {
            for (size_t s = xs.size(); s-- > 0;) {
                auto [hn, cn] = step(t, xs[s], h, c);
                h = hn;
                c = cn;
                out[s] = hn;
            }
        }
        return out;
    }

    void collect(std::vector<Param*>& ps) {
        ps.push_back(&wx);
        ps.push_back(&wh);
        ps.push_back(&b);
    }
};

/// Cosine-annealed learning rate, lr(0) = lr_max, lr(total) = lr_min.
inline double cosine_lr(int epoch, int total, double lr_max = 1e-3, double lr_min = 1e-5) {
    if (total <= 0) return lr_max;
    double e = std::clamp(static_cast<double>(epoch) / total, 0.0, 1.0);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * e));
}

/// AdamW-style optimizer: global-norm gradient clip, decoupled weight decay
/// on flagged parameters, bias-corrected moments.
struct AdamW {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double clip_norm = 1.0;
    double weight_decay = 1e-5;
    long step_count = 0;

    void step(const std::vector<Param*>& params, double lr) {
        double sq = 0.0;
        for (Param* p : params) {
            for (double g : p->grad.d) {
                if (!std::isfinite(g))
                    throw NumericError("non-finite gradient in parameter '" + p->name + "'");
                sq += g * g;
            }
        }
        double norm = std::sqrt(sq);
        double scale = (clip_norm > 0.0 && norm > clip_norm) ? clip_norm / norm : 1.0;
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (Param* p : params) {
            for (size_t i = 0; i < p->value.size(); ++i) {
                double g = p->grad.d[i] * scale;
                p->m.d[i] = beta1 * p->m.d[i] + (1 - beta1) * g;
                p->v.d[i] = beta2 * p->v.d[i] + (1 - beta2) * g * g;
                double mhat = p->m.d[i] / bc1;
                double vhat = p->v.d[i] / bc2;
                p->value.d[i] -= lr * mhat / (std::sqrt(vhat) + eps);
                if (p->weight_decay && weight_decay > 0.0)
                    p->value.d[i] -= lr * weight_decay * p->value.d[i];
            }
            p->zero_grad();
        }
    }
};

inline void zero_grads(const std::vector<Param*>& params) {
    for (Param* p : params) p->zero_grad();
}

inline double l2_norm_squared(const std::vector<Param*>& params) {
    double s = 0.0;
    for (const Param* p : params)
        for (double x : p->value.d) s += x * x;
    return s;
}

}  // namespace nisqmap::nn
