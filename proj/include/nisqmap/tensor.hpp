#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "nisqmap/errors.hpp"
#include "nisqmap/rng.hpp"

namespace nisqmap::ad {

/// Dense row-major 2-D tensor of doubles. Vectors are 1 x n rows.
struct Tensor {
    int r = 0, c = 0;
    std::vector<double> d;

    Tensor() = default;
    Tensor(int rows, int cols) : r(rows), c(cols), d(static_cast<size_t>(rows) * cols, 0.0) {}

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        std::fill(t.d.begin(), t.d.end(), v);
        return t;
    }
    static Tensor row(std::vector<double> v) {
        Tensor t;
        t.r = 1;
        t.c = static_cast<int>(v.size());
        t.d = std::move(v);
        return t;
    }

    double& at(int i, int j) { return d[static_cast<size_t>(i) * c + j]; }
    double at(int i, int j) const { return d[static_cast<size_t>(i) * c + j]; }
    size_t size() const { return d.size(); }
    bool same_shape(const Tensor& o) const { return r == o.r && c == o.c; }

    bool all_finite() const {
        for (double x : d)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

namespace kernels {

// C += A(m x k) * B(k x n)
inline void mm(Tensor& C, const Tensor& A, const Tensor& B) {
    const int m = A.r, k = A.c, n = B.c;
    for (int i = 0; i < m; ++i) {
        const double* a = &A.d[static_cast<size_t>(i) * k];
        double* crow = &C.d[static_cast<size_t>(i) * n];
        for (int p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) continue;
            const double* b = &B.d[static_cast<size_t>(p) * n];
            for (int j = 0; j < n; ++j) crow[j] += av * b[j];
        }
    }
}

// C += A(m x k) * B(n x k)^T
inline void mm_nt(Tensor& C, const Tensor& A, const Tensor& B) {
    const int m = A.r, k = A.c, n = B.r;
    for (int i = 0; i < m; ++i) {
        const double* a = &A.d[static_cast<size_t>(i) * k];
        double* crow = &C.d[static_cast<size_t>(i) * n];
        for (int j = 0; j < n; ++j) {
            const double* b = &B.d[static_cast<size_t>(j) * k];
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += a[p] * b[p];
            crow[j] += s;
        }
    }
}

// C += A(k x m)^T * B(k x n)
inline void mm_tn(Tensor& C, const Tensor& A, const Tensor& B) {
    const int k = A.r, m = A.c, n = B.c;
    for (int p = 0; p < k; ++p) {
        const double* a = &A.d[static_cast<size_t>(p) * m];
        const double* b = &B.d[static_cast<size_t>(p) * n];
        for (int i = 0; i < m; ++i) {
            const double av = a[i];
            if (av == 0.0) continue;
            double* crow = &C.d[static_cast<size_t>(i) * n];
            for (int j = 0; j < n; ++j) crow[j] += av * b[j];
        }
    }
}

}  // namespace kernels

/// Learnable parameter: value plus gradient accumulator (grads add across
/// backward passes until the optimizer consumes them).
struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool weight_decay = false;  // decoupled decay applies where the DNA loss does
    Tensor m, v;                // Adam moments

    Param() = default;
    Param(std::string n, int rows, int cols, bool decay = false)
        : name(std::move(n)), value(rows, cols), grad(rows, cols), weight_decay(decay),
          m(rows, cols), v(rows, cols) {}

    void zero_grad() { std::fill(grad.d.begin(), grad.d.end(), 0.0); }
};

struct Node {
    Tensor val;
    Tensor grad;
    std::function<void()> back;  // empty for leaves and constants
};

using Ref = Node*;

/// Dynamic reverse-mode tape. Nodes are created in forward order; backward
/// walks them in reverse. One tape per forward/backward episode, one owner.
class Tape {
public:
    Ref constant(Tensor t) { return alloc(std::move(t)); }

    /// Leaf bound to a parameter; cached so each parameter appears once per
    /// tape and its gradient is flushed back on backward().
    Ref param(Param& p) {
        auto it = param_nodes_.find(&p);
        if (it != param_nodes_.end()) return it->second;
        Ref n = alloc(p.value);
        param_nodes_.emplace(&p, n);
        param_list_.push_back({&p, n});
        return n;
    }

    Ref matmul(Ref a, Ref b) {
        if (a->val.c != b->val.r) throw ShapeError("matmul: inner dimensions disagree");
        Tensor out(a->val.r, b->val.c);
        kernels::mm(out, a->val, b->val);
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            kernels::mm_nt(a->grad, n->grad, b->val);
            kernels::mm_tn(b->grad, a->val, n->grad);
        };
        return n;
    }

    /// a * b^T
    Ref matmul_nt(Ref a, Ref b) {
        if (a->val.c != b->val.c) throw ShapeError("matmul_nt: inner dimensions disagree");
        Tensor out(a->val.r, b->val.r);
        kernels::mm_nt(out, a->val, b->val);
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            kernels::mm(a->grad, n->grad, b->val);
            kernels::mm_tn(b->grad, n->grad, a->val);
        };
        return n;
    }

    Ref add(Ref a, Ref b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("add: shape mismatch");
        Tensor out = a->val;
        for (size_t i = 0; i < out.size(); ++i) out.d[i] += b->val.d[i];
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            for (size_t i = 0; i < n->grad.size(); ++i) {
                a->grad.d[i] += n->grad.d[i];
                b->grad.d[i] += n->grad.d[i];
            }
        };
        return n;
    }

    Ref sub(Ref a, Ref b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("sub: shape mismatch");
        Tensor out = a->val;
        for (size_t i = 0; i < out.size(); ++i) out.d[i] -= b->val.d[i];
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            for (size_t i = 0; i < n->grad.size(); ++i) {
                a->grad.d[i] += n->grad.d[i];
                b->grad.d[i] -= n->grad.d[i];
            }
        };
        return n;
    }

    Ref mul(Ref a, Ref b) {
        if (!a->val.same_shape(b->val)) throw ShapeError("mul: shape mismatch");
        Tensor out = a->val;
        for (size_t i = 0; i < out.size(); ++i) out.d[i] *= b->val.d[i];
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            for (size_t i = 0; i < n->grad.size(); ++i) {
                a->grad.d[i] += n->grad.d[i] * b->val.d[i];
                b->grad.d[i] += n->grad.d[i] * a->val.d[i];
            }
        };
        return n;
    }

    Ref scale(Ref a, double s) {
        Tensor out = a->val;
        for (double& x : out.d) x *= s;
        Ref n = alloc(std::move(out));
        n->back = [n, a, s] {
            for (size_t i = 0; i < n->grad.size(); ++i) a->grad.d[i] += s * n->grad.d[i];
        };
        return n;
    }

    Ref add_const(Ref a, const Tensor& t) {
        if (!a->val.same_shape(t)) throw ShapeError("add_const: shape mismatch");
        Tensor out = a->val;
        for (size_t i = 0; i < out.size(); ++i) out.d[i] += t.d[i];
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (size_t i = 0; i < n->grad.size(); ++i) a->grad.d[i] += n->grad.d[i];
        };
        return n;
    }

    Ref mul_const(Ref a, Tensor t) {
        if (!a->val.same_shape(t)) throw ShapeError("mul_const: shape mismatch");
        Tensor out = a->val;
        for (size_t i = 0; i < out.size(); ++i) out.d[i] *= t.d[i];
        Ref n = alloc(std::move(out));
        Ref mask = constant(std::move(t));
        n->back = [n, a, mask] {
            for (size_t i = 0; i < n->grad.size(); ++i)
                a->grad.d[i] += n->grad.d[i] * mask->val.d[i];
        };
        return n;
    }

    /// (m x n) + broadcast (1 x n)
    Ref add_rowvec(Ref a, Ref b) {
        if (b->val.r != 1 || b->val.c != a->val.c) throw ShapeError("add_rowvec: need 1 x cols");
        Tensor out = a->val;
        for (int i = 0; i < out.r; ++i)
            for (int j = 0; j < out.c; ++j) out.at(i, j) += b->val.at(0, j);
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            for (int i = 0; i < n->grad.r; ++i)
                for (int j = 0; j < n->grad.c; ++j) {
                    a->grad.at(i, j) += n->grad.at(i, j);
                    b->grad.at(0, j) += n->grad.at(i, j);
                }
        };
        return n;
    }

    /// (m x n) + broadcast (m x 1)
    Ref add_colvec(Ref a, Ref b) {
        if (b->val.c != 1 || b->val.r != a->val.r) throw ShapeError("add_colvec: need rows x 1");
        Tensor out = a->val;
        for (int i = 0; i < out.r; ++i)
            for (int j = 0; j < out.c; ++j) out.at(i, j) += b->val.at(i, 0);
        Ref n = alloc(std::move(out));
        n->back = [n, a, b] {
            for (int i = 0; i < n->grad.r; ++i)
                for (int j = 0; j < n->grad.c; ++j) {
                    a->grad.at(i, j) += n->grad.at(i, j);
                    b->grad.at(i, 0) += n->grad.at(i, j);
                }
        };
        return n;
    }

    Ref relu(Ref a) {
        Tensor out = a->val;
        for (double& x : out.d) x = x > 0.0 ? x : 0.0;
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (size_t i = 0; i < n->grad.size(); ++i)
                if (a->val.d[i] > 0.0) a->grad.d[i] += n->grad.d[i];
        };
        return n;
    }

    Ref sigmoid(Ref a) {
        Tensor out = a->val;
        for (double& x : out.d) x = stable_sigmoid(x);
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (size_t i = 0; i < n->grad.size(); ++i) {
                double y = n->val.d[i];
                a->grad.d[i] += n->grad.d[i] * y * (1.0 - y);
            }
        };
        return n;
    }

    Ref tanh(Ref a) {
        Tensor out = a->val;
        for (double& x : out.d) x = std::tanh(x);
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (size_t i = 0; i < n->grad.size(); ++i) {
                double y = n->val.d[i];
                a->grad.d[i] += n->grad.d[i] * (1.0 - y * y);
            }
        };
        return n;
    }

    /// Row-wise softmax, max-subtracted for stability.
    Ref softmax_rows(Ref a) {
        Tensor out = a->val;
        for (int i = 0; i < out.r; ++i) {
            double mx = -HUGE_VAL;
            for (int j = 0; j < out.c; ++j) mx = std::max(mx, out.at(i, j));
            double sum = 0.0;
            for (int j = 0; j < out.c; ++j) {
                double e = std::exp(out.at(i, j) - mx);
                out.at(i, j) = e;
                sum += e;
            }
            for (int j = 0; j < out.c; ++j) out.at(i, j) /= sum;
        }
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (int i = 0; i < n->grad.r; ++i) {
                double dot = 0.0;
                for (int j = 0; j < n->grad.c; ++j) dot += n->grad.at(i, j) * n->val.at(i, j);
                for (int j = 0; j < n->grad.c; ++j)
                    a->grad.at(i, j) += n->val.at(i, j) * (n->grad.at(i, j) - dot);
            }
        };
        return n;
    }

    Ref slice_cols(Ref a, int c0, int c1) {
        if (c0 < 0 || c1 > a->val.c || c0 >= c1) throw ShapeError("slice_cols: bad range");
        Tensor out(a->val.r, c1 - c0);
        for (int i = 0; i < out.r; ++i)
            for (int j = 0; j < out.c; ++j) out.at(i, j) = a->val.at(i, c0 + j);
        Ref n = alloc(std::move(out));
        n->back = [n, a, c0] {
            for (int i = 0; i < n->grad.r; ++i)
                for (int j = 0; j < n->grad.c; ++j) a->grad.at(i, c0 + j) += n->grad.at(i, j);
        };
        return n;
    }

    Ref concat_cols(const std::vector<Ref>& parts) {
        if (parts.empty()) throw ShapeError("concat_cols: empty");
        int rows = parts[0]->val.r, cols = 0;
        for (Ref p : parts) {
            if (p->val.r != rows) throw ShapeError("concat_cols: row mismatch");
            cols += p->val.c;
        }
        Tensor out(rows, cols);
        int off = 0;
        for (Ref p : parts) {
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < p->val.c; ++j) out.at(i, off + j) = p->val.at(i, j);
            off += p->val.c;
        }
        Ref n = alloc(std::move(out));
        std::vector<Ref> ps = parts;
        n->back = [n, ps] {
            int off2 = 0;
            for (Ref p : ps) {
                for (int i = 0; i < n->grad.r; ++i)
                    for (int j = 0; j < p->val.c; ++j) p->grad.at(i, j) += n->grad.at(i, off2 + j);
                off2 += p->val.c;
            }
        };
        return n;
    }

    Ref concat_rows(const std::vector<Ref>& parts) {
        if (parts.empty()) throw ShapeError("concat_rows: empty");
        int cols = parts[0]->val.c, rows = 0;
        for (Ref p : parts) {
            if (p->val.c != cols) throw ShapeError("concat_rows: col mismatch");
            rows += p->val.r;
        }
        Tensor out(rows, cols);
        int off = 0;
        for (Ref p : parts) {
            std::memcpy(&out.d[static_cast<size_t>(off) * cols], p->val.d.data(),
                        p->val.size() * sizeof(double));
            off += p->val.r;
        }
        Ref n = alloc(std::move(out));
        std::vector<Ref> ps = parts;
        n->back = [n, ps, cols] {
            int off2 = 0;
            for (Ref p : ps) {
                for (int i = 0; i < p->val.r; ++i)
                    for (int j = 0; j < cols; ++j) p->grad.at(i, j) += n->grad.at(off2 + i, j);
                off2 += p->val.r;
            }
        };
        return n;
    }

    /// (m x n) -> (1 x n) column means.
    Ref mean_rows(Ref a) {
        Tensor out(1, a->val.c);
        for (int i = 0; i < a->val.r; ++i)
            for (int j = 0; j < a->val.c; ++j) out.at(0, j) += a->val.at(i, j);
        for (double& x : out.d) x /= a->val.r;
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            double inv = 1.0 / a->val.r;
            for (int i = 0; i < a->grad.r; ++i)
                for (int j = 0; j < a->grad.c; ++j) a->grad.at(i, j) += inv * n->grad.at(0, j);
        };
        return n;
    }

    /// (m x n) -> (m x 1) row sums.
    Ref sum_cols(Ref a) {
        Tensor out(a->val.r, 1);
        for (int i = 0; i < a->val.r; ++i) {
            double s = 0.0;
            for (int j = 0; j < a->val.c; ++j) s += a->val.at(i, j);
            out.at(i, 0) = s;
        }
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (int i = 0; i < a->grad.r; ++i)
                for (int j = 0; j < a->grad.c; ++j) a->grad.at(i, j) += n->grad.at(i, 0);
        };
        return n;
    }

    /// Subtract each row's mean from its entries.
    Ref sub_rowmean(Ref a) {
        Tensor out = a->val;
        for (int i = 0; i < out.r; ++i) {
            double mu = 0.0;
            for (int j = 0; j < out.c; ++j) mu += out.at(i, j);
            mu /= out.c;
            for (int j = 0; j < out.c; ++j) out.at(i, j) -= mu;
        }
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (int i = 0; i < n->grad.r; ++i) {
                double gmu = 0.0;
                for (int j = 0; j < n->grad.c; ++j) gmu += n->grad.at(i, j);
                gmu /= n->grad.c;
                for (int j = 0; j < n->grad.c; ++j) a->grad.at(i, j) += n->grad.at(i, j) - gmu;
            }
        };
        return n;
    }

    Ref mean_all(Ref a) {
        Tensor out(1, 1);
        for (double x : a->val.d) out.d[0] += x;
        out.d[0] /= static_cast<double>(a->val.size());
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            double g = n->grad.d[0] / static_cast<double>(a->val.size());
            for (double& x : a->grad.d) x += g;
        };
        return n;
    }

    Ref sum_all(Ref a) {
        Tensor out(1, 1);
        for (double x : a->val.d) out.d[0] += x;
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            double g = n->grad.d[0];
            for (double& x : a->grad.d) x += g;
        };
        return n;
    }

    Ref square(Ref a) {
        Tensor out = a->val;
        for (double& x : out.d) x *= x;
        Ref n = alloc(std::move(out));
        n->back = [n, a] {
            for (size_t i = 0; i < n->grad.size(); ++i)
                a->grad.d[i] += 2.0 * a->val.d[i] * n->grad.d[i];
        };
        return n;
    }

    /// Elementwise Huber: 0.5 x^2 for |x| <= delta, delta(|x| - delta/2) beyond.
    Ref huber(Ref a, double delta) {
        Tensor out = a->val;
        for (double& x : out.d) {
            double ax = std::fabs(x);
            x = ax <= delta ? 0.5 * x * x : delta * (ax - 0.5 * delta);
        }
        Ref n = alloc(std::move(out));
        n->back = [n, a, delta] {
            for (size_t i = 0; i < n->grad.size(); ++i)
                a->grad.d[i] += n->grad.d[i] * std::clamp(a->val.d[i], -delta, delta);
        };
        return n;
    }

    /// y[i] = x[i, idx[i]] as a (rows x 1) column.
    Ref gather_cols(Ref a, std::vector<int> idx) {
        if (static_cast<int>(idx.size()) != a->val.r) throw ShapeError("gather_cols: index count");
        Tensor out(a->val.r, 1);
        for (int i = 0; i < a->val.r; ++i) {
            if (idx[i] < 0 || idx[i] >= a->val.c) throw ShapeError("gather_cols: bad index");
            out.at(i, 0) = a->val.at(i, idx[i]);
        }
        Ref n = alloc(std::move(out));
        n->back = [n, a, idx = std::move(idx)] {
            for (int i = 0; i < n->grad.r; ++i) a->grad.at(i, idx[i]) += n->grad.at(i, 0);
        };
        return n;
    }

    /// Inverted dropout with a mask already scaled by 1/(1-p).
    Ref dropout(Ref a, double p, Rng& rng) {
        if (p <= 0.0) return a;
        Tensor mask(a->val.r, a->val.c);
        double keep = 1.0 - p;
        for (double& x : mask.d) x = rng.uniform() < keep ? 1.0 / keep : 0.0;
        return mul_const(a, std::move(mask));
    }

    /// Reverse pass from a scalar loss; flushes accumulated leaf gradients
    /// into their parameters.
    void backward(Ref loss) {
        if (loss->val.r != 1 || loss->val.c != 1) throw ShapeError("backward: loss must be scalar");
        loss->grad.d[0] = 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if (it->back) it->back();
        for (auto& [p, n] : param_list_)
            for (size_t i = 0; i < p->grad.size(); ++i) p->grad.d[i] += n->grad.d[i];
    }

    size_t node_count() const { return nodes_.size(); }

    static double stable_sigmoid(double x) {
        if (x >= 0.0) {
            double e = std::exp(-x);
            return 1.0 / (1.0 + e);
        }
        double e = std::exp(x);
        return e / (1.0 + e);
    }

private:
    std::deque<Node> nodes_;
    std::unordered_map<Param*, Ref> param_nodes_;
    std::vector<std::pair<Param*, Ref>> param_list_;

    Ref alloc(Tensor val) {
        nodes_.emplace_back();
        Node& n = nodes_.back();
        n.grad = Tensor(val.r, val.c);
        n.val = std::move(val);
        return &n;
    }
};

inline void assert_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericError("non-finite values in " + what);
}

}  // namespace nisqmap::ad
