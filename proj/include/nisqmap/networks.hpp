#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nisqmap/nn.hpp"
#include "nisqmap/tensor.hpp"

namespace nisqmap::net {

using ad::Param;
using ad::Ref;
using ad::Tape;
using ad::Tensor;

/// Block offsets of the env state encoding (n^2 + 2nM + 10M + 5) and its
/// zero-padded canonical layout for a maximum circuit size. Networks are
/// sized to n_max; smaller circuits embed block-wise.
struct EncodingLayout {
    int n = 0, m = 0;

    size_t raw_size() const {
        return static_cast<size_t>(n) * n + 2 * static_cast<size_t>(n) * m + 10 * m + 5;
    }
    static size_t padded_size(int n_max, int m) {
        return static_cast<size_t>(n_max) * n_max + 2 * static_cast<size_t>(n_max) * m + 10 * m +
               5;
    }
    static int token_dim(int n_max, int m) { return n_max + 2 * m + 10; }

    std::vector<double> pad(const std::vector<double>& raw, int n_max) const {
        if (raw.size() != raw_size()) throw ShapeError("encoding pad: raw size mismatch");
        if (n_max < n) throw ShapeError("encoding pad: n exceeds n_max");
        std::vector<double> out(padded_size(n_max, m), 0.0);
        // block 1: n x n embedded in n_max x n_max
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                out[static_cast<size_t>(i) * n_max + j] = raw[static_cast<size_t>(i) * n + j];
        size_t src = static_cast<size_t>(n) * n;
        size_t dst = static_cast<size_t>(n_max) * n_max;
        // block 2: per-qubit rows of 2M
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 2 * m; ++j) out[dst + static_cast<size_t>(i) * 2 * m + j] =
                raw[src + static_cast<size_t>(i) * 2 * m + j];
        src += 2 * static_cast<size_t>(n) * m;
        dst += 2 * static_cast<size_t>(n_max) * m;
        // blocks 3 and 4 are size-independent
        for (size_t j = 0; j < 10 * static_cast<size_t>(m) + 5; ++j) out[dst + j] = raw[src + j];
        return out;
    }

    /// Per-qubit token matrix (n rows): [padded interaction row | own block-2
    /// slice | block-3 features of the qubit's chip (zeros while unmapped)].
    Tensor tokens(const std::vector<double>& raw, int n_max) const {
        if (raw.size() != raw_size()) throw ShapeError("tokens: raw size mismatch");
        const int td = token_dim(n_max, m);
        Tensor t(n, td);
        const size_t b2 = static_cast<size_t>(n) * n;
        const size_t b3 = b2 + 2 * static_cast<size_t>(n) * m;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) t.at(i, j) = raw[static_cast<size_t>(i) * n + j];
            int chip = -1;
            for (int c = 0; c < 2 * m; ++c) {
                double val = raw[b2 + static_cast<size_t>(i) * 2 * m + c];
                t.at(i, n_max + c) = val;
                if (c % 2 == 0 && val > 0.5) chip = c / 2;
            }
            if (chip >= 0)
                for (int j = 0; j < 10; ++j)
                    t.at(i, n_max + 2 * m + j) = raw[b3 + static_cast<size_t>(chip) * 10 + j];
        }
        return t;
    }
};

struct DnaConfig {
    int input_dim = 0;
    int n_chips = 0;
    int hidden = 128;
    bool bidirectional = true;
    double dropout = 0.2;
    double out_scale = 0.15;
};

/// Noise predictor: two stacked (bi)LSTM layers and a three-stage head with
/// batch norm, sigmoid-scaled into the physical noise range.
class DnaPredictor {
public:
    DnaConfig cfg;
    nn::LstmParams l1_fw, l1_bw, l2_fw, l2_bw;
    nn::Linear head1, head2, head3;
    nn::BatchNorm bn1, bn2;

    DnaPredictor() = default;
    DnaPredictor(const DnaConfig& c, Rng& rng)
        : cfg(c),
          l1_fw("dna.l1_fw", c.input_dim, c.hidden, rng, true),
          l1_bw("dna.l1_bw", c.input_dim, c.hidden, rng, true),
          l2_fw("dna.l2_fw", c.bidirectional ? 2 * c.hidden : c.hidden, c.hidden, rng, true),
          l2_bw("dna.l2_bw", c.bidirectional ? 2 * c.hidden : c.hidden, c.hidden, rng, true),
          head1("dna.head1", c.bidirectional ? 2 * c.hidden : c.hidden, c.hidden, rng, true),
          head2("dna.head2", c.hidden, std::max(1, c.hidden / 2), rng, true),
          head3("dna.head3", std::max(1, c.hidden / 2), c.n_chips, rng, true),
          bn1("dna.bn1", c.hidden, true), bn2("dna.bn2", std::max(1, c.hidden / 2), true) {}

    /// seq: one tensor (batch x input_dim) per timestep, length L.
    /// Returns (batch x n_chips) predictions in [0, out_scale].
    Ref forward(Tape& t, const std::vector<Ref>& seq, bool train, Rng& rng) {
        if (seq.empty()) throw ShapeError("dna: empty sequence");
        auto fw1 = l1_fw.unroll(t, seq);
        std::vector<Ref> layer1(seq.size());
        if (cfg.bidirectional) {
            auto bw1 = l1_bw.unroll(t, seq, true);
            for (size_t s = 0; s < seq.size(); ++s)
                layer1[s] = t.concat_cols({fw1[s], bw1[s]});
        } else {
            layer1 = fw1;
        }
        if (train && cfg.dropout > 0)
            for (auto& x : layer1) x = t.dropout(x, cfg.dropout, rng);
        auto fw2 = l2_fw.unroll(t, layer1);
        Ref feat;
        if (cfg.bidirectional) {
            auto bw2 = l2_bw.unroll(t, layer1, true);
            feat = t.concat_cols({fw2.back(), bw2.front()});
        } else {
            feat = fw2.back();
        }
        if (train && cfg.dropout > 0) feat = t.dropout(feat, cfg.dropout, rng);
        Ref z1 = t.relu(bn1.forward(t, head1.forward(t, feat), train));
        Ref z2 = t.relu(bn2.forward(t, head2.forward(t, z1), train));
        return t.scale(t.sigmoid(head3.forward(t, z2)), cfg.out_scale);
    }

    /// Single-sequence inference with frozen batch statistics.
    std::vector<double> predict(const std::vector<std::vector<double>>& seq, Rng& rng) {
        Tape t;
        std::vector<Ref> refs;
        refs.reserve(seq.size());
        for (const auto& row : seq) {
            if (static_cast<int>(row.size()) != cfg.input_dim)
                throw ShapeError("dna predict: element dim mismatch");
            refs.push_back(t.constant(Tensor::row(row)));
        }
        Ref out = forward(t, refs, false, rng);
        ad::assert_finite(out->val, "dna prediction");
        return out->val.d;
    }

    void collect(std::vector<Param*>& ps) {
        l1_fw.collect(ps);
        if (cfg.bidirectional) l1_bw.collect(ps);
        l2_fw.collect(ps);
        if (cfg.bidirectional) l2_bw.collect(ps);
        head1.collect(ps);
        bn1.collect(ps);
        head2.collect(ps);
        bn2.collect(ps);
        head3.collect(ps);
    }
};

/// Mean-squared DNA loss: mean over the batch of squared error norms; the
/// L2 term is reported in the value (its pull on the weights is applied as
/// decoupled decay in the optimizer).
inline Ref dna_mse(Tape& t, Ref pred, const Tensor& target) {
    if (!pred->val.same_shape(target)) throw ShapeError("dna_mse: shape mismatch");
    Ref d = t.sub(pred, t.constant(target));
    return t.scale(t.sum_all(t.square(d)), 1.0 / pred->val.r);
}

inline double dna_loss_value(double mse, const std::vector<Param*>& params,
                             double lambda = 1e-5) {
    double reg = 0.0;
    for (const Param* p : params)
        for (double x : p->value.d) reg += x * x;
    return mse + lambda * reg;
}

struct AttentionConfig {
    int token_dim = 0;
    int d_model = 256;
    int heads = 8;
    int d_k() const { return d_model / heads; }
};

/// Multi-head self-attention over per-qubit tokens, mean-pooled into one
/// state embedding.
class AttentionEncoder {
public:
    AttentionConfig cfg;
    nn::Linear in_proj;
    Param wq, wk, wv, wo;  // (d_model x d_model); heads are column slices

    AttentionEncoder() = default;
    AttentionEncoder(const AttentionConfig& c, Rng& rng)
        : cfg(c), in_proj("attn.in", c.token_dim, c.d_model, rng),
          wq("attn.wq", c.d_model, c.d_model), wk("attn.wk", c.d_model, c.d_model),
          wv("attn.wv", c.d_model, c.d_model), wo("attn.wo", c.d_model, c.d_model) {
        if (c.d_model % c.heads != 0) throw ShapeError("attention: d_model % heads != 0");
        nn::init_uniform_fanin(wq, c.d_model, rng);
        nn::init_uniform_fanin(wk, c.d_model, rng);
        nn::init_uniform_fanin(wv, c.d_model, rng);
        nn::init_uniform_fanin(wo, c.d_model, rng);
    }

    /// tokens: (n x token_dim), n >= 1. Returns pooled (1 x d_model).
    Ref forward(Tape& t, Ref tokens) {
        if (tokens->val.r < 1) throw ShapeError("attention: need at least one token");
        Ref x = in_proj.forward(t, tokens);  // (n x d_model)
        Ref q = t.matmul(x, t.param(wq));
        Ref k = t.matmul(x, t.param(wk));
        Ref v = t.matmul(x, t.param(wv));
        const int dk = cfg.d_k();
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
        std::vector<Ref> heads;
        heads.reserve(cfg.heads);
        for (int h = 0; h < cfg.heads; ++h) {
            Ref qh = t.slice_cols(q, h * dk, (h + 1) * dk);
            Ref kh = t.slice_cols(k, h * dk, (h + 1) * dk);
            Ref vh = t.slice_cols(v, h * dk, (h + 1) * dk);
            Ref scores = t.scale(t.matmul_nt(qh, kh), inv_sqrt);
            Ref attn = t.softmax_rows(scores);
            heads.push_back(t.matmul(attn, vh));
        }
        Ref cat = cfg.heads == 1 ? heads[0] : t.concat_cols(heads);
        Ref out = t.matmul(cat, t.param(wo));
        return t.mean_rows(out);
    }

    /// Attention matrix of one head, for tests.
    Tensor head_attention(const Tensor& tokens, int head) {
        Tape t;
        Ref x = in_proj.forward(t, t.constant(tokens));
        Ref q = t.matmul(x, t.param(wq));
        Ref k = t.matmul(x, t.param(wk));
        const int dk = cfg.d_k();
        Ref qh = t.slice_cols(q, head * dk, (head + 1) * dk);
        Ref kh = t.slice_cols(k, head * dk, (head + 1) * dk);
        Ref attn = t.softmax_rows(t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt((double)dk)));
        return attn->val;
    }

    void collect(std::vector<Param*>& ps) {
        in_proj.collect(ps);
        ps.push_back(&wq);
        ps.push_back(&wk);
        ps.push_back(&wv);
        ps.push_back(&wo);
    }
};

struct QHeadConfig {
    int input_dim = 0;
    int n_actions = 0;
    int hidden = 256;
    bool dueling = true;
    bool noisy = true;
    double sigma0 = 0.5;
};

/// Dueling value/advantage head over the state embedding; branch layers are
/// noisy-linear for exploration, zeroed deterministically at evaluation.
class DuelingQHead {
public:
    QHeadConfig cfg;
    nn::Linear trunk1, trunk2;
    nn::NoisyLinear value_out, adv_out;

    DuelingQHead() = default;
    DuelingQHead(const QHeadConfig& c, Rng& rng)
        : cfg(c), trunk1("q.trunk1", c.input_dim, c.hidden, rng),
          trunk2("q.trunk2", c.hidden, c.hidden, rng),
          value_out("q.value", c.hidden, 1, c.sigma0, rng),
          adv_out("q.adv", c.hidden, c.n_actions, c.sigma0, rng) {}

    /// x: (batch x input_dim) -> (batch x n_actions). noise_mode teams with
    /// cfg.noisy; pass false for deterministic inference.
    Ref forward(Tape& t, Ref x, bool noise_mode, Rng& rng) {
        Ref h = t.relu(trunk2.forward(t, t.relu(trunk1.forward(t, x))));
        bool noisy = cfg.noisy && noise_mode;
        Ref adv = adv_out.forward(t, h, noisy, rng);
        if (!cfg.dueling) return adv;
        Ref v = value_out.forward(t, h, noisy, rng);
        return t.add_colvec(t.sub_rowmean(adv), v);
    }

    void collect(std::vector<Param*>& ps) {
        trunk1.collect(ps);
        trunk2.collect(ps);
        if (cfg.dueling) value_out.collect(ps);
        adv_out.collect(ps);
    }
};

}  // namespace nisqmap::net
