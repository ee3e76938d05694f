#include "nisqmap/networks.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fd_check.hpp"
#include "nisqmap/env.hpp"

using namespace nisqmap;
using ad::Param;
using ad::Ref;
using ad::Tape;
using ad::Tensor;
using net::AttentionConfig;
using net::AttentionEncoder;
using net::DnaConfig;
using net::DnaPredictor;
using net::DuelingQHead;
using net::EncodingLayout;
using net::QHeadConfig;
using testutil::fd_check;

namespace {

std::vector<std::vector<double>> random_seq(int len, int dim, Rng& rng) {
    std::vector<std::vector<double>> seq(len, std::vector<double>(dim));
    for (auto& row : seq)
        for (double& x : row) x = rng.uniform(-1, 1);
    return seq;
}

Tensor random_tensor(int r, int c, Rng& rng, double scale = 1.0) {
    Tensor t(r, c);
    for (double& x : t.d) x = rng.uniform(-scale, scale);
    return t;
}

}  // namespace

TEST(Dna, OutputAlwaysInNoiseRange) {
    Rng rng(1);
    DnaPredictor dna(DnaConfig{6, 3, 16, true, 0.2, 0.15}, rng);
    Rng noise(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto pred = dna.predict(random_seq(10, 6, noise), noise);
        ASSERT_EQ(pred.size(), 3u);
        for (double v : pred) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 0.15);
        }
    }
}

TEST(Dna, ZeroWeightsGiveMidrangeOutput) {
    Rng rng(3);
    DnaPredictor dna(DnaConfig{4, 2, 8, true, 0.0, 0.15}, rng);
    std::vector<Param*> ps;
    dna.collect(ps);
    for (Param* p : ps)
        if (p->name.find("gamma") == std::string::npos)
            for (double& x : p->value.d) x = 0.0;
    // zero head weights and bias -> sigmoid(0) * 0.15 = 0.075 per chip
    Rng noise(4);
    auto pred = dna.predict(random_seq(10, 4, noise), noise);
    for (double v : pred) EXPECT_DOUBLE_EQ(v, 0.075);
}

TEST(Dna, UnidirectionalHalvesFeatureWidth) {
    Rng rng(5);
    DnaPredictor bi(DnaConfig{4, 2, 8, true, 0.2, 0.15}, rng);
    DnaPredictor uni(DnaConfig{4, 2, 8, false, 0.2, 0.15}, rng);
    EXPECT_EQ(bi.head1.w.value.r, 16);  // 2h
    EXPECT_EQ(uni.head1.w.value.r, 8);  // h
    Rng noise(6);
    auto p = uni.predict(random_seq(10, 4, noise), noise);
    EXPECT_EQ(p.size(), 2u);
}

TEST(Dna, WrongElementDimThrows) {
    Rng rng(7);
    DnaPredictor dna(DnaConfig{4, 2, 8, true, 0.2, 0.15}, rng);
    Rng noise(8);
    EXPECT_THROW(dna.predict(random_seq(10, 5, noise), noise), ShapeError);
}

TEST(Dna, LossHandArithmetic) {
    // pred - target = [0.1, 0] on one sample, lambda = 0 -> 0.01
    Tape t;
    Tensor pred(1, 2), target(1, 2);
    pred.at(0, 0) = 0.1;
    Ref loss = net::dna_mse(t, t.constant(pred), target);
    EXPECT_NEAR(loss->val.d[0], 0.01, 1e-15);
    Ref zero = net::dna_mse(t, t.constant(target), target);
    EXPECT_DOUBLE_EQ(zero->val.d[0], 0.0);
}

TEST(Dna, LossL2TermExact) {
    Param w("w", 2, 2);
    w.value.at(0, 0) = 3.0;
    w.value.at(1, 1) = -2.0;
    double reg = net::dna_loss_value(0.0, {&w}, 1e-5);
    EXPECT_NEAR(reg, 1e-5 * 13.0, 1e-18);
}

TEST(Dna, EndToEndGradMatchesFiniteDifferences) {
    Rng rng(11);
    DnaPredictor dna(DnaConfig{3, 2, 4, true, 0.0, 0.15}, rng);
    Rng data_rng(12);
    const int batch = 3, len = 5;
    std::vector<Tensor> steps;
    for (int s = 0; s < len; ++s) steps.push_back(random_tensor(batch, 3, data_rng));
    Tensor target(batch, 2);
    for (double& x : target.d) x = 0.05 + 0.05 * data_rng.uniform();
    std::vector<Param*> ps;
    dna.collect(ps);
    auto loss = [&](bool grad) {
        Rng unused(1);
        Tape t;
        std::vector<Ref> xs;
        for (auto& s : steps) xs.push_back(t.constant(s));
        Ref pred = dna.forward(t, xs, true, unused);
        Ref l = net::dna_mse(t, pred, target);
        if (grad) t.backward(l);
        return l->val.d[0];
    };
    Rng coord(13);
    auto rep =
        fd_check(ps, [&] { return loss(true); }, [&] { return loss(false); }, coord, 1e-5, 6);
    EXPECT_LT(rep.worst_rel, 1e-4) << rep.worst_where;
}

TEST(Attention, SingleTokenIsItsOwnAttention) {
    Rng rng(14);
    AttentionEncoder enc(AttentionConfig{5, 16, 4}, rng);
    Tensor one = random_tensor(1, 5, rng);
    auto attn = enc.head_attention(one, 0);
    ASSERT_EQ(attn.r, 1);
    ASSERT_EQ(attn.c, 1);
    EXPECT_DOUBLE_EQ(attn.at(0, 0), 1.0);
    Tape t;
    Ref out = enc.forward(t, t.constant(one));
    EXPECT_EQ(out->val.c, 16);
}

TEST(Attention, IdenticalTokensGiveUniformRows) {
    Rng rng(15);
    AttentionEncoder enc(AttentionConfig{5, 16, 4}, rng);
    Tensor tok(3, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) tok.at(i, j) = 0.3 * j - 0.1;
    auto attn = enc.head_attention(tok, 2);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(attn.at(i, j), 1.0 / 3.0, 1e-12);
}

TEST(Attention, RowsAreProbabilityDistributions) {
    Rng rng(16);
    AttentionEncoder enc(AttentionConfig{6, 32, 8}, rng);
    Tensor tok = random_tensor(7, 6, rng, 2.0);
    for (int h = 0; h < 8; ++h) {
        auto attn = enc.head_attention(tok, h);
        for (int i = 0; i < 7; ++i) {
            double s = 0;
            for (int j = 0; j < 7; ++j) {
                s += attn.at(i, j);
                ASSERT_GE(attn.at(i, j), 0.0);
            }
            ASSERT_NEAR(s, 1.0, 1e-12);
        }
    }
}

TEST(Attention, PooledEmbeddingIsPermutationInvariant) {
    Rng rng(17);
    AttentionEncoder enc(AttentionConfig{5, 16, 4}, rng);
    Tensor tok = random_tensor(6, 5, rng);
    Tape t1;
    Ref a = enc.forward(t1, t1.constant(tok));
    Tensor shuffled(6, 5);
    std::vector<int> perm = {4, 1, 5, 0, 3, 2};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 5; ++j) shuffled.at(i, j) = tok.at(perm[i], j);
    Tape t2;
    Ref b = enc.forward(t2, t2.constant(shuffled));
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(a->val.at(0, j), b->val.at(0, j), 1e-10);
}

TEST(Attention, GradMatchesFiniteDifferences) {
    Rng rng(18);
    AttentionEncoder enc(AttentionConfig{4, 8, 2}, rng);
    Tensor tok = random_tensor(5, 4, rng);
    std::vector<Param*> ps;
    enc.collect(ps);
    auto loss = [&](bool grad) {
        Tape t;
        Ref out = enc.forward(t, t.constant(tok));
        Ref l = t.mean_all(t.square(out));
        if (grad) t.backward(l);
        return l->val.d[0];
    };
    Rng coord(19);
    auto rep =
        fd_check(ps, [&] { return loss(true); }, [&] { return loss(false); }, coord, 1e-5, 8);
    EXPECT_LT(rep.worst_rel, 1e-4) << rep.worst_where;
}

TEST(Dueling, HandCombination) {
    // V = 2, A = [1, -1] -> Q = [3, 1] (mean A = 0)
    Tape t;
    Tensor adv(1, 2), v(1, 1);
    adv.at(0, 0) = 1.0;
    adv.at(0, 1) = -1.0;
    v.at(0, 0) = 2.0;
    Ref q = t.add_colvec(t.sub_rowmean(t.constant(adv)), t.constant(v));
    EXPECT_DOUBLE_EQ(q->val.at(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(q->val.at(0, 1), 1.0);
}

TEST(Dueling, EqualAdvantagesCollapseToValue) {
    Tape t;
    Tensor adv = Tensor::full(1, 5, 0.42), v(1, 1);
    v.at(0, 0) = -1.5;
    Ref q = t.add_colvec(t.sub_rowmean(t.constant(adv)), t.constant(v));
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(q->val.at(0, j), -1.5, 1e-12);
}

TEST(Dueling, ConstantAdvantageShiftLeavesQUnchanged) {
    Rng rng(21);
    Tensor adv = random_tensor(3, 4, rng), v = random_tensor(3, 1, rng);
    Tape t;
    Ref q1 = t.add_colvec(t.sub_rowmean(t.constant(adv)), t.constant(v));
    Tensor shifted = adv;
    for (double& x : shifted.d) x += 7.3;
    Ref q2 = t.add_colvec(t.sub_rowmean(t.constant(shifted)), t.constant(v));
    for (size_t i = 0; i < q1->val.size(); ++i) EXPECT_NEAR(q1->val.d[i], q2->val.d[i], 1e-10);
}

TEST(Dueling, IdentityHoldsThroughHead) {
    Rng rng(22);
    QHeadConfig cfg{6, 5, 8, true, false, 0.5};
    DuelingQHead head(cfg, rng);
    Tensor x = random_tensor(4, 6, rng);
    Rng noise(23);
    Tape t;
    Ref q = head.forward(t, t.constant(x), false, noise);
    ASSERT_EQ(q->val.r, 4);
    ASSERT_EQ(q->val.c, 5);
    // with mean-centered advantages the per-row mean of Q equals V
    Tape t2;
    Ref h = t2.relu(head.trunk2.forward(t2, t2.relu(head.trunk1.forward(t2, t2.constant(x)))));
    Ref v = head.value_out.forward(t2, h, false, noise);
    for (int i = 0; i < 4; ++i) {
        double qmean = 0;
        for (int j = 0; j < 5; ++j) qmean += q->val.at(i, j);
        qmean /= 5;
        EXPECT_NEAR(qmean, v->val.at(i, 0), 1e-12);
    }
}

TEST(Dueling, ArgmaxInvariantToAdvantageShiftViaBias) {
    Rng rng(24);
    QHeadConfig cfg{4, 6, 8, true, false, 0.5};
    DuelingQHead head(cfg, rng);
    Tensor x = random_tensor(1, 4, rng);
    Rng noise(1);
    Tape t1;
    Ref q1 = head.forward(t1, t1.constant(x), false, noise);
    int arg1 = static_cast<int>(std::max_element(q1->val.d.begin(), q1->val.d.end()) -
                                q1->val.d.begin());
    for (double& b : head.adv_out.b_mu.value.d) b += 11.0;
    Tape t2;
    Ref q2 = head.forward(t2, t2.constant(x), false, noise);
    int arg2 = static_cast<int>(std::max_element(q2->val.d.begin(), q2->val.d.end()) -
                                q2->val.d.begin());
    EXPECT_EQ(arg1, arg2);
    for (size_t i = 0; i < q1->val.size(); ++i) EXPECT_NEAR(q1->val.d[i], q2->val.d[i], 1e-9);
}

TEST(Dueling, NoisyZeroSigmaMatchesDeterministic) {
    Rng rng(25);
    QHeadConfig cfg{4, 3, 8, true, true, 0.5};
    DuelingQHead head(cfg, rng);
    for (double& x : head.value_out.w_sigma.value.d) x = 0;
    for (double& x : head.value_out.b_sigma.value.d) x = 0;
    for (double& x : head.adv_out.w_sigma.value.d) x = 0;
    for (double& x : head.adv_out.b_sigma.value.d) x = 0;
    Tensor x = random_tensor(2, 4, rng);
    Rng noise(9);
    Tape t1, t2;
    Ref noisy = head.forward(t1, t1.constant(x), true, noise);
    Rng unused(1);
    Ref det = head.forward(t2, t2.constant(x), false, unused);
    for (size_t i = 0; i < noisy->val.size(); ++i) EXPECT_EQ(noisy->val.d[i], det->val.d[i]);
}

TEST(Dueling, GradMatchesFiniteDifferences) {
    Rng rng(26);
    QHeadConfig cfg{3, 4, 6, true, true, 0.5};
    DuelingQHead head(cfg, rng);
    Tensor x = random_tensor(2, 3, rng);
    std::vector<Param*> ps;
    head.collect(ps);
    auto loss = [&](bool grad) {
        Rng noise(777);
        Tape t;
        Ref q = head.forward(t, t.constant(x), true, noise);
        Ref l = t.mean_all(t.square(q));
        if (grad) t.backward(l);
        return l->val.d[0];
    };
    Rng coord(27);
    auto rep =
        fd_check(ps, [&] { return loss(true); }, [&] { return loss(false); }, coord, 1e-5, 8);
    EXPECT_LT(rep.worst_rel, 1e-4) << rep.worst_where;
}

TEST(Layout, PadEmbedsBlocksAndTokensCarryChipFeatures) {
    CalibrationTable cal;
    cal.f1q_std = cal.f2q_intra_std = cal.f2q_inter_std = 0.0;
    Hardware hw = build_topology(TopologyKind::Custom, 2, 4, cal, 1);
    Circuit c = gen_qft(4);
    NoiseParams np;
    np.spike_prob = 0.0;
    Env env(c, hw, np, 1);
    RewardWeights w;
    env.step(Action::place(1, 2), w, 0.05);  // qubit 0 onto chip 1
    auto raw = env.encode_state();
    EncodingLayout lay{4, 2};
    ASSERT_EQ(raw.size(), lay.raw_size());
    const int n_max = 8;
    auto padded = lay.pad(raw, n_max);
    EXPECT_EQ(padded.size(), EncodingLayout::padded_size(n_max, 2));
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(padded[j], raw[j]);
    for (int j = 4; j < 8; ++j) EXPECT_DOUBLE_EQ(padded[j], 0.0);
    for (int j = 0; j < 5; ++j)
        EXPECT_DOUBLE_EQ(padded[padded.size() - 1 - j], raw[raw.size() - 1 - j]);
    Tensor toks = lay.tokens(raw, n_max);
    ASSERT_EQ(toks.r, 4);
    ASSERT_EQ(toks.c, EncodingLayout::token_dim(n_max, 2));
    // qubit 0 sits on chip 1: indicator set, chip features copied from block 3
    EXPECT_DOUBLE_EQ(toks.at(0, n_max + 2), 1.0);
    size_t b3 = 16 + 16;  // n^2 + 2nM for n=4, M=2
    for (int j = 0; j < 10; ++j)
        EXPECT_DOUBLE_EQ(toks.at(0, n_max + 4 + j), raw[b3 + 10 + j]);
    // unplaced qubit 3: zero chip features
    for (int j = 0; j < 10; ++j) EXPECT_DOUBLE_EQ(toks.at(3, n_max + 4 + j), 0.0);
}
