#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "orderedae/errors.hpp"
#include "orderedae/extraction.hpp"
#include "orderedae/serialize.hpp"

using namespace oae;

namespace {

Dataset noise_data(std::size_t n, std::size_t N, std::uint64_t seed) {
    Rng rng(seed);
    Dataset d;
    d.x = oracle::random_matrix(n, N, rng);
    for (std::size_t i = 0; i < n; ++i) d.names.push_back("x" + std::to_string(i + 1));
    return normalize(d);
}

TrainOutcome outcome_for(const AutoencoderModel& m, const Matrix& x, double eps = 1e-4) {
    TrainOutcome o;
    o.model = m;
    o.report = variance_report(m, x, eps);
    o.trivial = detect_trivial(o);
    return o;
}

AutoencoderModel random_model(std::size_t n, bool residual, std::uint64_t seed, std::size_t zero_a1_from = 0) {
    Rng rng(seed);
    AutoencoderModel m =
        AutoencoderModel::random(Architecture::extraction(n, n, {4}, {4}, residual ? Skip::identity() : Skip::none()), rng);
    if (zero_a1_from > 0) {
        Matrix& a1 = m.layer(0).weights;
        for (std::size_t r = 0; r < a1.rows(); ++r)
            for (std::size_t c = zero_a1_from; c < n; ++c) a1(r, c) = 0.0;
    }
    return m;
}

ImplicitRelation synthetic(RelationKind kind, Vector ybar) {
    ImplicitRelation rel;
    rel.kind = kind;
    rel.n = 2;
    rel.p = 1;
    Layer h;
    h.weights = Matrix(3, 2);
    h.activation = Activation::Tanh;
    rel.hidden = {h};
    rel.a_er = Matrix(1, 3);
    rel.skip_r = kind == RelationKind::Raeo ? Matrix{{0, 1}} : Matrix(1, 2);
    rel.ybar_r = std::move(ybar);
    rel.names = {"x1", "x2"};
    return rel;
}

}  // namespace

TEST(Residual, ZeroWeightsResidualForm) {
    ImplicitRelation rel = synthetic(RelationKind::Raeo, {0.3});
    EXPECT_NEAR(relation_residual(rel, Vector{0.7, -0.2})[0], -0.2 - 0.3, 1e-15);
}

TEST(Residual, ZeroWeightsPlainFormIsConstant) {
    ImplicitRelation rel = synthetic(RelationKind::Aeo, {0.3});
    EXPECT_EQ(relation_residual(rel, Vector{0.7, -0.2})[0], -0.3);
    EXPECT_EQ(relation_residual(rel, Vector{-5, 4})[0], -0.3);
}

TEST(Residual, MatchesCompositionalEvaluation) {
    Dataset d = noise_data(3, 30, 1);
    for (bool residual : {false, true}) {
        AutoencoderModel m = random_model(3, residual, 7);
        ImplicitRelation rel = build_implicit(outcome_for(m, d.x), 1);
        const Layer& l1 = m.layer(0);
        const Matrix& ae = m.layer(1).weights;
        for (std::size_t k = 0; k < 5; ++k) {
            Matrix xk(3, 1, d.x.col(k));
            Matrix h = activate(l1.activation, oracle::naive_matmul(l1.weights, xk));
            Matrix yr = oracle::naive_matmul(ae.block(1, 0, 2, 4), h);
            const Vector r = relation_residual(rel, xk.data());
            for (std::size_t i = 0; i < 2; ++i) {
                const double skip = residual ? xk(1 + i, 0) : 0.0;
                EXPECT_NEAR(r[i], skip + yr(i, 0) - rel.ybar_r[i], 1e-12);
            }
        }
    }
}

TEST(Residual, ConsistentWithLatentVariance) {
    Dataset d = noise_data(3, 40, 2);
    for (bool residual : {false, true}) {
        AutoencoderModel m = random_model(3, residual, 9);
        TrainOutcome o = outcome_for(m, d.x);
        ImplicitRelation rel = build_implicit(o, 1);
        double sum = 0;
        for (std::size_t k = 0; k < d.num_samples(); ++k) {
            const Vector r = relation_residual(rel, d.x.col(k));
            for (double v : r) sum += v * v;
        }
        const double expect = 39 * (o.report.variances[1] + o.report.variances[2]);
        EXPECT_LE(oracle::rel_err(sum, expect), 1e-10);
    }
}

TEST(Residual, AdditiveInResidualVariable) {
    Dataset d = noise_data(2, 20, 3);
    AutoencoderModel m = random_model(2, true, 4, 1);
    ImplicitRelation rel = build_implicit(outcome_for(m, d.x), 1);
    const Vector a{0.4, 0.1}, b{0.4, -0.7};
    EXPECT_NEAR(relation_residual(rel, a)[0] - relation_residual(rel, b)[0], 0.1 - -0.7, 1e-14);
}

TEST(Residual, Pure) {
    Dataset d = noise_data(2, 20, 3);
    ImplicitRelation rel = build_implicit(outcome_for(random_model(2, false, 5), d.x), 1);
    EXPECT_EQ(relation_residual(rel, Vector{0.2, 0.3}), relation_residual(rel, Vector{0.2, 0.3}));
}

TEST(BuildImplicit, ShapesFollowTheModel) {
    Dataset d = noise_data(2, 20, 3);
    ImplicitRelation rel = build_implicit(outcome_for(random_model(2, false, 5), d.x), 1);
    EXPECT_EQ(rel.kind, RelationKind::Aeo);
    EXPECT_EQ(rel.num_residual(), 1u);
    ASSERT_EQ(rel.hidden.size(), 1u);
    EXPECT_EQ(rel.hidden[0].weights.rows(), 4u);
    EXPECT_EQ(rel.hidden[0].weights.cols(), 2u);
    EXPECT_EQ(rel.a_er.rows(), 1u);
    EXPECT_EQ(rel.a_er.cols(), 4u);
}

TEST(BuildImplicit, RefusesCollapsedModel) {
    Dataset d = noise_data(2, 20, 3);
    AutoencoderModel m = random_model(2, false, 5);
    for (double& w : m.layer(1).weights.row(1)) w = 0.0;
    TrainOutcome o = outcome_for(m, d.x);
    ASSERT_TRUE(o.trivial);
    EXPECT_THROW(build_implicit(o), TrivialSolutionError);
}

TEST(BuildImplicit, NothingToExtract) {
    Dataset d = noise_data(2, 20, 3);
    TrainOutcome o = outcome_for(random_model(2, false, 5), d.x);
    ASSERT_EQ(o.report.p, 2u);
    EXPECT_THROW(build_implicit(o), NothingToExtractError);
}

TEST(BuildImplicit, NeedsExtractionMode) {
    Dataset d = noise_data(2, 20, 3);
    Architecture a = Architecture::extraction(2, 2, {4}, {4});
    a.encoder[0].use_bias = true;
    Rng rng(1);
    AutoencoderModel m = AutoencoderModel::random(a, rng);
    m.layer(0).bias[0] = 0.5;
    EXPECT_THROW(build_implicit(outcome_for(m, d.x), 1), ContractError);
}

TEST(SolveResidual, ZeroNonlinearTermGivesMean) {
    ImplicitRelation rel = synthetic(RelationKind::Raeo, {0.42});
    const Vector xr = solve_residual(rel, Vector{0.9}, Vector{0.0});
    EXPECT_NEAR(xr[0], 0.42, 1e-10);
}

TEST(SolveResidual, ReturnedPointsMeetTolerance) {
    Dataset d = noise_data(2, 40, 8);
    for (bool residual : {false, true}) {
        ImplicitRelation rel = build_implicit(outcome_for(random_model(2, residual, 11), d.x), 1);
        BatchSolveResult res = solve_all(rel, d.x);
        for (std::size_t k = 0; k < d.num_samples(); ++k) {
            if (!res.converged[k]) continue;
            Vector x{d.x(0, k), res.x_r(0, k)};
            EXPECT_LE(norm2(relation_residual(rel, x)), 1e-10);
            EXPECT_LE(res.residual_norms[k], 1e-10);
        }
    }
}

TEST(SolveAll, ParallelMatchesSerial) {
    Dataset d = noise_data(2, 40, 8);
    ImplicitRelation rel = build_implicit(outcome_for(random_model(2, true, 11), d.x), 1);
    BatchSolveOptions o;
    BatchSolveResult a = solve_all(rel, d.x, o);
    o.jobs = 4;
    BatchSolveResult b = solve_all(rel, d.x, o);
    EXPECT_EQ(a.x_r, b.x_r);
    EXPECT_EQ(a.converged, b.converged);
}

TEST(Explicit, ZeroNonlinearTermGivesMean) {
    ExplicitRelation rel;
    rel.n = 2;
    rel.p = 1;
    Layer h;
    h.weights = Matrix(3, 1);
    rel.hidden = {h};
    rel.a_er = Matrix(1, 3);
    rel.ybar_r = {-0.25};
    EXPECT_EQ(explicit_predict(rel, Vector{0.8})[0], -0.25);
}

TEST(Explicit, AgreesWithImplicitSolveWhenMasked) {
    Dataset d = noise_data(3, 30, 12);
    AutoencoderModel m = random_model(3, true, 13, 1);
    TrainOutcome o = outcome_for(m, d.x);
    o.explicit_ok = true;
    ExplicitRelation ex = build_explicit(o, 1);
    ImplicitRelation im = build_implicit(o, 1);
    const Matrix pred = predict_all(ex, d.x);
    for (std::size_t k = 0; k < d.num_samples(); ++k) {
        const Vector xp{d.x(0, k)};
        const Vector direct = explicit_predict(ex, xp);
        const Vector solved = solve_residual(im, xp, Vector{0.0, 0.0});
        for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_LE(std::abs(direct[i] - solved[i]), 1e-8);
            EXPECT_EQ(pred(i, k), direct[i]);
        }
    }
}

TEST(Explicit, RequiresMaskAndFlag) {
    Dataset d = noise_data(2, 20, 3);
    TrainOutcome unmasked = outcome_for(random_model(2, true, 5), d.x);
    unmasked.explicit_ok = true;
    EXPECT_THROW(build_explicit(unmasked, 1), ContractError);
    TrainOutcome masked = outcome_for(random_model(2, true, 5, 1), d.x);
    masked.explicit_ok = false;
    EXPECT_THROW(build_explicit(masked, 1), ContractError);
    TrainOutcome plain = outcome_for(random_model(2, false, 5, 1), d.x);
    plain.explicit_ok = true;
    EXPECT_THROW(build_explicit(plain, 1), ContractError);
}

TEST(PredictionMse, Basics) {
    const Vector a{1, 2, 3};
    EXPECT_EQ(prediction_mse(a, a), 0.0);
    EXPECT_NEAR(prediction_mse(a, Vector{1.5, 2.5, 3.5}), 0.25, 1e-15);
    Dataset d;
    d.x = Matrix{{0, 0, 0}, {1, 2, 3}};
    EXPECT_NEAR(prediction_mse(d, Vector{0, 1, 2}, 1), 1.0, 1e-15);
    EXPECT_THROW(prediction_mse(a, Vector{1, 2}), ContractError);
}

TEST(RelationJson, RoundTripEvaluatesIdentically) {
    Dataset d = noise_data(3, 30, 14);
    TrainOutcome o = outcome_for(random_model(3, true, 15, 1), d.x);
    o.explicit_ok = true;
    ImplicitRelation im = build_implicit(o, 1);
    im.norm = d.norm;
    ImplicitRelation im2 = implicit_relation_from_json(Json::parse(to_json(im).dump()));
    ExplicitRelation ex = build_explicit(o, 1);
    ExplicitRelation ex2 = explicit_relation_from_json(Json::parse(to_json(ex).dump()));
    for (std::size_t k = 0; k < 5; ++k) {
        EXPECT_EQ(relation_residual(im, d.x.col(k)), relation_residual(im2, d.x.col(k)));
        EXPECT_EQ(explicit_predict(ex, Vector{d.x(0, k)}), explicit_predict(ex2, Vector{d.x(0, k)}));
    }
    ASSERT_TRUE(im2.norm.has_value());
    EXPECT_EQ(im2.norm->scales, d.norm->scales);
    EXPECT_EQ(im2.names, im.names);
}

TEST(RelationKind, Names) {
    for (auto k : {RelationKind::Aeo, RelationKind::Raeo}) EXPECT_EQ(relation_kind_from_string(to_string(k)), k);
}
