#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "demoplan/core/recording.hpp"
#include "demoplan/core/transform.hpp"

using namespace demoplan;

namespace {

// Independent 4x4 product with plain loops.
Mat4 dense_product(const Mat4& a, const Mat4& b) {
    Mat4 out;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

RigidTransform random_transform(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Quaternion q(n(rng), n(rng), n(rng), n(rng));
    return RigidTransform::from_quaternion(q.normalized(), Vec3(n(rng), n(rng), n(rng)));
}

const char* kTwoEntityFixture =
    R"({"hand":"hand","manipulated":"cup","background":"plate","models":{"cup":{"interaction_points":[{"label":"handle","offset":[0.04,0,0]}]},"plate":{"interaction_points":[{"label":"plate center","offset":[0,0,0]}]}}}
{"k":0,"t":0.0,"entity":"hand","p":[0,0,0.2],"q":[1,0,0,0]}
{"k":0,"t":0.0,"entity":"cup","p":[0.2,0,0.05],"q":[1,0,0,0]}
{"k":0,"t":0.0,"entity":"plate","p":[0.5,0,0.0],"q":[1,0,0,0]}
{"k":1,"t":0.033,"entity":"hand","p":[0.1,0,0.2],"q":[1,0,0,0]}
{"k":1,"t":0.033,"entity":"cup","p":[0.2,0,0.05],"q":[1,0,0,0]}
{"k":1,"t":0.033,"entity":"plate","p":[0.5,0,0.0],"q":[1,0,0,0]}
{"k":2,"t":0.066,"entity":"hand","p":[0.2,0,0.2],"q":[0.7071067811865476,0,0,0.7071067811865476]}
{"k":2,"t":0.066,"entity":"cup","p":[0.2,0,0.05],"q":[1,0,0,0]}
{"k":2,"t":0.066,"entity":"plate","p":[0.5,0,0.0],"q":[1,0,0,0]}
)";

} // namespace

TEST(RigidTransform, ComposeWithIdentity) {
    std::mt19937_64 rng(1);
    const auto t = random_transform(rng);
    EXPECT_TRUE(approx_equal(compose(RigidTransform{}, t), t, 1e-15));
}

TEST(RigidTransform, ComposeWithInverseIsIdentity) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const auto t = random_transform(rng);
        EXPECT_LT(deviation_from_identity(compose(t, t.inverse())), 1e-9);
        EXPECT_LT(deviation_from_identity(compose(t.inverse(), t)), 1e-9);
    }
}

TEST(RigidTransform, ComposeMatchesDenseProduct) {
    const auto a = compose(RigidTransform::rotation_z(deg_to_rad(90)), RigidTransform::from_translation({1, 0, 0}));
    const auto b = RigidTransform::from_translation({0, 1, 0});
    const Mat4 expected = dense_product(a.matrix(), b.matrix());
    EXPECT_LT((compose(a, b).matrix() - expected).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(compose(a, b).translation().x(), -1.0, 1e-12);
    EXPECT_NEAR(compose(a, b).translation().y(), 1.0, 1e-12);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto x = random_transform(rng);
        const auto y = random_transform(rng);
        EXPECT_LT((compose(x, y).matrix() - dense_product(x.matrix(), y.matrix())).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(RigidTransform, CompositionIsAssociative) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_transform(rng), b = random_transform(rng), c = random_transform(rng);
        EXPECT_TRUE(approx_equal(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-9));
    }
}

TEST(RigidTransform, RejectsNonRotation) {
    Mat3 m = Mat3::Identity();
    m(0, 0) = -1.0;
    EXPECT_THROW(RigidTransform(m, Vec3::Zero()), ValidationError);
    EXPECT_THROW(RigidTransform(2.0 * Mat3::Identity(), Vec3::Zero()), ValidationError);
}

TEST(RigidTransform, QuaternionHasNonNegativeW) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) EXPECT_GE(random_transform(rng).quaternion().w(), 0.0);
}

TEST(RelativePose, CoincidentFramesGiveIdentity) {
    std::mt19937_64 rng(6);
    const auto t = random_transform(rng);
    EXPECT_LT(deviation_from_identity(relative_pose(t, t)), 1e-12);
}

TEST(RelativePose, BackgroundAtOrigin) {
    const auto r = relative_pose(RigidTransform::from_translation({0, 0, 0.15}), RigidTransform{});
    EXPECT_EQ(r.translation(), Vec3(0, 0, 0.15));
    EXPECT_EQ(r.rotation(), Mat3::Identity());
}

TEST(RelativePose, RoundTripAndEquivariance) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
        const auto om = random_transform(rng), bkg = random_transform(rng), g = random_transform(rng);
        const auto rel = relative_pose(om, bkg);
        EXPECT_TRUE(approx_equal(compose(bkg, rel), om, 1e-9));
        EXPECT_TRUE(approx_equal(relative_pose(compose(g, om), compose(g, bkg)), rel, 1e-9));
    }
}

TEST(Recording, LoadsTwoEntityFixture) {
    const auto demo = parse_demonstration(std::string(kTwoEntityFixture));
    EXPECT_EQ(demo.objects.size(), 2u);
    EXPECT_EQ(demo.object("cup").size(), 3u);
    EXPECT_EQ(demo.object("plate").size(), 3u);
    EXPECT_EQ(demo.hand.size(), 3u);
    EXPECT_EQ(demo.manipulated, "cup");
    EXPECT_EQ(demo.model("plate").labels(), std::vector<std::string>{"plate center"});
    EXPECT_NEAR(demo.hand[2].pose().rotation()(1, 0), 1.0, 1e-12);
}

TEST(Recording, SaveLoadIsBitIdentical) {
    const auto demo = parse_demonstration(std::string(kTwoEntityFixture));
    const auto text = serialize_demonstration(demo);
    const auto again = parse_demonstration(text);
    EXPECT_EQ(again, demo);
    EXPECT_EQ(serialize_demonstration(again), text);
}

TEST(Recording, DuplicateFrameIsValidationError) {
    std::string text = kTwoEntityFixture;
    text += R"({"k":2,"t":0.1,"entity":"cup","p":[0.2,0,0.05],"q":[1,0,0,0]})";
    EXPECT_THROW(parse_demonstration(text), ValidationError);
}

TEST(Recording, MalformedLineReportsLineNumber) {
    std::string text = kTwoEntityFixture;
    text += "{\"k\": 3, oops\n";
    try {
        parse_demonstration(text);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 11u);
    }
}

TEST(Recording, MissingBackgroundIsSchemaError) {
    std::string text = kTwoEntityFixture;
    text.replace(text.find(R"("background":"plate",)"), 21, "");
    EXPECT_THROW(parse_demonstration(text), SchemaError);
}

TEST(Recording, RejectsDenormalizedQuaternion) {
    const std::string text = std::string(kTwoEntityFixture).substr(0, std::string(kTwoEntityFixture).find('\n') + 1) +
                             R"({"k":0,"t":0.0,"entity":"hand","p":[0,0,0],"q":[1.01,0,0,0]})" "\n";
    EXPECT_THROW(parse_demonstration(text), ValidationError);
}

TEST(Recording, NormalizesSmallQuaternionDrift) {
    std::string text = kTwoEntityFixture;
    const auto pos = text.find(R"("q":[1,0,0,0]})");
    text.replace(pos, 14, R"("q":[1.0000005,0,0,0]})");
    const auto demo = parse_demonstration(text);
    EXPECT_DOUBLE_EQ(demo.hand[0].orientation().norm(), 1.0);
}

TEST(Recording, MissingEntityAtFrameIsRejected) {
    std::string text = kTwoEntityFixture;
    const auto pos = text.rfind(R"({"k":2,"t":0.066,"entity":"plate")");
    text.erase(pos);
    EXPECT_THROW(parse_demonstration(text), ValidationError);
}
