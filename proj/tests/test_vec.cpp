#include <gtest/gtest.h>

#include <stdexcept>

#include "orlomo/vec.hpp"

using orlomo::ParamVector;

TEST(ParamVectorTest, ConstructAndFill) {
    ParamVector v(3, 2.5);
    EXPECT_EQ(v.dim(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(v[i], 2.5);
    ParamVector z(4);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(z[i], 0.0);
}

TEST(ParamVectorTest, Arithmetic) {
    ParamVector a(std::vector<double>{1.0, 2.0, 3.0});
    ParamVector b(std::vector<double>{4.0, -1.0, 0.5});
    ParamVector s = a + b;
    EXPECT_EQ(s[0], 5.0);
    EXPECT_EQ(s[1], 1.0);
    EXPECT_EQ(s[2], 3.5);
    ParamVector d = a - b;
    EXPECT_EQ(d[0], -3.0);
    ParamVector sc = 2.0 * a;
    EXPECT_EQ(sc[2], 6.0);
    a.axpy(3.0, b);
    EXPECT_EQ(a[0], 13.0);
    EXPECT_EQ(a[1], -1.0);
}

TEST(ParamVectorTest, DotAndNorms) {
    ParamVector a(std::vector<double>{3.0, 4.0});
    EXPECT_EQ(norm_sq(a), 25.0);
    EXPECT_EQ(norm(a), 5.0);
    ParamVector b(std::vector<double>{1.0, -1.0});
    EXPECT_EQ(dot(a, b), -1.0);
}

TEST(ParamVectorTest, DimensionMismatchThrows) {
    ParamVector a(2), b(3);
    EXPECT_THROW(a += b, std::invalid_argument);
    EXPECT_THROW(a.axpy(1.0, b), std::invalid_argument);
    EXPECT_THROW(dot(a, b), std::invalid_argument);
}

TEST(ParamVectorTest, AllFinite) {
    ParamVector a(std::vector<double>{1.0, 2.0});
    EXPECT_TRUE(a.all_finite());
    a[1] = std::numeric_limits<double>::infinity();
    EXPECT_FALSE(a.all_finite());
    a[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(a.all_finite());
}
