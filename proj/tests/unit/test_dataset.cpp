#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "orderedae/dataset.hpp"
#include "orderedae/errors.hpp"

using namespace oae;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "orderedae_unit";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST(GenTwoVar, ZeroInputGivesZero) {
    Rng rng(1);
    Dataset d = gen_two_var(101, rng);
    // No draw lands on 0 exactly, so check the generating map there directly.
    EXPECT_EQ(std::tanh(3 * 0.0), 0.0);
    for (std::size_t k = 0; k < d.num_samples(); ++k) EXPECT_EQ(d.x(1, k), std::tanh(3 * d.x(0, k)));
}

TEST(GenTwoVar, ReferenceTanhValue) {
    EXPECT_NEAR(std::tanh(3 * 0.2), 0.537050, 1e-6);
}

TEST(GenTwoVar, SatisfiesEquationExactlyAndStaysInRange) {
    for (auto s : {Sampling::Iid, Sampling::Antithetic}) {
        Rng rng(7);
        Dataset d = gen_two_var(100, rng, 0.5, s);
        ASSERT_EQ(d.num_vars(), 2u);
        ASSERT_EQ(d.names.size(), 2u);
        for (std::size_t k = 0; k < 100; ++k) {
            EXPECT_LE(std::abs(d.x(0, k)), 0.5);
            EXPECT_EQ(d.x(1, k) - std::tanh(3 * d.x(0, k)), 0.0);
        }
    }
}

TEST(GenTwoVar, LargeSampleMeanNearZero) {
    for (auto s : {Sampling::Iid, Sampling::Antithetic}) {
        Rng rng(3);
        Dataset d = gen_two_var(100000, rng, 1.0, s);
        EXPECT_LE(std::abs(row_means(d.x)[0]), 0.01);
    }
}

TEST(GenTwoVar, AntitheticPairsCancel) {
    Rng rng(5);
    Dataset d = gen_two_var(10, rng);
    for (std::size_t k = 0; k < 10; k += 2) EXPECT_EQ(d.x(0, k + 1), -d.x(0, k));
    EXPECT_EQ(row_means(d.x)[0], 0.0);
}

TEST(GenTwoVar, SeedDeterministic) {
    Rng a(9), b(9);
    EXPECT_EQ(gen_two_var(50, a).x, gen_two_var(50, b).x);
}

TEST(GenFiveVar, NoiseFreeEquationsHold) {
    Rng rng(2);
    Dataset d = gen_five_var(200, rng, 0.0);
    ASSERT_EQ(d.num_vars(), 5u);
    for (std::size_t k = 0; k < 200; ++k) {
        EXPECT_EQ(d.x(3, k) - std::sin(3 * d.x(0, k)), 0.0);
        EXPECT_EQ(d.x(4, k), d.x(1, k) - std::tan(0.5 * d.x(2, k)));
    }
}

TEST(GenFiveVar, HandCases) {
    EXPECT_EQ(std::sin(3 * 0.0), 0.0);
    EXPECT_EQ(1.0 - std::tan(0.5 * 0.0), 1.0);
}

TEST(GenFiveVar, NoiseVarianceWithinChiSquareBand) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Dataset d = gen_five_var(300, rng, 0.1);
        std::vector<double> eta(300);
        for (std::size_t k = 0; k < 300; ++k) eta[k] = d.x(3, k) - std::sin(3 * d.x(0, k));
        const double v = oracle::row_sample_variance(eta);
        EXPECT_GE(v, 0.05);
        EXPECT_LE(v, 0.18);
        ASSERT_TRUE(d.noise_free.has_value());
        EXPECT_EQ((*d.noise_free)(3, 0), std::sin(3 * d.x(0, 0)));
    }
}

TEST(Normalize, StandardizesRows) {
    Dataset d;
    d.x = Matrix{{1, 2, 3}, {10, 0, -4}};
    d.names = {"a", "b"};
    Dataset z = normalize(d);
    ASSERT_TRUE(z.norm.has_value());
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_NEAR(row_means(z.x)[i], 0, 1e-12);
        EXPECT_NEAR(row_variances(z.x)[i], 1, 1e-10);
        EXPECT_GT(z.norm->scales[i], 0);
    }
    EXPECT_NEAR(z.x(0, 0), -1, 1e-12);
    EXPECT_NEAR(z.x(0, 2), 1, 1e-12);
}

TEST(Normalize, FixedPointOnStandardRows) {
    Dataset d;
    d.x = Matrix{{-1, 0, 1}, {1, 0, -1}};
    d.names = {"a", "b"};
    EXPECT_LE(max_abs_diff(normalize(d).x, d.x), 1e-12);
}

TEST(Normalize, RoundTrip) {
    Rng rng(4);
    Dataset d;
    d.x = oracle::random_matrix(4, 50, rng, -5, 20);
    d.names = {"a", "b", "c", "d"};
    Dataset z = normalize(d);
    EXPECT_EQ(z.num_samples(), 50u);
    EXPECT_EQ(z.num_vars(), 4u);
    EXPECT_LE(max_abs_diff(denormalize(z).x, d.x), 1e-12);
}

TEST(Normalize, ConstantRowNamed) {
    Dataset d;
    d.x = Matrix{{1, 2, 3}, {4, 4, 4}};
    d.names = {"x1", "flat"};
    try {
        normalize(d);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
    }
}

TEST(Csv, RoundTripIsExact) {
    Rng rng(8);
    Dataset d;
    d.x = oracle::random_matrix(2, 3, rng);
    d.x(0, 0) = 0.1;
    d.x(1, 2) = -1e-300;
    d.names = {"u", "v"};
    const auto p = temp_file("roundtrip.csv");
    save_csv(d, p);
    Dataset back = load_csv(p);
    EXPECT_EQ(back.x, d.x);
    EXPECT_EQ(back.names, d.names);
}

TEST(Csv, RowsAreSamples) {
    Dataset d;
    d.x = Matrix{{1, 2, 3}, {4, 5, 6}};
    d.names = {"a", "b"};
    const auto p = temp_file("orient.csv");
    save_csv(d, p);
    std::ifstream in(p);
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "a,b");
    EXPECT_EQ(first, "1,4");
}

TEST(Csv, TextCellReportsLine) {
    const auto p = temp_file("text.csv");
    write_file(p, "a,b\n1,2\n3,4\n5,oops\n7,8\n");
    try {
        load_csv(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 4u);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(Csv, RaggedRowReportsLine) {
    const auto p = temp_file("ragged.csv");
    write_file(p, "a,b\n1,2\n3\n");
    try {
        load_csv(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Csv, EmptyFileIsAnError) {
    const auto p = temp_file("empty.csv");
    write_file(p, "");
    EXPECT_THROW(load_csv(p), ParseError);
}

TEST(Csv, MissingFileIsAnError) {
    EXPECT_THROW(load_csv(temp_file("does_not_exist.csv")), ParseError);
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(-2.0), "-2");
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.normal() * std::pow(10.0, rng.uniform(-20, 20));
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}

TEST(Sampling, Names) {
    EXPECT_EQ(sampling_from_string("iid"), Sampling::Iid);
    EXPECT_EQ(sampling_from_string(to_string(Sampling::Antithetic)), Sampling::Antithetic);
    EXPECT_THROW(sampling_from_string("sobol"), ContractError);
}
