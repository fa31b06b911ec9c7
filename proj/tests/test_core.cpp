#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "bfdreg/core.hpp"
#include "bfdreg/fft.hpp"
#include "bfdreg/io.hpp"
#include "bfdreg/rng.hpp"

using namespace bfdreg;

TEST_CASE("power-of-two predicate") {
    CHECK(is_pow2(1));
    CHECK(is_pow2(2));
    CHECK(is_pow2(1024));
    CHECK_FALSE(is_pow2(0));
    CHECK_FALSE(is_pow2(-4));
    CHECK_FALSE(is_pow2(3));
    CHECK_FALSE(is_pow2(12));
}

TEST_CASE("image construction and validation") {
    Image a(4, 2, 0.5);
    CHECK(a.size() == 8);
    a.at(3, 1) = 7.0;
    CHECK(a.values[1 * 4 + 3] == 7.0);  // row-major
    CHECK_NOTHROW(a.validate());
    a.values[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(a.validate(), std::invalid_argument);

    CHECK_THROWS_AS(Image(3, 4, 0.5), std::invalid_argument);   // non power of two
    CHECK_THROWS_AS(Image(4, 4, 0.0), std::invalid_argument);   // zero spacing
    CHECK_THROWS_AS(Image(4, 4, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(Image(0, 4, 0.5), std::invalid_argument);
}

TEST_CASE("measure-weighted inner products and norms") {
    Image a(2, 2, 0.5), b(2, 2, 0.5);
    a.values = {1, 2, 3, 4};
    b.values = {2, 0, 1, -1};
    // plain dot = 2 + 0 + 3 - 4 = 1, cell measure 0.25
    CHECK(inner_product(a, b) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(norm(a) == doctest::Approx(0.5 * std::sqrt(30.0)).epsilon(1e-15));

    Image c(2, 2, 0.25);
    c.values = {1, 1, 1, 1};
    CHECK_THROWS_AS(inner_product(a, c), std::invalid_argument);  // spacing differs

    Sinogram s(2, 2, 0.5, 0.1), t(2, 2, 0.5, 0.1);
    s.values = {1, 2, 3, 4};
    t.values = {1, 1, 1, 1};
    CHECK(inner_product(s, t) == doctest::Approx(10.0 * 0.05).epsilon(1e-15));

    CoeffSeq x, y;
    x.frame_id = y.frame_id = "f";
    x.entries = {1, -2};
    y.entries = {3, 5};
    CHECK(inner_product(x, y) == doctest::Approx(-7.0).epsilon(1e-15));
    y.frame_id = "g";
    CHECK_THROWS_AS(inner_product(x, y), std::invalid_argument);
}

TEST_CASE("weighted l1 norm and its overflow sentinel") {
    CoeffSeq xi;
    xi.frame_id = "f";
    xi.entries = {1.0, -2.0, 0.5};
    Weights d;
    d.entries = {2.0, 1.0, 4.0};
    CHECK(weighted_l1_norm(xi, d) == doctest::Approx(6.0).epsilon(1e-15));

    xi.entries = {1e308, 1e308, 1e308};
    d.entries = {1.0, 1.0, 1.0};
    const double v = weighted_l1_norm(xi, d);
    CHECK(std::isinf(v));

    d.entries = {1.0, 1.0};
    CHECK_THROWS_AS(weighted_l1_norm(xi, d), std::invalid_argument);
}

TEST_CASE("weights validation") {
    Weights d;
    d.entries = {1.0, 0.5, 2.0};
    CHECK_NOTHROW(d.validate(0.5));
    CHECK_THROWS_AS(d.validate(0.6), std::invalid_argument);
    d.entries[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(d.validate(0.0), std::invalid_argument);
}

TEST_CASE("support indices use a strict threshold") {
    CoeffSeq xi;
    xi.entries = {0.0, 1e-9, -2.0, 1e-8};
    const auto s = support_indices(xi, 1e-9);
    REQUIRE(s.size() == 2);
    CHECK(s[0] == 2);
    CHECK(s[1] == 3);
}

TEST_CASE("rng is deterministic and mix_seed decorrelates streams") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));

    Rng g(7);
    double mean = 0.0, var = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double v = g.gaussian();
        mean += v;
        var += v * v;
    }
    mean /= n;
    var = var / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.05);

    Rng u(9);
    for (int i = 0; i < 1000; ++i) {
        const double v = u.uniform(2.0, 3.0);
        CHECK(v >= 2.0);
        CHECK(v < 3.0);
    }
    for (int i = 0; i < 1000; ++i) CHECK(u.next_below(5) < 5);
}

TEST_CASE("fft matches a hand DFT and round-trips") {
    std::vector<std::complex<double>> v = {1.0, 2.0, 3.0, 4.0};
    fft_pow2(v, false);
    // X_k = sum_n x_n exp(-2 pi i k n / 4)
    CHECK(v[0].real() == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(v[0].imag() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v[1].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(v[1].imag() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(v[2].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(v[2].imag() == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v[3].real() == doctest::Approx(-2.0).epsilon(1e-14));
    CHECK(v[3].imag() == doctest::Approx(-2.0).epsilon(1e-14));

    fft_pow2(v, true);  // unnormalized inverse
    CHECK(v[1].real() / 4.0 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(v[3].real() / 4.0 == doctest::Approx(4.0).epsilon(1e-14));

    std::vector<std::complex<double>> bad(3);
    CHECK_THROWS_AS(fft_pow2(bad, false), std::invalid_argument);

    // impulse spreads flat
    std::vector<std::complex<double>> e(8, 0.0);
    e[0] = 1.0;
    fft_pow2(e, false);
    for (const auto& z : e) {
        CHECK(z.real() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(z.imag() == doctest::Approx(0.0).epsilon(1e-14));
    }

    CHECK(dft_signed_bin(0, 8) == 0);
    CHECK(dft_signed_bin(3, 8) == 3);
    CHECK(dft_signed_bin(4, 8) == -4);
    CHECK(dft_signed_bin(7, 8) == -1);
}

TEST_CASE("binary arrays round-trip exactly") {
    const std::string dir = "io_test_tmp";
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/a.bfda";

    Array a;
    a.dims = {2, 3};
    a.data = {1.0 / 3.0, 3.141592653589793, -0.0, 1e-300, 1e308, -7.25};
    write_array(path, a);
    const Array b = read_array(path);
    REQUIRE(b.dims == a.dims);
    REQUIRE(b.data.size() == a.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        CHECK(std::memcmp(&a.data[i], &b.data[i], sizeof(double)) == 0);
    }

    // corrupt the magic
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.put('X');
    }
    CHECK_THROWS_AS(read_array(path), std::runtime_error);

    // truncate
    write_array(path, a);
    std::filesystem::resize_file(path, 20);
    CHECK_THROWS_AS(read_array(path), std::runtime_error);

    CHECK_THROWS_AS(read_array(dir + "/missing.bfda"), std::runtime_error);
    std::filesystem::remove_all(dir);
}

TEST_CASE("image and sinogram containers survive save/load") {
    const std::string dir = "io_test_tmp2";
    std::filesystem::create_directories(dir);
    Image img(4, 2, 0.5);
    for (std::size_t i = 0; i < img.size(); ++i) img.values[i] = 0.1 * static_cast<double>(i);
    save_image(dir + "/i.bfda", img);
    const Image got = load_image(dir + "/i.bfda", 0.5);
    CHECK(got.same_shape(img));
    CHECK(got.values == img.values);

    Sinogram s(3, 4, 0.25, 2.0);
    for (std::size_t i = 0; i < s.size(); ++i) s.values[i] = -1.5 + static_cast<double>(i);
    save_sinogram(dir + "/s.bfda", s);
    const Sinogram gs = load_sinogram(dir + "/s.bfda", 0.25, 2.0);
    CHECK(gs.same_shape(s));
    CHECK(gs.values == s.values);

    CoeffSeq xi;
    xi.frame_id = "frame-x";
    xi.entries = {1.0, -2.5, 0.0};
    save_coeffs(dir + "/c.bfda", xi);
    const CoeffSeq gx = load_coeffs(dir + "/c.bfda", "frame-x");
    CHECK(gx.frame_id == "frame-x");
    CHECK(gx.entries == xi.entries);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv writes RFC-4180 and round-trips doubles") {
    CHECK(csv_format_double(0.5) == "0.5");
    const double tricky = 0.1 + 0.2;
    const double back = std::strtod(csv_format_double(tricky).c_str(), nullptr);
    CHECK(back == tricky);

    const std::string dir = "io_test_tmp3";
    std::filesystem::create_directories(dir);
    CsvTable t;
    t.header = {"name", "value"};
    t.rows = {{"plain", "1"},
              {"comma,inside", "2"},
              {"quote\"inside", "3"},
              {"new\nline", "4"}};
    write_csv(dir + "/t.csv", t);

    // written bytes use CRLF row endings and doubled quotes
    std::ifstream f(dir + "/t.csv", std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    CHECK(raw.find("\r\n") != std::string::npos);
    CHECK(raw.find("\"comma,inside\"") != std::string::npos);
    CHECK(raw.find("\"quote\"\"inside\"") != std::string::npos);

    const CsvTable got = read_csv(dir + "/t.csv");
    REQUIRE(got.header == t.header);
    REQUIRE(got.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) CHECK(got.rows[i] == t.rows[i]);
    std::filesystem::remove_all(dir);
}
