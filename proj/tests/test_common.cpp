#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "stylerl/common.hpp"
#include "stylerl/mat.hpp"

using namespace stylerl;

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64(std::string_view{}) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64(std::string_view{"a"}) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64(std::string_view{"foobar"}) == 0x85944171f73967e8ULL);
    CHECK(hash_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("derive_seed separates streams and is stable") {
    auto a = derive_seed(42, 1);
    auto b = derive_seed(42, 2);
    auto c = derive_seed(43, 1);
    CHECK(a != b);
    CHECK(a != c);
    CHECK(derive_seed(42, 1) == a);
    CHECK(derive_seed(42, 1, 7) != a);
}

TEST_CASE("rng replays bit-exactly from the same seed") {
    Rng r1(123), r2(123);
    for (int i = 0; i < 100; ++i) {
        CHECK(r1.next_u64() == r2.next_u64());
        CHECK(r1.uniform() == r2.uniform());
    }
}

TEST_CASE("uniform stays in [0,1) and has a sane mean") {
    Rng r(7);
    double sum = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(std::abs(sum / n - 0.5) < 0.01);
}

TEST_CASE("index covers the range and rejects empty ranges") {
    Rng r(9);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) ++counts[r.index(5)];
    for (int c : counts) CHECK(c > 800);
    CHECK_THROWS_AS(r.index(0), std::invalid_argument);
}

TEST_CASE("categorical follows the weights") {
    Rng r(11);
    std::vector<double> p = {0.1, 0.2, 0.7};
    std::vector<int> counts(3, 0);
    const int n = 30000;
    for (int i = 0; i < n; ++i) ++counts[size_t(r.categorical(p))];
    CHECK(std::abs(counts[0] / double(n) - 0.1) < 0.01);
    CHECK(std::abs(counts[1] / double(n) - 0.2) < 0.015);
    CHECK(std::abs(counts[2] / double(n) - 0.7) < 0.015);
}

TEST_CASE("categorical never lands on a zero-probability bucket") {
    Rng r(13);
    std::vector<double> p = {0.0, 1.0, 0.0};
    for (int i = 0; i < 1000; ++i) CHECK(r.categorical(p) == 1);
}

TEST_CASE("normal has roughly the requested moments") {
    Rng r(17);
    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        double x = r.normal(2.0, 3.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 2.0) < 0.1);
    CHECK(std::abs(var - 9.0) < 0.4);
}

TEST_CASE("shuffle is a permutation and depends on the seed") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto w = v;
    Rng r(21);
    r.shuffle(w);
    auto sorted = w;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == v);
    CHECK(w != v);

    auto w2 = v;
    Rng r2(21);
    r2.shuffle(w2);
    CHECK(w2 == w);
}

TEST_CASE("matmul agrees with a hand-computed product") {
    Mat a(2, 3), b(3, 2), c(2, 2);
    double av[] = {1, 2, 3, 4, 5, 6};
    double bv[] = {7, 8, 9, 10, 11, 12};
    std::copy(std::begin(av), std::end(av), a.a.begin());
    std::copy(std::begin(bv), std::end(bv), b.a.begin());
    matmul(a, b, c);
    CHECK(c.at(0, 0) == doctest::Approx(58));
    CHECK(c.at(0, 1) == doctest::Approx(64));
    CHECK(c.at(1, 0) == doctest::Approx(139));
    CHECK(c.at(1, 1) == doctest::Approx(154));
}

TEST_CASE("matmul_nt equals matmul against the explicit transpose") {
    Rng r(31);
    Mat a(4, 6), b(5, 6), bt(6, 5);
    for (auto& x : a.a) x = r.normal(0, 1);
    for (auto& x : b.a) x = r.normal(0, 1);
    for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) bt.at(j, i) = b.at(i, j);
    Mat c1(4, 5), c2(4, 5);
    matmul_nt(a, b, c1);
    matmul(a, bt, c2);
    for (size_t i = 0; i < c1.a.size(); ++i)
        CHECK(c1.a[i] == doctest::Approx(c2.a[i]).epsilon(1e-12));
}

TEST_CASE("matmul_tn_acc accumulates the transposed product") {
    Rng r(33);
    Mat a(3, 4), b(3, 2), c(4, 2), expect(4, 2);
    for (auto& x : a.a) x = r.normal(0, 1);
    for (auto& x : b.a) x = r.normal(0, 1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += a.at(k, i) * b.at(k, j);
            expect.at(i, j) = acc;
        }
    matmul_tn_acc(a, b, c);
    matmul_tn_acc(a, b, c);  // second call doubles the result
    for (size_t i = 0; i < c.a.size(); ++i)
        CHECK(c.a[i] == doctest::Approx(2.0 * expect.a[i]).epsilon(1e-12));
}

TEST_CASE("text file round trip and missing-file error") {
    namespace fs = std::filesystem;
    auto path = (fs::temp_directory_path() / "stylerl_common_io_test.txt").string();
    write_text_file(path, "hello\nworld\n");
    CHECK(read_text_file(path) == "hello\nworld\n");
    fs::remove(path);
    CHECK_THROWS_AS(read_text_file(path), ValidationError);
}
