#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "che/analysis.hpp"
#include "che/errors.hpp"

using namespace che;
using namespace che::analysis;

namespace {

bool throws_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

} // namespace

TEST_CASE("binomial coefficients") {
    CHECK(binomial(0, 0) == 1);
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(5, 5) == 1);
    CHECK(binomial(5, 2) == 10);
    CHECK(binomial(4, 5) == 0);
    CHECK(binomial(30, 15) == BigInt("155117520"));
    CHECK(binomial(100, 50) == BigInt("100891344545564193334812497256"));
    // Pascal's rule on a diagonal sweep.
    for (std::uint32_t n = 1; n < 40; ++n)
        for (std::uint32_t k = 1; k <= n; ++k)
            CHECK(binomial(n, k) == binomial(n - 1, k - 1) + binomial(n - 1, k));
}

TEST_CASE("overlap probability hits pinned values") {
    CHECK(common_prob(30, 6, 3) == doctest::Approx(0.0753905).epsilon(1e-4));
    CHECK(common_prob(30, 12, 6) == doctest::Approx(0.296480).epsilon(1e-4));
    CHECK(common_prob(30, 12, 4) == doctest::Approx(0.838312).epsilon(1e-4));
    CHECK(common_prob(100, 10, 4) == doctest::Approx(0.00822488).epsilon(1e-4));
    CHECK(common_prob(100, 22, 5) == doctest::Approx(0.566208).epsilon(1e-4));
    CHECK(common_prob(100, 22, 3) == doctest::Approx(0.919269).epsilon(1e-4));
}

TEST_CASE("edge cases of the overlap probability") {
    // Sharing at least zero is certain.
    CHECK(common_prob(50, 7, 0) == doctest::Approx(1.0));
    // Full histories always coincide.
    CHECK(common_prob(10, 10, 10) == doctest::Approx(1.0));
    // Sharing all of k when the other side has n-k free slots.
    CHECK(common_prob_exact(4, 2, 2) == BigRat(1, 6));
    // k = 1: both pick the same single element.
    CHECK(common_prob_exact(9, 1, 1) == BigRat(1, 9));
}

TEST_CASE("the two independent forms agree exactly") {
    for (std::uint32_t n = 1; n <= 28; ++n)
        for (std::uint32_t k = 1; k <= n; ++k)
            for (std::uint32_t p = 0; p <= k; p += (k > 6 ? 3 : 1))
                CHECK(common_prob_exact(n, k, p) == common_prob_tail(n, k, p));
    CHECK(common_prob_exact(100, 22, 5) == common_prob_tail(100, 22, 5));
    CHECK(common_prob_exact(200, 40, 9) == common_prob_tail(200, 40, 9));
}

TEST_CASE("domain violations throw") {
    CHECK(throws_code(ErrorCode::precondition, [] { common_prob(0, 1, 0); }));
    CHECK(throws_code(ErrorCode::precondition, [] { common_prob(10, 0, 0); }));
    CHECK(throws_code(ErrorCode::precondition, [] { common_prob(10, 11, 2); }));
    CHECK(throws_code(ErrorCode::precondition, [] { common_prob(10, 5, 6); }));
}

TEST_CASE("recommended parameters follow the sizing rules") {
    Recommendation r100 = recommend_params(100);
    CHECK(r100.k == 22);
    CHECK(r100.p == 5);
    CHECK(r100.prob == doctest::Approx(0.566208).epsilon(1e-4));

    Recommendation r30 = recommend_params(30);
    CHECK(r30.k == 9);
    CHECK(r30.p == 3);

    Recommendation r3 = recommend_params(3);
    CHECK(r3.k == 3);
    CHECK(r3.p == 2);
    CHECK(r3.prob == doctest::Approx(1.0));

    Recommendation r1000 = recommend_params(1000);
    CHECK(r1000.k == 145);
    CHECK(r1000.p == 12);

    CHECK(throws_code(ErrorCode::precondition, [] { recommend_params(2); }));
}

TEST_CASE("table generation is population-major and stable") {
    auto rows = prob_table({30, 100}, {6, 12}, {3, 4});
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].population == 30);
    CHECK(rows[0].k == 6);
    CHECK(rows[0].p == 3);
    CHECK(rows[3].population == 30);
    CHECK(rows[3].k == 12);
    CHECK(rows[3].p == 4);
    CHECK(rows[4].population == 100);

    std::string csv = table_csv(rows);
    CHECK(csv.substr(0, csv.find('\n')) == "population,k,p,P");
    CHECK(csv.find("30,6,3,0.075391") != std::string::npos);
    CHECK(csv.find("30,12,4,0.838312") != std::string::npos);
    // Regenerating produces identical bytes.
    CHECK(table_csv(prob_table({30, 100}, {6, 12}, {3, 4})) == csv);
}
