#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace che::analysis {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Exact C(n, k); zero when k > n.
BigInt binomial(std::uint32_t n, std::uint32_t k);

// Probability that two independent uniform k-subsets of an n-element
// population share at least p elements. Exact rational arithmetic.
// Domain: 1 <= k <= n, 0 <= p <= k; violations throw Error(precondition).
//
// Two independently derived forms, kept separate so they can check each
// other: the complement sum
//   P = 1 - sum_{i<p} C(n,i) C(n-i,k-i) C(n-k,k-i) / C(n,k)^2
// and the overlap tail
//   P = sum_{i>=p} C(k,i) C(n-k,k-i) / C(n,k).
BigRat common_prob_exact(std::uint32_t n, std::uint32_t k, std::uint32_t p);
BigRat common_prob_tail(std::uint32_t n, std::uint32_t k, std::uint32_t p);
double common_prob(std::uint32_t n, std::uint32_t k, std::uint32_t p);

struct TableRow {
    std::uint32_t population;
    std::uint32_t k;
    std::uint32_t p;
    double prob;
};

std::vector<TableRow> prob_table(const std::vector<std::uint32_t>& populations,
                                 const std::vector<std::uint32_t>& ks,
                                 const std::vector<std::uint32_t>& ps);

std::string table_csv(const std::vector<TableRow>& rows);

struct Recommendation {
    std::uint32_t k;
    std::uint32_t p;
    double prob;
};

// History size k = round(n / ln n) and threshold p = round(sqrt(n / ln n))
// for a population of n; needs n >= 3.
Recommendation recommend_params(std::uint32_t n);

} // namespace che::analysis
