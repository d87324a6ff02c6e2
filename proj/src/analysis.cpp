#include "che/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "che/errors.hpp"

namespace che::analysis {

BigInt binomial(std::uint32_t n, std::uint32_t k) {
    if (k > n)
        return 0;
    if (k > n - k)
        k = n - k;
    BigInt result = 1;
    for (std::uint32_t i = 1; i <= k; ++i) {
        result *= n - k + i;
        result /= i;
    }
    return result;
}

namespace {

void check_domain(std::uint32_t n, std::uint32_t k, std::uint32_t p) {
    if (n < 1)
        throw Error(ErrorCode::precondition, "population must be at least 1");
    if (k < 1 || k > n)
        throw Error(ErrorCode::precondition, "history size must satisfy 1 <= k <= n");
    if (p > k)
        throw Error(ErrorCode::precondition, "threshold must satisfy p <= k");
}

} // namespace

BigRat common_prob_exact(std::uint32_t n, std::uint32_t k, std::uint32_t p) {
    check_domain(n, k, p);
    BigInt total = binomial(n, k);
    BigInt miss = 0;
    for (std::uint32_t i = 0; i < p; ++i)
        miss += binomial(n, i) * binomial(n - i, k - i) * binomial(n - k, k - i);
    return BigRat(1) - BigRat(miss, total * total);
}

BigRat common_prob_tail(std::uint32_t n, std::uint32_t k, std::uint32_t p) {
    check_domain(n, k, p);
    BigInt hits = 0;
    for (std::uint32_t i = p; i <= k; ++i)
        hits += binomial(k, i) * binomial(n - k, k - i);
    return BigRat(hits, binomial(n, k));
}

double common_prob(std::uint32_t n, std::uint32_t k, std::uint32_t p) {
    return common_prob_exact(n, k, p).convert_to<double>();
}

std::vector<TableRow> prob_table(const std::vector<std::uint32_t>& populations,
                                 const std::vector<std::uint32_t>& ks,
                                 const std::vector<std::uint32_t>& ps) {
    std::vector<TableRow> rows;
    for (std::uint32_t n : populations)
        for (std::uint32_t k : ks)
            for (std::uint32_t p : ps)
                rows.push_back(TableRow{n, k, p, common_prob(n, k, p)});
    return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream out;
    out << "population,k,p,P\n";
    char buf[32];
    for (const TableRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", row.prob);
        out << row.population << ',' << row.k << ',' << row.p << ',' << buf << '\n';
    }
    return out.str();
}

Recommendation recommend_params(std::uint32_t n) {
    if (n < 3)
        throw Error(ErrorCode::precondition, "sizing needs a population of at least 3");
    double ln_n = std::log(static_cast<double>(n));
    auto clamp = [n](long v) {
        if (v < 1)
            return std::uint32_t{1};
        if (v > static_cast<long>(n))
            return n;
        return static_cast<std::uint32_t>(v);
    };
    std::uint32_t k = clamp(std::lround(n / ln_n));
    std::uint32_t p = clamp(std::lround(std::sqrt(n / ln_n)));
    if (p > k)
        p = k;
    return Recommendation{k, p, common_prob(n, k, p)};
}

} // namespace che::analysis
