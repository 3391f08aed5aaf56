#pragma once

#include <cstdint>
#include <vector>

#include "permrank/dataset.hpp"

namespace permrank {

// 2x2 layout:
//              feature=1  feature=0
//   malware        a          b
//   benign         c          d
struct ContingencyTable {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;

    std::uint64_t n() const noexcept { return a + b + c + d; }
    std::uint64_t row1() const noexcept { return a + b; }
    std::uint64_t row2() const noexcept { return c + d; }
    std::uint64_t col1() const noexcept { return a + c; }
    std::uint64_t col2() const noexcept { return b + d; }
};

ContingencyTable contingency(const FeatureMatrix& m, std::size_t column);

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // a zero marginal: no association is testable
};

// Pearson chi-square with 1 degree of freedom; optional Yates continuity
// correction. A zero marginal yields statistic 0, p 1, degenerate flag set.
ChiSquareResult chi_square_test(const ContingencyTable& t, bool yates = false);

// Regularized upper incomplete gamma Q(a, x); the chi-square tail is
// Q(1/2, x/2).
double gamma_q(double a, double x);

// log(k!) table. Held in long double: Fisher p-values difference log terms
// of magnitude ~n*log(n), and double alone cannot keep the documented
// relative error at corpus-size n.
class LogFactorialTable {
public:
    explicit LogFactorialTable(std::uint64_t max_n);

    long double operator[](std::uint64_t k) const { return table_[k]; }
    std::uint64_t max_n() const noexcept { return table_.size() - 1; }

private:
    std::vector<long double> table_;
};

// Two-sided Fisher exact p: sums hypergeometric masses no larger than the
// observed one, with a (1 + 1e-7) tolerance for ties. Always in [0, 1].
double fisher_exact_test(const ContingencyTable& t, const LogFactorialTable& logfact);
double fisher_exact_test(const ContingencyTable& t);

}  // namespace permrank
