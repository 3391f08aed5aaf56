#include "permrank/stats.hpp"

#include <algorithm>
#include <cmath>

#include "permrank/errors.hpp"

namespace permrank {

ContingencyTable contingency(const FeatureMatrix& m, std::size_t column) {
    if (column >= m.feature_count()) raise(errc::schema_error, "column index out of range");
    ContingencyTable t;
    for (std::size_t r = 0; r < m.row_count(); ++r) {
        const bool has = m.at(r, column) != 0;
        if (m.label(r) == Label::Malware) {
            (has ? t.a : t.b) += 1;
        } else {
            (has ? t.c : t.d) += 1;
        }
    }
    return t;
}

namespace {

constexpr double kGammaEps = 1e-15;
constexpr int kGammaMaxIter = 500;

// Lower regularized gamma P(a, x) by series; converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < kGammaMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized gamma Q(a, x) by Lentz continued fraction; for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kGammaMaxIter; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kGammaEps) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) raise(errc::bad_parameter, "gamma_q needs a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_fraction(a, x);
}

ChiSquareResult chi_square_test(const ContingencyTable& t, bool yates) {
    ChiSquareResult r;
    if (t.row1() == 0 || t.row2() == 0 || t.col1() == 0 || t.col2() == 0) {
        r.degenerate = true;
        return r;  // statistic 0, p 1
    }
    const double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
    const double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
    const double n = a + b + c + d;
    double diff = std::fabs(a * d - b * c);
    if (yates) diff = std::max(0.0, diff - n / 2.0);
    r.statistic = n * diff * diff /
                  (static_cast<double>(t.row1()) * static_cast<double>(t.row2()) *
                   static_cast<double>(t.col1()) * static_cast<double>(t.col2()));
    r.p_value = gamma_q(0.5, r.statistic / 2.0);
    return r;
}

LogFactorialTable::LogFactorialTable(std::uint64_t max_n) {
    table_.resize(max_n + 1);
    table_[0] = 0.0L;
    // Accumulated in long double; lgammal per entry would also work but the
    // running sum is cheaper and exact to the same precision here.
    long double acc = 0.0L;
    for (std::uint64_t k = 1; k <= max_n; ++k) {
        acc += std::log(static_cast<long double>(k));
        table_[k] = acc;
    }
}

namespace {

constexpr long double kFisherTieTolerance = 1e-7L;

// log P(A = k) for the hypergeometric distribution fixed by t's margins.
long double log_hyper_mass(const ContingencyTable& t, std::uint64_t k, const LogFactorialTable& lf) {
    const std::uint64_t r1 = t.row1(), r2 = t.row2(), c1 = t.col1(), c2 = t.col2(), n = t.n();
    const std::uint64_t a = k, b = r1 - k, c = c1 - k, d = r2 - (c1 - k);
    return lf[r1] + lf[r2] + lf[c1] + lf[c2] - lf[n] - lf[a] - lf[b] - lf[c] - lf[d];
}

}  // namespace

double fisher_exact_test(const ContingencyTable& t, const LogFactorialTable& logfact) {
    const std::uint64_t n = t.n();
    if (n == 0) return 1.0;
    if (n > logfact.max_n()) raise(errc::bad_parameter, "log-factorial table too small for n");
    if (t.row1() == 0 || t.row2() == 0 || t.col1() == 0 || t.col2() == 0) return 1.0;

    const std::uint64_t r1 = t.row1(), r2 = t.row2(), c1 = t.col1();
    const std::uint64_t k_lo = c1 > r2 ? c1 - r2 : 0;
    const std::uint64_t k_hi = std::min(r1, c1);

    const long double log_obs = log_hyper_mass(t, t.a, logfact);
    const long double cutoff = log_obs + std::log1p(kFisherTieTolerance);
    long double p = 0.0L;
    for (std::uint64_t k = k_lo; k <= k_hi; ++k) {
        const long double lm = log_hyper_mass(t, k, logfact);
        if (lm <= cutoff) p += std::exp(lm);
    }
    return static_cast<double>(std::min(p, 1.0L));
}

double fisher_exact_test(const ContingencyTable& t) {
    const LogFactorialTable lf(t.n());
    return fisher_exact_test(t, lf);
}

}  // namespace permrank
