#pragma once

// Maclaurin evaluation of D_nu(z) in software floating point with enough
// digits to absorb the term cancellation, used when none of the double/long
// double routes can certify their result. Precision is chosen from tiers by
// measuring the cancellation ratio at a lower tier first.

#include <complex>
#include <optional>

#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

namespace pulab::detail::mp {

template <class T>
struct Complex {
    T re{0}, im{0};

    Complex() = default;
    Complex(T r, T i = T(0)) : re(std::move(r)), im(std::move(i)) {}

    friend Complex operator+(const Complex& a, const Complex& b) { return {a.re + b.re, a.im + b.im}; }
    friend Complex operator-(const Complex& a, const Complex& b) { return {a.re - b.re, a.im - b.im}; }
    friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
    friend Complex operator*(const Complex& a, const Complex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Complex operator*(const Complex& a, const T& s) { return {a.re * s, a.im * s}; }
    friend Complex operator/(const Complex& a, const T& s) { return {a.re / s, a.im / s}; }
    friend Complex operator/(const Complex& a, const Complex& b) {
        const T d = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
    }
    Complex& operator+=(const Complex& b) { return *this = *this + b; }
    Complex& operator*=(const Complex& b) { return *this = *this * b; }
};

template <class T>
T abs(const Complex<T>& z) {
    using std::sqrt;
    return sqrt(z.re * z.re + z.im * z.im);
}

template <class T>
Complex<T> log(const Complex<T>& z) {
    using std::atan2;
    using std::log;
    return {log(abs(z)), atan2(z.im, z.re)};
}

template <class T>
Complex<T> exp(const Complex<T>& z) {
    using std::cos;
    using std::exp;
    using std::sin;
    const T m = exp(z.re);
    return {m * cos(z.im), m * sin(z.im)};
}

template <class T>
Complex<T> sin(const Complex<T>& z) {
    using std::cos;
    using std::cosh;
    using std::sin;
    using std::sinh;
    return {sin(z.re) * cosh(z.im), cos(z.re) * sinh(z.im)};
}

/// log Gamma(z) for Re z >= 1/2 by upward shift and Stirling with enough
/// Bernoulli terms for the working precision.
template <class T>
Complex<T> lgamma_right(Complex<T> z, int digits) {
    const T shift_to = T(digits);
    Complex<T> prod(T(1));
    Complex<T> log_shift;
    int count = 0;
    while (z.re < shift_to) {
        prod *= z;
        if (++count % 64 == 0) {
            log_shift += log(prod);
            prod = Complex<T>(T(1));
        }
        z.re += 1;
    }
    log_shift += log(prod);
    const T two_pi = 2 * boost::math::constants::pi<T>();
    using std::log;
    Complex<T> res = (z - Complex<T>(T(0.5))) * mp::log(z) - z + Complex<T>(log(two_pi) / 2);
    const Complex<T> zinv = Complex<T>(T(1)) / z;
    const Complex<T> zinv2 = zinv * zinv;
    Complex<T> pw = zinv;
    const T eps = pow(T(10), -digits - 5);
    for (int k = 1; k < 4 * digits; ++k) {
        const T b = boost::math::bernoulli_b2n<T>(k);
        const Complex<T> term = pw * (b / T((2 * k) * (2 * k - 1)));
        res += term;
        if (abs(term) < eps * abs(res)) break;
        pw *= zinv2;
    }
    return res - log_shift;
}

template <class T>
Complex<T> rgamma(const Complex<T>& z, int digits) {
    const T pi = boost::math::constants::pi<T>();
    if (z.re >= T(0.5)) return exp(-lgamma_right(z, digits));
    if (z.im == 0 && z.re == floor(z.re)) return {};
    return sin(z * pi) * exp(lgamma_right(Complex<T>(T(1)) - z, digits)) / pi;
}

struct Result {
    std::complex<long double> w, dw;  // (D, D') * exp(log_scale)
    long double log_scale = 0.0L;
    double err = 1.0;
    double log10_cancellation = 0.0;
};

template <class T>
std::complex<long double> to_scaled(const Complex<T>& v, const T& scale) {
    return {static_cast<long double>(T(v.re / scale)), static_cast<long double>(T(v.im / scale))};
}

template <unsigned Digits>
Result maclaurin_at(std::complex<double> nu_d, std::complex<double> z_d) {
    using T = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<Digits>,
                                            boost::multiprecision::et_off>;
    using C = Complex<T>;
    const int digits = static_cast<int>(Digits);
    const C nu(T(nu_d.real()), T(nu_d.imag()));
    const C z(T(z_d.real()), T(z_d.imag()));
    const T pi = boost::math::constants::pi<T>();
    const T sqpi = sqrt(pi);
    const T ln2 = boost::math::constants::ln_two<T>();
    const C one(T(1));
    const C half(T(0.5));

    const C d0 = exp(nu * half * ln2) * sqpi * rgamma((one - nu) * half, digits);
    const C dd0 = -(exp((nu + one) * half * ln2) * sqpi * rgamma(-nu * half, digits));

    const C a = nu + half;
    const C z2 = z * z;
    const C z2q = z2 * T(0.25);
    C ekm2, ekm1, ek = d0, ek1 = dd0 * z;
    C sum = ek + ek1, dsum = ek1;
    T abs_sum = abs(ek) + abs(ek1), abs_dsum = abs(ek1);
    const T tiny = pow(T(10), -digits - 8);
    int quiet = 0;
    for (int k = 0; k < 200000; ++k) {
        const C next = z2 * (-(a * ek) + z2q * ekm2) / T((k + 2) * (k + 1));
        ekm2 = ekm1;
        ekm1 = ek;
        ek = ek1;
        ek1 = next;
        sum += next;
        dsum += next * T(k + 2);
        const T an = abs(next);
        abs_sum += an;
        abs_dsum += an * (k + 2);
        if (an <= tiny * abs_sum && abs(ek) <= tiny * abs_sum) {
            if (++quiet >= 3) break;
        } else {
            quiet = 0;
        }
    }
    Result r;
    const T as = abs(sum);
    const C deriv = (z.re == 0 && z.im == 0) ? dd0 : dsum / z;
    const T ad = abs(deriv * z);
    // normwise over (w, z w'), so a simple zero of w is not reported as cancellation
    const T kappa = as + ad > 0 ? (abs_sum + abs_dsum) / (as + ad) : T(1);
    using std::log10;
    r.log10_cancellation = static_cast<double>(log10(kappa));
    const double lost = r.log10_cancellation - digits + 3.0;
    r.err = lost < -300 ? 1e-30 : std::min(1.0, std::pow(10.0, lost));
    T scale = as;
    const T ader = abs(deriv);
    if (ader > scale) scale = ader;
    if (scale == 0) scale = T(1);
    r.w = to_scaled(sum, scale);
    r.dw = to_scaled(deriv, scale);
    r.log_scale = static_cast<long double>(log(scale));
    return r;
}

/// Tries increasing precision until the cancellation is absorbed with at
/// least 18 digits to spare. Returns nothing if the largest tier is not enough.
inline std::optional<Result> maclaurin(std::complex<double> nu, std::complex<double> z) {
    auto good = [](const Result& r) { return r.err <= 1e-18; };
    // Needed digits from a 50-digit probe: cancellation + margin.
    Result r = maclaurin_at<50>(nu, z);
    if (good(r)) return r;
    const double need = r.log10_cancellation + 25.0;
    if (need <= 100) {
        r = maclaurin_at<100>(nu, z);
        if (good(r)) return r;
    }
    if (need <= 200) {
        r = maclaurin_at<200>(nu, z);
        if (good(r)) return r;
    }
    if (need <= 400) {
        r = maclaurin_at<400>(nu, z);
        if (good(r)) return r;
    }
    r = maclaurin_at<800>(nu, z);
    if (good(r)) return r;
    return std::nullopt;
}

}  // namespace pulab::detail::mp
