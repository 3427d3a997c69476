#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <system_error>

#include "thermoscope/error.hpp"

namespace thermoscope {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Shortest decimal text that round-trips to `x`.
inline std::string shortest_decimal(double x)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// Parses "p/q", an integer, or a decimal literal with optional exponent
/// ("-0.7", "1.5e-3") into an exact rational.
inline Rational parse_rational(std::string_view text)
{
    auto fail = [&] { return ValidationError("not a rational literal: '" + std::string(text) + "'"); };
    if (text.empty())
        throw fail();

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(text.substr(0, slash));
        Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0)
            throw ValidationError("zero denominator in '" + std::string(text) + "'");
        return num / den;
    }

    std::size_t pos = 0;
    bool negative = false;
    if (text[pos] == '+' || text[pos] == '-') {
        negative = text[pos] == '-';
        ++pos;
    }
    BigInt mantissa = 0;
    long exponent = 0;
    bool any_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (c >= '0' && c <= '9') {
            mantissa = mantissa * 10 + (c - '0');
            any_digit = true;
            if (seen_point)
                --exponent;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit)
        throw fail();
    if (pos < text.size()) {
        if (text[pos] != 'e' && text[pos] != 'E')
            throw fail();
        long e = 0;
        auto tail = text.substr(pos + 1);
        if (!tail.empty() && tail.front() == '+')
            tail.remove_prefix(1);
        auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), e);
        if (ec != std::errc() || ptr != tail.data() + tail.size())
            throw fail();
        exponent += e;
    }
    if (exponent > 4000 || exponent < -4000)
        throw ValidationError("exponent out of range in '" + std::string(text) + "'");

    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::labs(exponent)));
    Rational r = exponent >= 0 ? Rational(mantissa * scale) : Rational(mantissa, scale);
    return negative ? Rational(-r) : r;
}

/// The decimal rational a user most plausibly meant by `x`: 0.7 -> 7/10.
inline Rational decimal_rational(double x)
{
    if (!std::isfinite(x))
        throw ValidationError("non-finite value has no rational form");
    return parse_rational(shortest_decimal(x));
}

/// Correctly rounded (half-even) conversion, so shortest decimals round-trip.
inline double to_double(const Rational& r)
{
    using boost::multiprecision::msb;
    BigInt n = boost::multiprecision::numerator(r);
    const BigInt d = boost::multiprecision::denominator(r);
    if (n == 0)
        return 0.0;
    const bool negative = n < 0;
    if (negative)
        n = -n;
    const long e = static_cast<long>(msb(n)) - static_cast<long>(msb(d));
    const long s = 54 - e;
    BigInt q, rem;
    if (s >= 0)
        boost::multiprecision::divide_qr(BigInt(n << static_cast<unsigned>(s)), d, q, rem);
    else
        boost::multiprecision::divide_qr(n, BigInt(d << static_cast<unsigned>(-s)), q, rem);
    const long extra = static_cast<long>(msb(q)) + 1 - 53;
    BigInt kept = q >> static_cast<unsigned>(extra);
    const BigInt dropped = q - (kept << static_cast<unsigned>(extra));
    const BigInt half = BigInt(1) << static_cast<unsigned>(extra - 1);
    if (dropped > half || (dropped == half && (rem != 0 || (kept & 1) != 0)))
        ++kept;
    const double out = std::ldexp(kept.convert_to<double>(), static_cast<int>(extra - s));
    return negative ? -out : out;
}

/// Natural log of a positive big integer, accurate to double precision for
/// arbitrarily many bits.
inline double log_big(const BigInt& x)
{
    if (x <= 0)
        return -std::numeric_limits<double>::infinity();
    const unsigned bits = static_cast<unsigned>(boost::multiprecision::msb(x)) + 1;
    if (bits <= 60)
        return std::log(x.convert_to<double>());
    const unsigned shift = bits - 60;
    BigInt top = x >> shift;
    return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

inline double log_rational(const Rational& r)
{
    if (r <= 0)
        return -std::numeric_limits<double>::infinity();
    return log_big(boost::multiprecision::numerator(r)) - log_big(boost::multiprecision::denominator(r));
}

inline BigInt lcm_big(const BigInt& a, const BigInt& b)
{
    return boost::multiprecision::lcm(a, b);
}

inline BigInt floor_rational(const Rational& r)
{
    BigInt n = boost::multiprecision::numerator(r);
    BigInt d = boost::multiprecision::denominator(r);
    BigInt q = n / d;
    if (q * d != n && n < 0)
        --q;
    return q;
}

inline BigInt ceil_rational(const Rational& r)
{
    return -floor_rational(-r);
}

} // namespace thermoscope
