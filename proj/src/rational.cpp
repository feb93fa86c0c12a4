#include "pcw/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace pcw {

std::string to_exact_string(const Rational& r) {
    if (r.get_den() == 1) {
        return r.get_num().get_str();
    }
    return r.get_num().get_str() + "/" + r.get_den().get_str();
}

std::string to_decimal_string(const Rational& r, int digits) {
    // Scale to a fixed number of fractional digits and round half away from zero.
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    mpz_class num = r.get_num() * scale;
    const mpz_class& den = r.get_den();
    const bool negative = num < 0;
    if (negative) {
        num = -num;
    }
    mpz_class q = num / den;
    mpz_class rem = num % den;
    if (2 * rem >= den) {
        q += 1;
    }
    std::string s = q.get_str();
    if (s.size() <= static_cast<std::size_t>(digits)) {
        s.insert(0, static_cast<std::size_t>(digits) + 1 - s.size(), '0');
    }
    s.insert(s.size() - static_cast<std::size_t>(digits), ".");
    if (negative && q != 0) {
        s.insert(0, "-");
    }
    return s;
}

Rational parse_rational(std::string_view text) {
    auto valid_int = [](std::string_view t) {
        if (!t.empty() && t.front() == '-') {
            t.remove_prefix(1);
        }
        if (t.empty()) {
            return false;
        }
        for (char c : t) {
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                return false;
            }
        }
        return true;
    };
    const auto slash = text.find('/');
    const std::string_view num = text.substr(0, slash);
    const std::string_view den = slash == std::string_view::npos ? std::string_view{"1"} : text.substr(slash + 1);
    if (!valid_int(num) || !valid_int(den) || den.front() == '-') {
        throw std::invalid_argument("malformed rational: '" + std::string(text) + "'");
    }
    mpz_class n(std::string(num), 10);
    mpz_class d(std::string(den), 10);
    if (d == 0) {
        throw std::invalid_argument("zero denominator in rational: '" + std::string(text) + "'");
    }
    Rational r(n, d);
    r.canonicalize();
    return r;
}

Rational pow(const Rational& base, std::uint64_t exp) {
    Rational result = 1;
    Rational b = base;
    while (exp > 0) {
        if (exp & 1U) {
            result *= b;
        }
        b *= b;
        exp >>= 1U;
    }
    return result;
}

}  // namespace pcw
