#include "pcw/dist.hpp"

namespace pcw {

Dist<std::int64_t> uniform(std::int64_t n) {
    if (n <= 0) {
        throw std::invalid_argument("uniform(n) requires n >= 1");
    }
    typename Dist<std::int64_t>::Weights w;
    const Rational p(1, static_cast<unsigned long>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        w.emplace_hint(w.end(), i, p);
    }
    return Dist<std::int64_t>::from_weights(std::move(w));
}

nlohmann::json rational_to_json(const Rational& r) {
    return {{"num", r.get_num().get_str()}, {"den", r.get_den().get_str()}};
}

Rational rational_from_json(const nlohmann::json& j) {
    auto as_string = [](const nlohmann::json& v) -> std::string {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_number_integer()) {
            return std::to_string(v.get<long long>());
        }
        throw std::invalid_argument("rational component must be an integer or decimal string");
    };
    if (j.is_string()) {
        return parse_rational(j.get<std::string>());
    }
    if (j.is_number_integer()) {
        return Rational(j.get<long>());
    }
    if (!j.is_object() || !j.contains("num") || !j.contains("den")) {
        throw std::invalid_argument("rational must be {num, den}");
    }
    return parse_rational(as_string(j.at("num")) + "/" + as_string(j.at("den")));
}

}  // namespace pcw
