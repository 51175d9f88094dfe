#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "etamu/errors.hpp"
#include "etamu/specfun.hpp"

namespace etamu {

/// Binary modulation described by the pair (p, q) of the conditional error
/// probability Gamma(p, q y) / (2 Gamma(p)).
struct ModulationScheme {
    std::string name;
    double p = 1.0;
    double q = 1.0;

    static ModulationScheme cbfsk() { return {"cbfsk", 0.5, 0.5}; }
    static ModulationScheme cbpsk() { return {"cbpsk", 0.5, 1.0}; }
    static ModulationScheme nbfsk() { return {"nbfsk", 1.0, 0.5}; }
    static ModulationScheme dbpsk() { return {"dbpsk", 1.0, 1.0}; }

    static ModulationScheme custom(double p, double q) {
        ModulationScheme m{"custom", p, q};
        m.validate();
        return m;
    }

    void validate() const {
        if (!(p > 0.0) || !std::isfinite(p)) throw ParameterOutOfRange("p", p, "(0, inf)");
        if (!(q > 0.0) || !std::isfinite(q)) throw ParameterOutOfRange("q", q, "(0, inf)");
    }
};

inline std::vector<ModulationScheme> preset_modulations() {
    return {ModulationScheme::cbfsk(), ModulationScheme::cbpsk(), ModulationScheme::nbfsk(),
            ModulationScheme::dbpsk()};
}

/// Accepts a preset name (case-insensitive) or a literal "p,q" pair.
inline ModulationScheme parse_modulation(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    for (const auto& m : preset_modulations()) {
        if (lower == m.name) return m;
    }
    const auto comma = lower.find(',');
    if (comma == std::string::npos) {
        throw ParameterOutOfRange("mod", std::numeric_limits<double>::quiet_NaN(),
                                  "cbfsk, cbpsk, nbfsk, dbpsk or p,q (got '" + std::string(text) + "')");
    }
    auto parse = [&](std::string_view part, const char* field) {
        double v = 0.0;
        const auto* first = part.data();
        const auto* last = part.data() + part.size();
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last) {
            throw ParameterOutOfRange(field, std::numeric_limits<double>::quiet_NaN(),
                                      "a number (got '" + std::string(part) + "')");
        }
        return v;
    };
    const std::string_view view(lower);
    return ModulationScheme::custom(parse(view.substr(0, comma), "p"), parse(view.substr(comma + 1), "q"));
}

/// Gamma(p, q y) / (2 Gamma(p)).
inline double conditional_ber(const ModulationScheme& mod, double y) {
    mod.validate();
    if (!(y >= 0.0) || std::isnan(y)) throw ParameterOutOfRange("y", y, "[0, inf)");
    return 0.5 * regularized_gamma_q(mod.p, mod.q * y);
}

}  // namespace etamu
