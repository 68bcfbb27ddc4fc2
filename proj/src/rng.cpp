#include "betaar/rng.hpp"

#include "betaar/errors.hpp"

#include <cmath>
#include <limits>

namespace betaar {

Rng::Rng(std::uint64_t seed)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32)};
    engine_.seed(seq);
}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index)
{
    Rng rng;
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index & 0xffffffffu),
                      static_cast<std::uint32_t>(index >> 32), 0x5eedu};
    rng.engine_.seed(seq);
    return rng;
}

double Rng::uniform()
{
    double u;
    do {
        u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
}

double Rng::normal() { return normal_(engine_); }

double Rng::gamma(double shape, double rate)
{
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw DomainError("Rng::gamma: shape and rate must be positive");
    }
    std::gamma_distribution<double> dist(shape, 1.0 / rate);
    return dist(engine_);
}

double Rng::log_gamma_variate(double shape)
{
    if (!(shape > 0.0)) {
        throw DomainError("Rng::log_gamma_variate: shape must be positive");
    }
    if (shape >= 1.0) {
        std::gamma_distribution<double> dist(shape, 1.0);
        return std::log(dist(engine_));
    }
    // G(a) = G(a + 1) * U^{1/a}
    std::gamma_distribution<double> dist(shape + 1.0, 1.0);
    return std::log(dist(engine_)) + std::log(uniform()) / shape;
}

double Rng::beta(double a, double b)
{
    const double la = log_gamma_variate(a);
    const double lb = log_gamma_variate(b);
    // a / (a + b) computed as a logistic of the log ratio
    const double d = lb - la;
    double x = d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    if (x < lo) x = lo;
    if (x > hi) x = hi;
    return x;
}

} // namespace betaar
