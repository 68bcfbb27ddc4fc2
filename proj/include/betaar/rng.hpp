#pragma once

#include <cstdint>
#include <random>

namespace betaar {

/// Explicit random-number state passed to every sampler.  Independent
/// streams for replicated chains are derived from a master seed with
/// Rng::stream(); nothing is global.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1);

    /// Stream `index` of master seed `seed`.  Streams with different
    /// indices are statistically independent.
    static Rng stream(std::uint64_t seed, std::uint64_t index);

    double uniform();   ///< U(0,1), never exactly 0
    double normal();    ///< N(0,1)
    /// Gamma with the given shape and *rate*.
    double gamma(double shape, double rate);
    /// log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
    double log_gamma_variate(double shape);
    /// Be(a, b) via two gamma variates, strictly inside (0,1).
    double beta(double a, double b);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace betaar
