#include "perfopt/core.hpp"

#include <charconv>
#include <cmath>

namespace perfopt {

void require_finite(const Vector& v, std::string_view what) {
    if (!v.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

void require_dim(const Vector& v, std::size_t dim, std::string_view what) {
    if (static_cast<std::size_t>(v.size()) != dim) {
        throw ConfigError(std::string(what) + ": expected dimension " + std::to_string(dim) + ", got " +
                          std::to_string(v.size()));
    }
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

Domain::Domain(double radius, bool nonnegative) : radius_(radius), nonnegative_(nonnegative) {
    if (!(radius > 0.0)) {
        throw ConfigError("domain radius must be positive");
    }
}

bool Domain::contains(const Vector& theta) const {
    if (nonnegative_ && (theta.array() < -kSlack).any()) return false;
    return theta.norm() <= radius_ + kSlack;
}

Vector Domain::project(const Vector& theta) const {
    Vector out = theta;
    // Ball centred at the origin and the orthant (a cone): clamping first and
    // then scaling is the exact projection onto the intersection.
    if (nonnegative_) out = out.cwiseMax(0.0);
    if (bounded()) {
        const double n = out.norm();
        if (n > radius_) out *= radius_ / n;
    }
    return out;
}

Domain Domain::shrunk(double margin) const {
    if (!(margin < radius_)) {
        throw ConfigError("cannot shrink domain of radius " + std::to_string(radius_) + " by " +
                          std::to_string(margin));
    }
    return Domain(radius_ - margin, nonnegative_);
}

// ---------------------------------------------------------------------------

Instance::Instance(Vector v, std::optional<std::size_t> s) : values(std::move(v)), split(s) {
    require_finite(values, "instance");
    if (split && *split > dim()) {
        throw ConfigError("instance split index exceeds dimension");
    }
}

Eigen::VectorBlock<const Vector> Instance::features() const {
    if (!split) throw ConfigError("instance has no feature/label split");
    return values.head(static_cast<Eigen::Index>(*split));
}

Eigen::VectorBlock<const Vector> Instance::labels() const {
    if (!split) throw ConfigError("instance has no feature/label split");
    return values.tail(static_cast<Eigen::Index>(dim() - *split));
}

Instance SampleSet::instance(std::size_t i) const {
    return Instance(values.col(static_cast<Eigen::Index>(i)), split);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t state = seed ^ rotl(h, 17);
    std::uint64_t a = splitmix64(state);
    state ^= index * 0xd1342543de82ef95ULL;
    return a ^ splitmix64(state);
}

Rng::Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

Rng::result_type Rng::operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * f;
    has_spare_ = true;
    return u * f;
}

std::size_t Rng::below(std::size_t n) noexcept {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

Vector standard_normal(Rng& rng, std::size_t dim) {
    Vector v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
    return v;
}

Vector unit_sphere(Rng& rng, std::size_t dim) {
    for (;;) {
        Vector v = standard_normal(rng, dim);
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

Vector uniform_in(const Domain& domain, std::size_t dim, Rng& rng) {
    if (!domain.bounded()) throw ConfigError("cannot sample uniformly from an unbounded domain");
    Vector dir = unit_sphere(rng, dim);
    if (domain.nonnegative()) dir = dir.cwiseAbs();
    const double r = domain.radius() * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    return r * dir;
}

}  // namespace perfopt
