#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mcwb {

// Non-negative integer weight with a symbolic infinity. Addition saturates at INF.
class Weight {
public:
    using value_type = std::uint64_t;

    constexpr Weight() = default;
    constexpr Weight(value_type v) : v_(v) {
        if (v == kInfRaw) throw std::overflow_error("weight value collides with INF sentinel");
    }

    static constexpr Weight inf() { Weight w; w.v_ = kInfRaw; return w; }
    static constexpr Weight zero() { return Weight{}; }

    constexpr bool isInf() const { return v_ == kInfRaw; }
    constexpr value_type value() const {
        if (isInf()) throw std::domain_error("INF has no finite value");
        return v_;
    }
    constexpr value_type raw() const { return v_; }

    constexpr Weight operator+(Weight o) const {
        if (isInf() || o.isInf()) return inf();
        if (v_ > kInfRaw - 1 - o.v_) throw std::overflow_error("finite weight overflow");
        Weight r; r.v_ = v_ + o.v_; return r;
    }
    constexpr Weight& operator+=(Weight o) { return *this = *this + o; }

    // Finite scaling; INF stays INF, 0 * INF is 0.
    constexpr Weight operator*(value_type k) const {
        if (k == 0) return zero();
        if (isInf()) return inf();
        if (v_ > (kInfRaw - 1) / k) throw std::overflow_error("finite weight overflow");
        Weight r; r.v_ = v_ * k; return r;
    }

    constexpr auto operator<=>(const Weight&) const = default;
    constexpr bool operator==(const Weight&) const = default;

    std::string str() const { return isInf() ? std::string("inf") : std::to_string(v_); }

private:
    static constexpr value_type kInfRaw = std::numeric_limits<value_type>::max();
    value_type v_ = 0;
};

inline constexpr Weight INF = Weight::inf();

inline std::ostream& operator<<(std::ostream& os, Weight w) { return os << w.str(); }

}  // namespace mcwb
