#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

namespace morel {

// ---------------------------------------------------------------------------
// Error taxonomy. Every operation that can fail throws one of these.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};
struct PreconditionViolation : Error {
    using Error::Error;
};
struct OutOfWindow : Error {
    using Error::Error;
};
struct NotFound : Error {
    using Error::Error;
};
struct CorruptRecord : Error {
    using Error::Error;
};
struct LedgerViolation : Error {
    using Error::Error;
};
struct FrozenLeak : Error {
    using Error::Error;
};
struct NonFiniteGradient : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small fixed-size linear algebra. Double precision throughout: the gradient
// checks compare hand-derived backward passes against central differences at
// 1e-4 relative tolerance, which float cannot sustain.
// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    Vec2& operator-=(const Vec2& o) {
        x -= o.x;
        y -= o.y;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec3 {
    double r = 0.0, g = 0.0, b = 0.0;

    Vec3() = default;
    Vec3(double r_, double g_, double b_) : r(r_), g(g_), b(b_) {}

    Vec3 operator+(const Vec3& o) const { return {r + o.r, g + o.g, b + o.b}; }
    Vec3 operator-(const Vec3& o) const { return {r - o.r, g - o.g, b - o.b}; }
    Vec3 operator*(double s) const { return {r * s, g * s, b * s}; }
    Vec3& operator+=(const Vec3& o) {
        r += o.r;
        g += o.g;
        b += o.b;
        return *this;
    }
    double dot(const Vec3& o) const { return r * o.r + g * o.g + b * o.b; }
};

// Row-major 2x2 matrix.
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;  // [a b; c d]

    Mat2() = default;
    Mat2(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 rotation(double theta) {
        const double ct = std::cos(theta), st = std::sin(theta);
        return {ct, -st, st, ct};
    }

    double det() const { return a * d - b * c; }

    Mat2 inverse() const {
        const double dt = det();
        const double inv = 1.0 / dt;
        return {d * inv, -b * inv, -c * inv, a * inv};
    }

    Mat2 transpose() const { return {a, c, b, d}; }

    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 operator*(const Mat2& m) const {
        return {a * m.a + b * m.c, a * m.b + b * m.d, c * m.a + d * m.c, c * m.b + d * m.d};
    }
    Mat2 operator+(const Mat2& m) const { return {a + m.a, b + m.b, c + m.c, d + m.d}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s, d * s}; }
};

// Symmetric 2x2 matrix stored as (xx, xy, yy).
struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    Sym2() = default;
    Sym2(double xx_, double xy_, double yy_) : xx(xx_), xy(xy_), yy(yy_) {}

    double det() const { return xx * yy - xy * xy; }
    double trace() const { return xx + yy; }

    // Eigenvalues, ascending.
    void eigenvalues(double& lo, double& hi) const {
        const double mid = 0.5 * trace();
        const double disc = std::sqrt(std::max(0.0, mid * mid - det()));
        lo = mid - disc;
        hi = mid + disc;
    }

    Sym2 inverse() const {
        const double inv = 1.0 / det();
        return {yy * inv, -xy * inv, xx * inv};
    }
};

// ---------------------------------------------------------------------------
// Scalar helpers shared across modules.
// ---------------------------------------------------------------------------

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double sigmoid_grad(double y) { return y * (1.0 - y); }  // y = sigmoid(x)

inline double softplus(double x) {
    if (x > 30.0) return x;
    return std::log1p(std::exp(x));
}

inline double softplus_grad(double x) { return sigmoid(x); }

// Inverse of softplus, used to initialize raw decay parameters.
inline double softplus_inverse(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

// e^{-x} for x >= 0, ~5e-9 relative error. exp2-based range reduction with a
// degree-7 polynomial on the centered fraction; exact at x = 0. The
// rasterizer kernel spends most of its time here.
inline double exp_neg(double x) {
    if (x > 708.0) return 0.0;
    const double y = -x * 1.4426950408889634;  // log2(e)
    const double n = std::nearbyint(y);
    const double z = (y - n) * 0.6931471805599453;  // in [-0.347, 0.347]
    double p = 1.0 / 5040.0;
    p = p * z + 1.0 / 720.0;
    p = p * z + 1.0 / 120.0;
    p = p * z + 1.0 / 24.0;
    p = p * z + 1.0 / 6.0;
    p = p * z + 0.5;
    p = p * z + 1.0;
    p = p * z + 1.0;
    const int64_t bits = (static_cast<int64_t>(n) + 1023) << 52;
    double scale;
    static_assert(sizeof(scale) == sizeof(bits));
    std::memcpy(&scale, &bits, sizeof(scale));
    return p * scale;
}

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 seeds a pcg32 stream; all randomness in the
// project flows through this so runs are bit-reproducible across platforms.
// ---------------------------------------------------------------------------

inline uint64_t splitmix64(uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(uint64_t seed, uint64_t stream = 0) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        uint64_t s = seed;
        state_ += splitmix64(s);
        next_u32();
    }

    uint32_t next_u32() {
        const uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        const uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
        const uint32_t rot = static_cast<uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Uniform in [0, 1).
    double uniform() {
        const uint64_t hi = next_u32();
        const uint64_t lo = next_u32();
        return static_cast<double>((hi << 21) ^ lo) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    uint32_t uniform_index(uint32_t n) {
        return static_cast<uint32_t>(uniform() * n) % n;
    }

    // Standard normal via Box-Muller; the spare is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derives an independent substream, e.g. one per pipeline stage.
    Rng fork(uint64_t stream_tag) const {
        uint64_t s = state_ ^ (0x51024ull * (stream_tag + 1));
        return Rng(splitmix64(s), stream_tag);
    }

private:
    uint64_t state_ = 0;
    uint64_t inc_ = 1;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace morel
