#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace orlomo {

// Dense real vector of fixed dimension d. Carrier for model parameters,
// gradients, momentums and their deltas. All reductions run in ascending
// index order so results are bit-reproducible.
class ParamVector {
public:
    ParamVector() = default;
    explicit ParamVector(std::size_t d, double fill = 0.0) : v_(d, fill) {}
    explicit ParamVector(std::vector<double> values) : v_(std::move(values)) {}

    std::size_t dim() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    const std::vector<double>& data() const { return v_; }
    std::vector<double>& data() { return v_; }

    bool operator==(const ParamVector& o) const { return v_ == o.v_; }

    ParamVector& operator+=(const ParamVector& o) {
        check_dim(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
        return *this;
    }
    ParamVector& operator-=(const ParamVector& o) {
        check_dim(o);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
        return *this;
    }
    ParamVector& operator*=(double a) {
        for (double& x : v_) x *= a;
        return *this;
    }

    // this += a * x
    ParamVector& axpy(double a, const ParamVector& x) {
        check_dim(x);
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
        return *this;
    }

    bool all_finite() const {
        for (double x : v_)
            if (!std::isfinite(x)) return false;
        return true;
    }

private:
    void check_dim(const ParamVector& o) const {
        if (v_.size() != o.v_.size())
            throw std::invalid_argument("ParamVector dimension mismatch");
    }

    std::vector<double> v_;
};

inline ParamVector operator+(ParamVector a, const ParamVector& b) { return a += b; }
inline ParamVector operator-(ParamVector a, const ParamVector& b) { return a -= b; }
inline ParamVector operator*(double s, ParamVector a) { return a *= s; }

inline double dot(const ParamVector& a, const ParamVector& b) {
    if (a.dim() != b.dim())
        throw std::invalid_argument("ParamVector dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm_sq(const ParamVector& a) { return dot(a, a); }
inline double norm(const ParamVector& a) { return std::sqrt(norm_sq(a)); }

}  // namespace orlomo
