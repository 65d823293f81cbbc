#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "orlomo/errors.hpp"
#include "orlomo/rng.hpp"
#include "orlomo/vec.hpp"

namespace orlomo {

enum class ProblemKind {
    noisy_quadratic,
    logistic_regression,
    rank1_matrix_factorization,
};

inline std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::noisy_quadratic: return "noisy-quadratic";
        case ProblemKind::logistic_regression: return "logistic-regression";
        case ProblemKind::rank1_matrix_factorization: return "rank1-matrix-factorization";
    }
    return "?";
}

inline ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "noisy-quadratic") return ProblemKind::noisy_quadratic;
    if (s == "logistic-regression") return ProblemKind::logistic_regression;
    if (s == "rank1-matrix-factorization") return ProblemKind::rank1_matrix_factorization;
    throw ConfigError("unknown problem kind: " + s);
}

// Configuration knobs for a problem instance. The instance itself
// (spectrum, dataset, target matrix) is generated deterministically from
// the run seed.
struct ProblemSpec {
    ProblemKind kind = ProblemKind::noisy_quadratic;
    std::size_t dimension = 2;
    double sigma = 0.0;  // std-dev of the gradient perturbation

    // noisy-quadratic: diagonal spectrum log-spaced in [lambda_min, lambda_max]
    double lambda_min = 1.0;
    double lambda_max = 1.0;

    // logistic-regression
    std::size_t n_points = 512;
    double l2_reg = 0.01;

    void validate() const {
        if (dimension == 0) throw ConfigError("problem.dimension must be >= 1");
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw ConfigError("problem.sigma must be finite and >= 0");
        if (kind == ProblemKind::noisy_quadratic) {
            if (!(lambda_min > 0.0) || !(lambda_max >= lambda_min))
                throw ConfigError("problem spectrum requires 0 < lambda_min <= lambda_max");
        }
        if (kind == ProblemKind::logistic_regression && n_points == 0)
            throw ConfigError("problem.n_points must be >= 1");
        if (kind == ProblemKind::rank1_matrix_factorization && dimension % 2 != 0)
            throw ConfigError("rank1 factorization requires even dimension");
    }
};

// A concrete stochastic objective: exact F(w) and grad F(w), plus a noisy
// gradient oracle with zero-mean perturbation of total variance sigma^2.
// Immutable after construction; all randomness in construction comes from
// the given seed.
class Problem {
public:
    Problem(const ProblemSpec& spec, std::uint64_t seed) : spec_(spec) {
        spec_.validate();
        RngStream inst(seed, 0, StreamPurpose::instance);
        switch (spec_.kind) {
            case ProblemKind::noisy_quadratic: build_quadratic(inst); break;
            case ProblemKind::logistic_regression: build_logistic(inst); break;
            case ProblemKind::rank1_matrix_factorization: build_rank1(inst); break;
        }
    }

    const ProblemSpec& spec() const { return spec_; }
    std::size_t dimension() const { return spec_.dimension; }
    double smoothness() const { return smoothness_; }
    double optimum_value() const { return f_star_; }
    const ParamVector& known_optimum() const { return w_star_; }

    double full_objective(const ParamVector& w) const {
        check_dim(w);
        switch (spec_.kind) {
            case ProblemKind::noisy_quadratic: {
                double acc = 0.0;
                for (std::size_t i = 0; i < w.dim(); ++i) {
                    double e = w[i] - w_star_[i];
                    acc += 0.5 * spectrum_[i] * e * e;
                }
                return acc;
            }
            case ProblemKind::logistic_regression: {
                double acc = 0.0;
                for (std::size_t i = 0; i < spec_.n_points; ++i)
                    acc += log1p_exp(-labels_[i] * row_dot(i, w));
                acc /= static_cast<double>(spec_.n_points);
                acc += 0.5 * spec_.l2_reg * norm_sq(w);
                return acc;
            }
            case ProblemKind::rank1_matrix_factorization: {
                std::size_t du = w.dim() / 2;
                double acc = 0.0;
                for (std::size_t i = 0; i < du; ++i)
                    for (std::size_t j = 0; j < du; ++j) {
                        double r = w[i] * w[du + j] - target_a_[i] * target_b_[j];
                        acc += 0.5 * r * r;
                    }
                return acc;
            }
        }
        return 0.0;
    }

    ParamVector full_gradient(const ParamVector& w) const {
        check_dim(w);
        ParamVector g(w.dim());
        switch (spec_.kind) {
            case ProblemKind::noisy_quadratic:
                for (std::size_t i = 0; i < w.dim(); ++i)
                    g[i] = spectrum_[i] * (w[i] - w_star_[i]);
                break;
            case ProblemKind::logistic_regression: {
                double inv_n = 1.0 / static_cast<double>(spec_.n_points);
                for (std::size_t i = 0; i < spec_.n_points; ++i) {
                    double m = -labels_[i] * row_dot(i, w);
                    double c = -labels_[i] * sigmoid(m) * inv_n;
                    for (std::size_t j = 0; j < w.dim(); ++j)
                        g[j] += c * features_[i * w.dim() + j];
                }
                g.axpy(spec_.l2_reg, w);
                break;
            }
            case ProblemKind::rank1_matrix_factorization: {
                std::size_t du = w.dim() / 2;
                for (std::size_t i = 0; i < du; ++i)
                    for (std::size_t j = 0; j < du; ++j) {
                        double r = w[i] * w[du + j] - target_a_[i] * target_b_[j];
                        g[i] += r * w[du + j];
                        g[du + j] += r * w[i];
                    }
                break;
            }
        }
        return g;
    }

    // grad F(w) plus isotropic Gaussian noise with per-coordinate std
    // sigma/sqrt(d), so the total perturbation variance is sigma^2.
    // Always consumes d normal draws, also when sigma == 0.
    ParamVector sample_gradient(const ParamVector& w, RngStream& rng) const {
        ParamVector g = full_gradient(w);
        double scale = spec_.sigma / std::sqrt(static_cast<double>(w.dim()));
        for (std::size_t i = 0; i < w.dim(); ++i) g[i] += scale * rng.normal();
        return g;
    }

    nlohmann::json dump() const {
        nlohmann::json j;
        j["kind"] = to_string(spec_.kind);
        j["dimension"] = spec_.dimension;
        j["sigma"] = spec_.sigma;
        j["smoothness"] = smoothness_;
        j["f_star"] = f_star_;
        switch (spec_.kind) {
            case ProblemKind::noisy_quadratic:
                j["spectrum"] = spectrum_;
                j["w_star"] = w_star_.data();
                break;
            case ProblemKind::logistic_regression:
                j["n_points"] = spec_.n_points;
                j["l2_reg"] = spec_.l2_reg;
                j["features"] = features_;
                j["labels"] = labels_;
                j["w_star"] = w_star_.data();
                break;
            case ProblemKind::rank1_matrix_factorization:
                j["target_a"] = target_a_;
                j["target_b"] = target_b_;
                j["w_star"] = w_star_.data();
                break;
        }
        return j;
    }

private:
    void check_dim(const ParamVector& w) const {
        if (w.dim() != spec_.dimension)
            throw ConfigError("parameter dimension does not match problem");
    }

    static double sigmoid(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
    }

    static double log1p_exp(double x) {
        // log(1 + e^x) without overflow
        if (x > 0.0) return x + std::log1p(std::exp(-x));
        return std::log1p(std::exp(x));
    }

    double row_dot(std::size_t i, const ParamVector& w) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < w.dim(); ++j)
            acc += features_[i * w.dim() + j] * w[j];
        return acc;
    }

    void build_quadratic(RngStream& inst) {
        std::size_t d = spec_.dimension;
        spectrum_.resize(d);
        if (d == 1) {
            spectrum_[0] = spec_.lambda_max;
        } else {
            double lmin = std::log(spec_.lambda_min);
            double lmax = std::log(spec_.lambda_max);
            for (std::size_t i = 0; i < d; ++i)
                spectrum_[i] = std::exp(lmin + (lmax - lmin) * static_cast<double>(i) /
                                                   static_cast<double>(d - 1));
            spectrum_[d - 1] = spec_.lambda_max;  // pin the top eigenvalue exactly
        }
        w_star_ = inst.normal_vector(d);
        w_star_ *= 1.0 / std::sqrt(static_cast<double>(d));
        smoothness_ = spec_.lambda_max;
        f_star_ = 0.0;
    }

    void build_logistic(RngStream& inst) {
        std::size_t d = spec_.dimension;
        std::size_t n = spec_.n_points;
        features_.resize(n * d);
        labels_.resize(n);
        ParamVector theta = inst.normal_vector(d);
        theta *= 2.0 / std::sqrt(static_cast<double>(d));
        for (std::size_t i = 0; i < n; ++i) {
            double m = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                features_[i * d + j] = inst.normal();
                m += features_[i * d + j] * theta[j];
            }
            labels_[i] = (inst.uniform() < sigmoid(m)) ? 1.0 : -1.0;
        }
        // L = l2_reg + lambda_max(X^T X / (4n)), top eigenvalue by power iteration
        smoothness_ = spec_.l2_reg + gram_top_eigenvalue() / 4.0;
        // F* from a deterministic full-gradient descent run on the instance
        ParamVector w(d);
        double step = 1.0 / smoothness_;
        for (int it = 0; it < 500000; ++it) {
            ParamVector g = full_gradient(w);
            if (norm(g) <= 1e-13) break;
            w.axpy(-step, g);
        }
        w_star_ = w;
        f_star_ = full_objective(w);
    }

    double gram_top_eigenvalue() const {
        std::size_t d = spec_.dimension;
        std::size_t n = spec_.n_points;
        std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d)));
        double lambda = 0.0;
        for (int it = 0; it < 2000; ++it) {
            std::vector<double> xv(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) xv[i] += features_[i * d + j] * v[j];
            std::vector<double> u(d, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) u[j] += features_[i * d + j] * xv[i];
            double nn = 0.0;
            for (double x : u) nn += x * x;
            nn = std::sqrt(nn);
            double next = nn / static_cast<double>(n);
            for (std::size_t j = 0; j < d; ++j) v[j] = u[j] / nn;
            if (it > 10 && std::abs(next - lambda) <= 1e-14 * next) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        return lambda;
    }

    void build_rank1(RngStream& inst) {
        std::size_t du = spec_.dimension / 2;
        target_a_.resize(du);
        target_b_.resize(du);
        double na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < du; ++i) {
            target_a_[i] = inst.normal();
            na += target_a_[i] * target_a_[i];
        }
        for (std::size_t i = 0; i < du; ++i) {
            target_b_[i] = inst.normal();
            nb += target_b_[i] * target_b_[i];
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        for (std::size_t i = 0; i < du; ++i) target_a_[i] /= na;
        for (std::size_t i = 0; i < du; ++i) target_b_[i] /= nb;
        // (u, v) = (a, b) is a global optimum with F* = 0
        w_star_ = ParamVector(spec_.dimension);
        for (std::size_t i = 0; i < du; ++i) w_star_[i] = target_a_[i];
        for (std::size_t i = 0; i < du; ++i) w_star_[du + i] = target_b_[i];
        // Hessian operator-norm bound at the optimum (||a|| = ||b|| = 1);
        // the gradient is not globally Lipschitz for this objective.
        smoothness_ = 4.0;
        f_star_ = 0.0;
    }

    ProblemSpec spec_;
    double smoothness_ = 0.0;
    double f_star_ = 0.0;
    ParamVector w_star_;

    std::vector<double> spectrum_;          // quadratic
    std::vector<double> features_, labels_; // logistic (row-major n x d)
    std::vector<double> target_a_, target_b_;  // rank1
};

}  // namespace orlomo
