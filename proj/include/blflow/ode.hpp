#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>

#include "blflow/errors.hpp"

namespace blflow {

// Adaptive Dormand-Prince 5(4) with the classic quartic dense-output
// interpolant.  Small fixed state dimension, no allocation in the loop.
template <std::size_t N>
class Dopri5 {
  public:
    using Vec = std::array<double, N>;
    using Rhs = std::function<void(double, const Vec&, Vec&)>;

    Dopri5(Rhs rhs, double rtol, double atol)
        : f_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

    // State accessors.
    double time() const { return t_; }
    const Vec& state() const { return y_; }

    void reset(double t0, const Vec& y0) {
        t_ = t0;
        y_ = y0;
        f_(t_, y_, k_[0]);
        h_ = 0.0;
        have_step_ = false;
    }

    // Advance by one accepted step (step size chosen adaptively, capped so
    // that t never exceeds t_limit).  Returns false when t_limit is reached
    // exactly.  After the call, the dense interpolant covers
    // [prev_time(), time()].
    bool step(double t_limit) {
        if (t_ >= t_limit) return false;
        if (h_ <= 0.0) h_ = initial_step(t_limit);
        for (int attempt = 0; attempt < 200; ++attempt) {
            double h = std::min(h_, t_limit - t_);
            bool clipped = h < h_;
            double err = try_step(h);
            if (err <= 1.0) {
                finish_step(h);
                double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
                if (!clipped) h_ = h * std::clamp(grow, 0.2, 5.0);
                return true;
            }
            h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
            if (h_ < 1e-14 * std::max(1.0, std::abs(t_)))
                throw IllConditioned("ODE step size underflow");
        }
        throw IllConditioned("ODE step repeatedly rejected");
    }

    double prev_time() const { return tprev_; }
    const Vec& prev_state() const { return yprev_; }

    // Dense output on the last accepted step; u in [0,1].
    Vec interpolate(double u) const {
        Vec out;
        double u1 = 1.0 - u;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = r1_[i] + u * (r2_[i] + u1 * (r3_[i] + u * (r4_[i] + u1 * r5_[i])));
        return out;
    }

  private:
    double initial_step(double t_limit) const {
        // timescale estimate 0.01*|y|/|y'| in tolerance-scaled norms, so the
        // result is independent of how tight the tolerances are
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double s = atol_ + rtol_ * std::abs(y_[i]);
            d0 += (y_[i] / s) * (y_[i] / s);
            d1 += (k_[0][i] / s) * (k_[0][i] / s);
        }
        d0 = std::sqrt(d0 / N);
        d1 = std::sqrt(d1 / N);
        double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        return std::min(h, t_limit - t_);
    }

    // Computes stages for step size h; returns the scaled error norm.
    double try_step(double h) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

        Vec w;
        for (std::size_t i = 0; i < N; ++i) w[i] = y_[i] + h * a21 * k_[0][i];
        f_(t_ + h / 5, w, k_[1]);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a31 * k_[0][i] + a32 * k_[1][i]);
        f_(t_ + 3 * h / 10, w, k_[2]);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a41 * k_[0][i] + a42 * k_[1][i] + a43 * k_[2][i]);
        f_(t_ + 4 * h / 5, w, k_[3]);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a51 * k_[0][i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
        f_(t_ + 8 * h / 9, w, k_[4]);
        for (std::size_t i = 0; i < N; ++i)
            w[i] = y_[i] + h * (a61 * k_[0][i] + a62 * k_[1][i] + a63 * k_[2][i] +
                                a64 * k_[3][i] + a65 * k_[4][i]);
        f_(t_ + h, w, k_[5]);
        for (std::size_t i = 0; i < N; ++i)
            ynew_[i] = y_[i] + h * (b1 * k_[0][i] + b3 * k_[2][i] + b4 * k_[3][i] +
                                    b5 * k_[4][i] + b6 * k_[5][i]);
        f_(t_ + h, ynew_, k_[6]);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            double e = h * (e1 * k_[0][i] + e3 * k_[2][i] + e4 * k_[3][i] +
                            e5 * k_[4][i] + e6 * k_[5][i] + e7 * k_[6][i]);
            double sc = atol_ + rtol_ * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
            err += (e / sc) * (e / sc);
        }
        return std::sqrt(err / N);
    }

    void finish_step(double h) {
        static constexpr double d1 = -12715105075.0 / 11282082432.0,
                                d3 = 87487479700.0 / 32700410799.0,
                                d4 = -10690763975.0 / 1880347072.0,
                                d5 = 701980252875.0 / 199316789632.0,
                                d6 = -1453857185.0 / 822651844.0,
                                d7 = 69997945.0 / 29380423.0;
        for (std::size_t i = 0; i < N; ++i) {
            double dy = ynew_[i] - y_[i];
            double bspl = h * k_[0][i] - dy;
            r1_[i] = y_[i];
            r2_[i] = dy;
            r3_[i] = bspl;
            r4_[i] = dy - h * k_[6][i] - bspl;
            r5_[i] = h * (d1 * k_[0][i] + d3 * k_[2][i] + d4 * k_[3][i] + d5 * k_[4][i] +
                          d6 * k_[5][i] + d7 * k_[6][i]);
        }
        tprev_ = t_;
        yprev_ = y_;
        t_ += h;
        y_ = ynew_;
        k_[0] = k_[6]; // FSAL
        have_step_ = true;
    }

    Rhs f_;
    double rtol_, atol_;
    double t_ = 0.0, tprev_ = 0.0, h_ = 0.0;
    Vec y_{}, yprev_{}, ynew_{};
    std::array<Vec, 7> k_{};
    Vec r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
    bool have_step_ = false;
};

// Locates a zero of g(dense(u)) inside the last accepted step of the solver,
// assuming g changes sign across it.  Returns the interpolation parameter.
template <std::size_t N, class G>
double locate_event(const Dopri5<N>& ode, G&& g, double g0, double g1) {
    double lo = 0.0, hi = 1.0, glo = g0;
    (void)g1;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        double gm = g(ode.interpolate(mid));
        if ((glo <= 0.0) == (gm <= 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace blflow
