#pragma once
// Real powers of the block matrix C and the chart-wise fiber norms used by
// the contraction certificates: the norm at a point scales v by C^{-w(x,y)}
// where w is an affine exponent depending on the covering chart.

#include <string>

#include <Eigen/Dense>

#include "blflow/errors.hpp"
#include "blflow/group_rep.hpp"

namespace blflow {

// One-shot real matrix power by spectral calculus; requires a symmetric
// positive definite input (throws NotSPD otherwise).
Eigen::MatrixXd mat_power_real(const IntMatrix& C, double t);

// Cached spectral decomposition of a symmetric positive definite integer
// matrix, for repeated real powers and power-weighted norms.
class SpdPower {
public:
    explicit SpdPower(const IntMatrix& C); // NotSPD

    int dim() const { return int(evals_.size()); }
    Eigen::MatrixXd power(double t) const;
    // || C^t v ||_2 without forming the matrix power
    double power_norm(double t, const Eigen::VectorXd& v) const; // DimensionMismatch

private:
    Eigen::VectorXd evals_;
    Eigen::MatrixXd evecs_;
};

// Affine exponent form w(x, y) = ax*x + ay*y + c0 of one covering chart.
struct MetricChart {
    int index = 1; // 1..5
    double ax = 0.0, ay = 0.0, c0 = 0.0;
    double exponent(double x, double y) const { return ax * x + ay * y + c0; }
};

// The five chart forms, parameterized by the exponent tuple (t1, t2, t0):
//   w1 = t2 x + t1 y            (basepoint exponent 0)
//   w2 = -t1 x + t2 y + t0      (basepoint exponent t0)
//   w3 = -t2 x - t1 y + 2 t0
//   w4 =  t1 x - t2 y + 3 t0
//   w5 =  t2 x + t1 y + 4 t0
MetricChart make_chart(int k, const ExponentTuple& e);

class FiberMetric {
public:
    explicit FiberMetric(const ExponentTuple& e, int d = 4);

    int dim() const { return d_; }
    const ExponentTuple& exponents() const { return e_; }
    const SpdPower& cpower() const { return cpow_; }
    double mu() const; // largest eigenvalue modulus of C

    MetricChart chart(int k) const { return make_chart(k, e_); }

    // || C^{-w_k(x,y)} v ||
    double fiber_norm(int chart_k, double x, double y, const Eigen::VectorXd& v) const;
    // || C^{-s t0} v ||, the norm along a section at height s
    double section_norm(double s, const Eigen::VectorXd& v) const;

    // Unit eigenvectors of C. The return dynamics contracts along the
    // LARGE-eigenvalue eigenspace (the exponents are negative), so the
    // stable direction of the certificate is the mu-eigenvector.
    Eigen::VectorXd stable_unit() const;
    Eigen::VectorXd unstable_unit() const;

    // Exact consistency of consecutive charts under the boundary gluing
    // A(x,y) = (y,-x): reports w_{k+1}(A(p)) + w_k(p) - (2k-1) t0 over
    // sampled boundary points (all zeros for the shipped forms).
    std::string transition_report(int samples_per_edge = 9) const;

private:
    ExponentTuple e_;
    int d_;
    SpdPower cpow_;
};

// Convenience free function matching the certificate formulas directly.
double section_norm(double s, const Eigen::VectorXd& v, std::int64_t t0);

} // namespace blflow
