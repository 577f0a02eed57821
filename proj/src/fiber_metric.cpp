#include "blflow/fiber_metric.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "blflow/holonomy.hpp"

namespace blflow {

SpdPower::SpdPower(const IntMatrix& C) {
    if (!C.is_symmetric()) throw NotSPD("matrix power base is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C.to_real());
    if (es.info() != Eigen::Success) throw NotSPD("eigen-decomposition failed");
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
    for (int i = 0; i < evals_.size(); ++i)
        if (!(evals_[i] > 0.0))
            throw NotSPD("matrix power base has a non-positive eigenvalue " +
                         std::to_string(evals_[i]));
}

Eigen::MatrixXd SpdPower::power(double t) const {
    Eigen::VectorXd lp(evals_.size());
    for (int i = 0; i < evals_.size(); ++i) lp[i] = std::pow(evals_[i], t);
    return evecs_ * lp.asDiagonal() * evecs_.transpose();
}

double SpdPower::power_norm(double t, const Eigen::VectorXd& v) const {
    if (v.size() != evals_.size())
        throw DimensionMismatch("power_norm: vector dimension " + std::to_string(v.size()) +
                                " != " + std::to_string(evals_.size()));
    Eigen::VectorXd w = evecs_.transpose() * v;
    double acc = 0.0;
    for (int i = 0; i < w.size(); ++i) {
        double s = std::pow(evals_[i], t) * w[i];
        acc += s * s;
    }
    return std::sqrt(acc);
}

Eigen::MatrixXd mat_power_real(const IntMatrix& C, double t) {
    return SpdPower(C).power(t);
}

MetricChart make_chart(int k, const ExponentTuple& e) {
    double t1 = double(e.t[0]), t2 = double(e.t[1]), t0 = double(e.t0);
    switch (k) {
        case 1: return {1, t2, t1, 0.0};
        case 2: return {2, -t1, t2, t0};
        case 3: return {3, -t2, -t1, 2.0 * t0};
        case 4: return {4, t1, -t2, 3.0 * t0};
        case 5: return {5, t2, t1, 4.0 * t0};
        default: throw ConfigError("chart index must be in 1..5");
    }
}

FiberMetric::FiberMetric(const ExponentTuple& e, int d)
    : e_(e), d_(d), cpow_(block_replicate(build_blocks().first, d)) {
    e.validate();
}

double FiberMetric::mu() const { return (3.0 + std::sqrt(5.0)) / 2.0; }

double FiberMetric::fiber_norm(int chart_k, double x, double y,
                               const Eigen::VectorXd& v) const {
    MetricChart ch = make_chart(chart_k, e_);
    return cpow_.power_norm(-ch.exponent(x, y), v);
}

double FiberMetric::section_norm(double s, const Eigen::VectorXd& v) const {
    return cpow_.power_norm(-s * double(e_.t0), v);
}

Eigen::VectorXd FiberMetric::stable_unit() const {
    // eigenvector of the leading 2x2 block for the large eigenvalue mu:
    // (1, mu - 2), extended by zeros
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d_);
    v[0] = 1.0;
    v[1] = mu() - 2.0;
    return v.normalized();
}

Eigen::VectorXd FiberMetric::unstable_unit() const {
    // eigenvector of the leading block for 1/mu: (1, 1 - mu)
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d_);
    v[0] = 1.0;
    v[1] = 1.0 - mu();
    return v.normalized();
}

std::string FiberMetric::transition_report(int samples_per_edge) const {
    std::ostringstream os;
    char buf[160];
    for (int k = 1; k <= 4; ++k) {
        MetricChart cur = make_chart(k, e_);
        MetricChart nxt = make_chart(k + 1, e_);
        double worst = 0.0;
        for (int s = 0; s < samples_per_edge; ++s) {
            double x = -2.0 + 4.0 * s / std::max(1, samples_per_edge - 1);
            for (double y : {1.0, -1.0}) {
                auto img = glue_A(std::pair<double, double>{x, y});
                double resid = nxt.exponent(img.first, img.second) + cur.exponent(x, y) -
                               (2.0 * k - 1.0) * double(e_.t0);
                worst = std::max(worst, std::fabs(resid));
            }
        }
        std::snprintf(buf, sizeof buf,
                      "chart %d -> %d: max |w_next(A(p)) + w_cur(p) - %lld*t0| = %.3e\n", k,
                      k + 1, 2LL * k - 1, worst);
        os << buf;
    }
    return os.str();
}

double section_norm(double s, const Eigen::VectorXd& v, std::int64_t t0) {
    if (v.size() % 4 != 0 || v.size() == 0)
        throw DimensionMismatch("section_norm: vector dimension must be a multiple of 4");
    SpdPower cp(block_replicate(build_blocks().first, int(v.size())));
    return cp.power_norm(-s * double(t0), v);
}

} // namespace blflow
