#include "drstrat/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace drstrat {

namespace {

constexpr double kNoiseFloor = 1e-8;
constexpr double kDuplicateTol = 1e-9;
const double kLengthscaleGrid[] = {0.05, 0.1, 0.2, 0.5, 1.0};

double sq_dist(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
    return (a - b).squaredNorm();
}

} // namespace

struct GPSurrogate::Impl {
    Eigen::MatrixXd X;        // rows = training points
    Eigen::VectorXd alpha;    // (K + noise I)^{-1} (y - mean)
    Eigen::LLT<Eigen::MatrixXd> llt;
    double y_mean = 0.0;
    double lengthscale = 1.0;
    double signal_var = 1.0;
    double noise_var = kNoiseFloor;

    double kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) const {
        return signal_var * std::exp(-sq_dist(a, b) / (2.0 * lengthscale * lengthscale));
    }
};

GPSurrogate::GPSurrogate() = default;
GPSurrogate::~GPSurrogate() = default;
GPSurrogate::GPSurrogate(GPSurrogate&&) noexcept = default;
GPSurrogate& GPSurrogate::operator=(GPSurrogate&&) noexcept = default;

bool GPSurrogate::fitted() const { return impl_ != nullptr; }
std::size_t GPSurrogate::num_points() const { return impl_ ? impl_->X.rows() : 0; }
std::size_t GPSurrogate::dimension() const { return impl_ ? impl_->X.cols() : 0; }
double GPSurrogate::lengthscale() const { return impl_ ? impl_->lengthscale : 0.0; }
double GPSurrogate::signal_variance() const { return impl_ ? impl_->signal_var : 0.0; }
double GPSurrogate::noise_variance() const { return impl_ ? impl_->noise_var : 0.0; }

void GPSurrogate::posterior(const std::vector<double>& x, double& mean, double& var) const {
    if (!impl_) throw GPFitFailure("posterior query on an unfitted surrogate");
    const Impl& im = *impl_;
    if (static_cast<Eigen::Index>(x.size()) != im.X.cols())
        throw GPFitFailure("posterior query dimension does not match training data");
    Eigen::RowVectorXd q = Eigen::Map<const Eigen::RowVectorXd>(x.data(), x.size());
    Eigen::VectorXd ks(im.X.rows());
    for (Eigen::Index i = 0; i < im.X.rows(); ++i) ks[i] = im.kernel(im.X.row(i), q);
    mean = im.y_mean + ks.dot(im.alpha);
    Eigen::VectorXd v = im.llt.solve(ks);
    var = std::max(im.signal_var - ks.dot(v), 0.0);
}

GPSurrogate gp_fit(const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& values) {
    if (inputs.size() != values.size())
        throw GPFitFailure("gp_fit: inputs and values differ in length");

    // Deduplicate, keeping the most recent observation of each point.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        bool dup = false;
        for (std::size_t& j : keep) {
            if (inputs[j].size() != inputs[i].size()) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < inputs[i].size(); ++c) {
                double d = inputs[i][c] - inputs[j][c];
                d2 += d * d;
            }
            if (std::sqrt(d2) < kDuplicateTol) {
                j = i; // later observation wins
                dup = true;
                break;
            }
        }
        if (!dup) keep.push_back(i);
    }
    if (keep.size() < 2) throw GPFitFailure("gp_fit: need at least 2 distinct points");
    const std::size_t n = keep.size();
    const std::size_t d = inputs[keep[0]].size();
    for (std::size_t i : keep)
        if (inputs[i].size() != d) throw GPFitFailure("gp_fit: inconsistent input dimensions");

    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) X(r, c) = inputs[keep[r]][c];
        y[r] = values[keep[r]];
    }
    double y_mean = y.mean();
    Eigen::VectorXd yc = y.array() - y_mean;
    double signal_var = std::max(yc.squaredNorm() / static_cast<double>(n), 1e-12);

    auto impl = std::make_unique<GPSurrogate::Impl>();
    impl->X = X;
    impl->y_mean = y_mean;
    impl->signal_var = signal_var;
    impl->noise_var = kNoiseFloor;

    double best_ll = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (double ell : kLengthscaleGrid) {
        Eigen::MatrixXd K(n, n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = a; b < n; ++b) {
                double k = signal_var *
                           std::exp(-sq_dist(X.row(a), X.row(b)) / (2.0 * ell * ell));
                K(a, b) = k;
                K(b, a) = k;
            }
        }
        for (double jitter = 1e-10;; jitter *= 10.0) {
            Eigen::MatrixXd Kn =
                K + (impl->noise_var + jitter) * Eigen::MatrixXd::Identity(n, n);
            Eigen::LLT<Eigen::MatrixXd> llt(Kn);
            if (llt.info() != Eigen::Success) {
                if (jitter >= 1e-6) break;
                continue;
            }
            Eigen::VectorXd alpha = llt.solve(yc);
            double logdet = 0.0;
            // Diagonal of the packed LLT storage is the Cholesky diagonal.
            for (std::size_t i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
            double ll = -0.5 * yc.dot(alpha) - logdet -
                        0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
            if (ll > best_ll) {
                best_ll = ll;
                impl->lengthscale = ell;
                impl->alpha = alpha;
                impl->llt = llt;
            }
            any = true;
            break;
        }
    }
    if (!any)
        throw GPFitFailure("gp_fit: kernel matrix not positive definite after jitter escalation");

    GPSurrogate gp;
    gp.impl_ = std::move(impl);
    return gp;
}

double expected_improvement(const GPSurrogate& gp, const std::vector<double>& x,
                            double best_value) {
    double mean = 0.0, var = 0.0;
    gp.posterior(x, mean, var);
    double sigma = std::sqrt(var);
    double gap = best_value - mean;
    if (sigma < 1e-12) return std::max(gap, 0.0);
    double z = gap / sigma;
    double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return gap * cdf + sigma * pdf;
}

} // namespace drstrat
