#include "merg/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace merg {

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Inverse of z -> 2*Phi_c(z) by bisection; monotone on [0, 60].
double gaussian_abs_quantile_std(double eps) {
  double lo = 0.0, hi = 60.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (2.0 * gaussian_upper_tail(mid) > eps) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

}  // namespace

NoiseSpec NoiseSpec::gaussian(double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian noise: sigma must be > 0");
  NoiseSpec n;
  n.family_ = Family::gaussian;
  n.p1_ = sigma;
  return n;
}

NoiseSpec NoiseSpec::laplace(double scale) {
  if (scale <= 0.0) throw std::invalid_argument("laplace noise: scale must be > 0");
  NoiseSpec n;
  n.family_ = Family::laplace;
  n.p1_ = scale;
  return n;
}

NoiseSpec NoiseSpec::student(double df, double scale) {
  if (df <= 2.0) throw std::invalid_argument("student noise: df must be > 2");
  if (scale <= 0.0) throw std::invalid_argument("student noise: scale must be > 0");
  NoiseSpec n;
  n.family_ = Family::student;
  n.p1_ = scale;
  n.p2_ = df;
  n.log_norm_ = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
                0.5 * std::log(df * kPi) - std::log(scale);
  return n;
}

double NoiseSpec::density(double y) const {
  switch (family_) {
    case Family::gaussian:
      return std::exp(-0.5 * y * y / (p1_ * p1_)) / (p1_ * std::sqrt(2.0 * kPi));
    case Family::laplace:
      return std::exp(-std::abs(y) / p1_) / (2.0 * p1_);
    case Family::student: {
      const double t = y / p1_;
      return std::exp(log_norm_ - 0.5 * (p2_ + 1.0) * std::log1p(t * t / p2_));
    }
  }
  return 0.0;
}

double NoiseSpec::sample(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::gaussian: {
      std::normal_distribution<double> d(0.0, p1_);
      return d(rng);
    }
    case Family::laplace: {
      // inverse CDF on u in (-1/2, 1/2)
      std::uniform_real_distribution<double> d(0.0, 1.0);
      const double u = d(rng) - 0.5;
      const double s = u < 0.0 ? -1.0 : 1.0;
      return -p1_ * s * std::log1p(-2.0 * std::abs(u));
    }
    case Family::student: {
      std::student_t_distribution<double> d(p2_);
      return p1_ * d(rng);
    }
  }
  return 0.0;
}

double NoiseSpec::abs_quantile(double eps) const {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("abs_quantile: eps in (0,1)");
  switch (family_) {
    case Family::gaussian:
      return p1_ * gaussian_abs_quantile_std(eps);
    case Family::laplace:
      return p1_ * std::log(1.0 / eps);
    case Family::student: {
      // Solve 2 * f(q) * q / df = eps using the polynomial tail asymptotics,
      // by bisection on the monotone tail of the density.
      double lo = p1_, hi = p1_;
      auto tail = [&](double q) { return 2.0 * density(q) * q / p2_; };
      while (tail(hi) > eps) hi *= 2.0;
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (tail(mid) > eps) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return hi;
    }
  }
  return 0.0;
}

bool NoiseSpec::has_moment(double r) const {
  if (family_ == Family::student) return r < p2_;
  return true;
}

std::string NoiseSpec::describe() const {
  switch (family_) {
    case Family::gaussian: return "gaussian(sigma=" + std::to_string(p1_) + ")";
    case Family::laplace: return "laplace(scale=" + std::to_string(p1_) + ")";
    case Family::student:
      return "student(df=" + std::to_string(p2_) + ", scale=" + std::to_string(p1_) + ")";
  }
  return "?";
}

DistributionSpec DistributionSpec::exponential(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be > 0");
  DistributionSpec d;
  d.family_ = Family::exponential;
  d.p1_ = rate;
  return d;
}

DistributionSpec DistributionSpec::gaussian(double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian: sigma must be > 0");
  DistributionSpec d;
  d.family_ = Family::gaussian;
  d.p1_ = sigma;
  return d;
}

DistributionSpec DistributionSpec::uniform(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("uniform: need a < b");
  DistributionSpec d;
  d.family_ = Family::uniform;
  d.p1_ = a;
  d.p2_ = b;
  return d;
}

double DistributionSpec::density(double x) const {
  switch (family_) {
    case Family::exponential:
      return x < 0.0 ? 0.0 : p1_ * std::exp(-p1_ * x);
    case Family::gaussian:
      return std::exp(-0.5 * x * x / (p1_ * p1_)) / (p1_ * std::sqrt(2.0 * kPi));
    case Family::uniform:
      return (x < p1_ || x > p2_) ? 0.0 : 1.0 / (p2_ - p1_);
  }
  return 0.0;
}

double DistributionSpec::sample(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::exponential: {
      std::exponential_distribution<double> d(p1_);
      return d(rng);
    }
    case Family::gaussian: {
      std::normal_distribution<double> d(0.0, p1_);
      return d(rng);
    }
    case Family::uniform: {
      std::uniform_real_distribution<double> d(p1_, p2_);
      return d(rng);
    }
  }
  return 0.0;
}

std::pair<double, double> DistributionSpec::support(double eps) const {
  switch (family_) {
    case Family::exponential:
      return {0.0, std::log(1.0 / eps) / p1_};
    case Family::gaussian: {
      const double q = p1_ * gaussian_abs_quantile_std(eps);
      return {-q, q};
    }
    case Family::uniform:
      return {p1_, p2_};
  }
  return {0.0, 0.0};
}

bool DistributionSpec::same_as(const DistributionSpec& other, double tol) const {
  return family_ == other.family_ && std::abs(p1_ - other.p1_) <= tol &&
         std::abs(p2_ - other.p2_) <= tol;
}

std::string DistributionSpec::describe() const {
  switch (family_) {
    case Family::exponential: return "exponential(rate=" + std::to_string(p1_) + ")";
    case Family::gaussian: return "gaussian(sigma=" + std::to_string(p1_) + ")";
    case Family::uniform:
      return "uniform(" + std::to_string(p1_) + ", " + std::to_string(p2_) + ")";
  }
  return "?";
}

}  // namespace merg
