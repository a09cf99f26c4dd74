#pragma once

#include <random>
#include <string>

namespace merg {

// Noise law of the AR(1) innovation: strictly positive density on R.
class NoiseSpec {
 public:
  enum class Family { gaussian, laplace, student };

  static NoiseSpec gaussian(double sigma);
  static NoiseSpec laplace(double scale);
  static NoiseSpec student(double df, double scale);

  Family family() const { return family_; }
  double sigma() const { return p1_; }
  double scale() const { return p1_; }
  double df() const { return p2_; }

  double density(double y) const;
  double sample(std::mt19937_64& rng) const;

  // q such that P(|Y| > q) <= eps.
  double abs_quantile(double eps) const;

  // Whether E|Y|^r is finite.
  bool has_moment(double r) const;

  std::string describe() const;

 private:
  Family family_ = Family::gaussian;
  double p1_ = 1.0;  // sigma or scale
  double p2_ = 0.0;  // student df
  double log_norm_ = 0.0;
};

// Sampleable probability law with density, used for the Knudsen resampling
// measure and explicit initial laws.
class DistributionSpec {
 public:
  enum class Family { exponential, gaussian, uniform };

  static DistributionSpec exponential(double rate);
  static DistributionSpec gaussian(double sigma);
  static DistributionSpec uniform(double a, double b);

  Family family() const { return family_; }
  double rate() const { return p1_; }
  double sigma() const { return p1_; }
  double lower() const { return p1_; }
  double upper() const { return p2_; }

  double density(double x) const;
  double sample(std::mt19937_64& rng) const;

  // Interval carrying all but eps of the mass.
  std::pair<double, double> support(double eps) const;

  bool same_as(const DistributionSpec& other, double tol = 1e-12) const;

  std::string describe() const;

 private:
  Family family_ = Family::gaussian;
  double p1_ = 1.0;
  double p2_ = 0.0;
};

}  // namespace merg
