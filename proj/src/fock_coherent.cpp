#include "dprmdi/fock_coherent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

namespace dprmdi {

PhaseCount PhaseCount::discrete(int n) {
  if (n < 1) {
    throw std::domain_error(fmt::format("phase count must be >= 1, got {}", n));
  }
  PhaseCount p;
  p.count_ = n;
  return p;
}

PhaseCount PhaseCount::parse(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "continuous") return continuous();
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(fmt::format("bad phase count '{}'", text));
  }
  if (used != text.size()) throw std::invalid_argument(fmt::format("bad phase count '{}'", text));
  return discrete(n);
}

int PhaseCount::count() const {
  if (!count_) throw std::logic_error("continuous phase randomization has no finite count");
  return *count_;
}

std::string PhaseCount::to_string() const {
  return count_ ? std::to_string(*count_) : std::string("inf");
}

bool operator<(const PhaseCount& a, const PhaseCount& b) {
  if (a.is_continuous()) return false;
  if (b.is_continuous()) return true;
  return a.count() < b.count();
}

SourceConfig::SourceConfig(PhaseCount phases, double intensity)
    : phases_(phases), intensity_(intensity) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::domain_error(fmt::format("intensity must be finite and >= 0, got {}", intensity));
  }
}

void SeriesPolicy::validate() const {
  if (!(relative_term_cutoff > 0.0)) throw std::domain_error("relative_term_cutoff must be > 0");
  if (max_terms < 1) throw std::domain_error("max_terms must be >= 1");
}

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Neumaier compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct ClassSums {
  double plain;
  double weighted;
};

// Sums x^n / n! over n = j, j+step, j+2*step, ..., each term divided by the
// leading x^j / j! so the first term is exactly 1.  `weight(n)` multiplies the
// terms of the second sum.  Successive terms come from running products, so
// no factorial is ever formed.
template <class Weight>
ClassSums normalized_class_sums(double x, int step, int j, const SeriesPolicy& policy,
                                Weight weight) {
  policy.validate();
  CompensatedSum plain, weighted;
  double term = 1.0;
  long n = j;
  for (int l = 0; l < policy.max_terms; ++l) {
    plain.add(term);
    weighted.add(term * weight(n));
    double ratio = 1.0;
    for (int k = 1; k <= step; ++k) ratio *= x / static_cast<double>(n + k);
    term *= ratio;
    n += step;
    if (ratio < 1.0 && term < policy.relative_term_cutoff * plain.value()) break;
  }
  return {plain.value(), weighted.value()};
}

ClassSums normalized_class_sums(double x, int step, int j, const SeriesPolicy& policy) {
  return normalized_class_sums(x, step, j, policy, [](long) { return 0.0; });
}

// x^j / j! evaluated in log space.
double leading_term(double x, int j) {
  if (j == 0) return 1.0;
  if (x == 0.0) return 0.0;
  return std::exp(j * std::log(x) - std::lgamma(j + 1.0));
}

// 2^{-n/2} (cos(n pi/4) + sin(n pi/4)), with the trigonometric part taken
// from an exact table over n mod 8.
double basis_overlap_weight(long n) {
  static constexpr std::array<double, 8> kCosPlusSin = {1.0, kSqrt2, 1.0, 0.0,
                                                        -1.0, -kSqrt2, -1.0, 0.0};
  return std::exp2(-0.5 * static_cast<double>(n)) * kCosPlusSin[n % 8];
}

double cos_quarter_pi(long n) {
  static constexpr std::array<double, 8> kCos = {1.0, kSqrt2 / 2, 0.0, -kSqrt2 / 2,
                                                 -1.0, -kSqrt2 / 2, 0.0, kSqrt2 / 2};
  return kCos[n % 8];
}

void check_class_index(const SourceConfig& cfg, int j) {
  if (j < 0) throw std::domain_error(fmt::format("photon class index {} is negative", j));
  if (!cfg.is_continuous() && j >= cfg.phases().count()) {
    throw std::domain_error(fmt::format("photon class index {} out of range for N = {}", j,
                                        cfg.phases().count()));
  }
}

}  // namespace

double class_probability(const SourceConfig& cfg, int j, const SeriesPolicy& policy) {
  check_class_index(cfg, j);
  const double mu = cfg.intensity();
  if (mu == 0.0) return j == 0 ? 1.0 : 0.0;
  const double lead = std::exp(-mu + (j == 0 ? 0.0 : j * std::log(mu) - std::lgamma(j + 1.0)));
  if (cfg.is_continuous()) return lead;
  const auto sums = normalized_class_sums(mu, cfg.phases().count(), j, policy);
  return lead * sums.plain;
}

Eigen::VectorXd class_probabilities(const SourceConfig& cfg, int count,
                                    const SeriesPolicy& policy) {
  Eigen::VectorXd p(count);
  for (int j = 0; j < count; ++j) p[j] = class_probability(cfg, j, policy);
  return p;
}

double fidelity_bound_xy(const SourceConfig& cfg, int j, const SeriesPolicy& policy) {
  check_class_index(cfg, j);
  if (cfg.is_continuous()) return 1.0;
  const double mu = cfg.intensity();
  if (mu == 0.0) {
    if (j > 0) throw std::domain_error("class j > 0 is empty at zero intensity");
    return 1.0;
  }
  const auto sums =
      normalized_class_sums(mu, cfg.phases().count(), j, policy, basis_overlap_weight);
  const double ratio = sums.weighted / sums.plain;
  return std::clamp(ratio * ratio, 0.0, 1.0);
}

double first_order_fidelity(const SourceConfig& cfg) {
  if (cfg.is_continuous()) return 1.0;
  const int n = cfg.phases().count();
  const double mu = cfg.intensity();
  const double prefactor = 1.0 - std::exp2(-0.5 * n) * cos_quarter_pi(n);
  return 1.0 - 2.0 * prefactor * leading_term(mu, n) / (n + 1.0);
}

double fidelity_between_intensities(const SourceConfig& a, const SourceConfig& b,
                                    const SeriesPolicy& policy) {
  if (!(a.phases() == b.phases())) {
    throw std::domain_error(fmt::format("phase counts differ ({} vs {})", a.phases().to_string(),
                                        b.phases().to_string()));
  }
  if (a.is_continuous()) return 1.0;
  const int n = a.phases().count();
  const double cross =
      normalized_class_sums(std::sqrt(a.intensity() * b.intensity()), n, 0, policy).plain;
  const double sa = normalized_class_sums(a.intensity(), n, 0, policy).plain;
  const double sb = normalized_class_sums(b.intensity(), n, 0, policy).plain;
  return std::min(1.0, cross / std::sqrt(sa * sb));
}

double deviation_bound(double fidelity) {
  if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
    throw std::domain_error(fmt::format("fidelity {} outside [0, 1]", fidelity));
  }
  return std::sqrt((1.0 - fidelity) * (1.0 + fidelity));
}

ExactFidelity exact_fidelity_oracle(const SourceConfig& cfg, int j) {
  if (cfg.is_continuous()) throw std::domain_error("exact fidelity oracle needs a finite N");
  check_class_index(cfg, j);
  const double mu = cfg.intensity();
  if (!(mu > 0.0)) throw std::domain_error("exact fidelity oracle needs mu > 0");
  const int n = cfg.phases().count();

  using cd = std::complex<double>;
  // Phase of the signal pulse relative to the reference pulse: 0_x, 1_x, 0_y, 1_y.
  const std::array<cd, 4> signs = {cd{1, 0}, cd{-1, 0}, cd{0, 1}, cd{0, -1}};

  // <psi_s|psi_t> up to a common factor N:
  //   sum_d exp(-2 pi i d j / N) exp(-mu + (1 + conj(s) t) (mu/2) exp(2 pi i d / N)),
  // the product of the reference and signal coherent-state overlaps.
  Eigen::Matrix4cd gram;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const cd c = 1.0 + std::conj(signs[a]) * signs[b];
      cd acc{0, 0};
      for (int d = 0; d < n; ++d) {
        const double theta = 2.0 * std::numbers::pi * d / n;
        acc += std::polar(1.0, -theta * j) * std::exp(-mu + c * (mu / 2.0) * std::polar(1.0, theta));
      }
      gram(a, b) = acc;
    }
  }
  const Eigen::Vector4d norms = gram.diagonal().real().cwiseSqrt();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) gram(a, b) /= norms[a] * norms[b];
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(gram, Eigen::EigenvaluesOnly);
  const Eigen::Vector4d lambda = eig.eigenvalues();
  const double top = lambda.maxCoeff();
  int rank = 0;
  for (double l : lambda) rank += l > 1e-12 * top ? 1 : 0;
  const double bottom = std::max(lambda.minCoeff(), std::numeric_limits<double>::min());

  const Eigen::Matrix2cd cross = 0.5 * gram.block<2, 2>(0, 2);
  const Eigen::JacobiSVD<Eigen::Matrix2cd> svd(cross);
  const double single = svd.singularValues().sum();
  return {single * single, top / bottom, rank};
}

}  // namespace dprmdi
