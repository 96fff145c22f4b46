#include "fickkin/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fickkin/errors.hpp"
#include "fickkin/hash.hpp"

namespace fickkin {

namespace {
constexpr double kPi = std::numbers::pi;
}

Mixture::Mixture(Eigen::VectorXd masses, Eigen::MatrixXd c_phi, double gamma,
                 AngularProfile profile, int d, double b_param)
    : masses_(std::move(masses)),
      c_phi_(std::move(c_phi)),
      gamma_(gamma),
      profile_(profile),
      d_(d),
      b_param_(b_param) {
  const int N = species();
  if (N < 2) throw config_error("mixture needs at least 2 species");
  if (c_phi_.rows() != N || c_phi_.cols() != N)
    throw dimension_error("kernel.c_phi must be an N x N matrix");
  for (int i = 0; i < N; ++i)
    if (!(masses_(i) > 0.0)) throw domain_error("species mass must be positive");
  if ((c_phi_.array() < 0.0).any()) throw domain_error("kernel.c_phi entries must be non-negative");
  if (!(gamma_ >= 0.0 && gamma_ <= 1.0)) throw config_error("kernel.gamma must lie in [0,1]");
  if (d_ != 1 && d_ != 2) throw config_error("kernel.d must be 1 or 2");
  if (!(b_param_ > 0.0)) throw config_error("angular profile constant must be positive");
}

double Mixture::angular(double c) const {
  c = std::clamp(c, -1.0, 1.0);
  if (profile_ == AngularProfile::Constant) return b_param_;
  return b_param_ * std::abs(c) * std::sqrt(std::max(0.0, 1.0 - c * c));
}

double Mixture::kernel(int i, int j, double rel_speed, double cos_theta) const {
  const double kin = gamma_ == 0.0 ? 1.0 : std::pow(rel_speed, gamma_);
  return c_phi_(i, j) * kin * angular(cos_theta);
}

std::uint64_t Mixture::hash() const {
  Fnv1a h;
  h.add(std::string_view("mixture"));
  h.add(static_cast<std::int64_t>(species())).add(static_cast<std::int64_t>(d_));
  for (int i = 0; i < species(); ++i) h.add(masses_(i));
  for (int i = 0; i < species(); ++i)
    for (int j = 0; j < species(); ++j) h.add(c_phi_(i, j));
  h.add(gamma_).add(static_cast<std::int64_t>(profile_)).add(b_param_);
  return h.value();
}

double log_mu(const Mixture& mix, int i, const double* v) {
  const double m = mix.mass(i);
  double v2 = 0.0;
  for (int k = 0; k < mix.dim(); ++k) v2 += v[k] * v[k];
  return 0.5 * mix.dim() * std::log(m / (2.0 * kPi)) - 0.5 * m * v2;
}

double mu(const Mixture& mix, int i, const double* v) { return std::exp(log_mu(mix, i, v)); }

double maxwellian(const Mixture& mix, int i, double n_i, const double* v) {
  if (!(n_i > 0.0)) throw domain_error("maxwellian: concentration must be positive");
  return n_i * mu(mix, i, v);
}

void require_positive(const Mixture& mix, const Eigen::VectorXd& n) {
  if (n.size() != mix.species()) throw dimension_error("concentration vector has wrong length");
  for (int i = 0; i < n.size(); ++i)
    if (!(n(i) > 0.0)) {
      std::ostringstream os;
      os << "concentration n_" << i + 1 << " = " << n(i) << " is not positive";
      throw domain_error(os.str());
    }
}

MixtureScalars mixture_scalars(const Mixture& mix, const Eigen::VectorXd& n) {
  require_positive(mix, n);
  return {n.sum(), mix.masses().dot(n)};
}

double angular_overlap(const Mixture& mix, double a1, double a2, int nodes) {
  const double dt = 2.0 * kPi / nodes;
  double acc = 0.0;
  for (int k = 0; k < nodes; ++k) {
    const double t = (k + 0.5) * dt;
    acc += std::min(mix.angular(std::cos(t - a1)), mix.angular(std::cos(t - a2)));
  }
  return acc * dt;
}

double angular_cb(const Mixture& mix, int nodes) {
  if (mix.dim() == 1) {
    // S^0 = {-1, +1} with counting measure.
    double best = 1e300;
    for (int s1 : {-1, 1})
      for (int s2 : {-1, 1}) {
        double acc = 0.0;
        for (int s3 : {-1, 1}) acc += std::min(mix.angular(s1 * s3), mix.angular(s2 * s3));
        best = std::min(best, acc);
      }
    return best;
  }
  // Rotation invariance reduces the infimum to the relative angle phi in [0, pi].
  double best = 1e300;
  const int search = std::max(64, nodes / 8);
  for (int k = 0; k <= search; ++k) {
    const double phi = kPi * k / search;
    best = std::min(best, angular_overlap(mix, 0.0, phi, nodes));
  }
  return best;
}

HypothesisReport validate_hypotheses(const Mixture& mix, int nodes) {
  HypothesisReport r;
  const int N = mix.species();
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) {
      const double a = mix.c_phi()(i, j), b = mix.c_phi()(j, i);
      if (std::abs(a - b) > 1e-14 * std::max({1.0, std::abs(a), std::abs(b)})) {
        r.symmetric = false;
        r.asymmetric_pairs.emplace_back(i + 1, j + 1);
      }
    }
  r.gamma_ok = mix.gamma() >= 0.0 && mix.gamma() <= 1.0;
  r.masses_ok = (mix.masses().array() > 0.0).all();
  if (mix.profile() == AngularProfile::Grad) {
    for (int k = 0; k <= 1000; ++k) {
      const double c = -1.0 + 2.0 * k / 1000.0;
      const double bound = mix.b_param() * std::abs(c) * std::sqrt(std::max(0.0, 1.0 - c * c));
      if (mix.angular(c) > bound * (1.0 + 1e-12) + 1e-300) r.grad_bound_ok = false;
    }
  }
  r.c_b = angular_cb(mix, nodes);
  r.c_b_positive = r.c_b > 0.0;
  if (mix.dim() == 1) {
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        if (mix.mass(i) == mix.mass(j)) r.degenerate_1d = true;
  }
  return r;
}

std::string HypothesisReport::summary() const {
  std::ostringstream os;
  if (!symmetric) {
    os << "C^Phi is not symmetric for pair";
    for (auto [i, j] : asymmetric_pairs) os << " (" << i << "," << j << ")";
    os << "; ";
  }
  if (!gamma_ok) os << "gamma outside [0,1]; ";
  if (!masses_ok) os << "non-positive mass; ";
  if (!grad_bound_ok) os << "angular profile exceeds the grad bound; ";
  if (!c_b_positive) os << "c^b is not positive; ";
  if (degenerate_1d) os << "d = 1 with equal masses is degenerate; ";
  std::string s = os.str();
  return s.empty() ? "ok" : s;
}

void require_valid(const Mixture& mix) {
  auto r = validate_hypotheses(mix, 256);
  if (!r.symmetric) throw config_error("validation failed: " + r.summary());
}

}  // namespace fickkin
