#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace fickkin {

enum class AngularProfile { Grad, Constant };

/// Species data and collision kernel B_ij = C^Phi_ij |v - v_*|^gamma b(cos theta).
///
/// The grad profile is b(c) = C_b1 |sin theta| |cos theta| with c = cos theta;
/// the constant profile is b = b0.
class Mixture {
 public:
  Mixture(Eigen::VectorXd masses, Eigen::MatrixXd c_phi, double gamma,
          AngularProfile profile, int d, double b_param = 1.0);

  int species() const { return static_cast<int>(masses_.size()); }
  int dim() const { return d_; }
  const Eigen::VectorXd& masses() const { return masses_; }
  double mass(int i) const { return masses_(i); }
  const Eigen::MatrixXd& c_phi() const { return c_phi_; }
  double gamma() const { return gamma_; }
  AngularProfile profile() const { return profile_; }
  double b_param() const { return b_param_; }

  /// Angular part b(cos theta); the same profile is used for every pair.
  double angular(double cos_theta) const;
  /// Full kernel for pair (i,j).
  double kernel(int i, int j, double rel_speed, double cos_theta) const;

  /// Stable content hash (masses, kernel, dimension).
  std::uint64_t hash() const;

 private:
  Eigen::VectorXd masses_;
  Eigen::MatrixXd c_phi_;
  double gamma_;
  AngularProfile profile_;
  int d_;
  double b_param_;
};

/// mu_i(v) = (m_i/2pi)^{d/2} exp(-m_i |v|^2 / 2)
double mu(const Mixture& mix, int i, const double* v);
/// log mu_i(v), finite even where mu underflows.
double log_mu(const Mixture& mix, int i, const double* v);
/// M_i(v) = n_i mu_i(v). Throws a domain error for n_i <= 0.
double maxwellian(const Mixture& mix, int i, double n_i, const double* v);

struct MixtureScalars {
  double c_inf;    // sum n_i
  double rho_inf;  // sum m_i n_i
};
MixtureScalars mixture_scalars(const Mixture& mix, const Eigen::VectorXd& n);

/// Throws a domain error unless every n_i > 0 and the size matches.
void require_positive(const Mixture& mix, const Eigen::VectorXd& n);

struct HypothesisReport {
  bool symmetric = true;
  std::vector<std::pair<int, int>> asymmetric_pairs;  // 1-based
  bool gamma_ok = true;
  bool masses_ok = true;
  bool grad_bound_ok = true;  // only sampled for the grad profile
  double c_b = 0.0;
  bool c_b_positive = false;
  bool degenerate_1d = false;  // d = 1 with equal masses
  bool ok() const { return symmetric && gamma_ok && masses_ok && grad_bound_ok && c_b_positive; }
  std::string summary() const;
};

/// d = 2: int_{S^1} min{b(s1.s3), b(s2.s3)} ds3, s1 and s2 given by their polar angles.
double angular_overlap(const Mixture& mix, double a1, double a2, int nodes);

/// c^b = inf over (sigma1, sigma2) of int_{S^{d-1}} min{b(sigma1.s3), b(sigma2.s3)} d s3.
/// In d = 2 the infimum is searched over the relative angle of sigma1, sigma2.
double angular_cb(const Mixture& mix, int nodes = 2048);

HypothesisReport validate_hypotheses(const Mixture& mix, int nodes = 2048);

/// Throws a config error naming the first offending pair if C^Phi is asymmetric.
void require_valid(const Mixture& mix);

}  // namespace fickkin
