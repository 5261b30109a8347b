#pragma once

// Truncated multiple Fock space I (x) Gamma(L^2([0,T], C^d)).
//
// The one-particle space is discretised into n*d slice modes: mode (s, i) is
// the normalised indicator of [t_s, t_{s+1}) in channel i, i.e.
// 1_{[t_s,t_{s+1})} e_i / sqrt(dt). A basis state records an initial-space
// index and the occupation number of every slice mode; the basis keeps every
// state whose total particle number is at most N.

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qsc/errors.hpp"

namespace qsc {

using cplx = std::complex<double>;
using Occupation = std::uint8_t;

struct MultiplicityConfig {
  int d = 1;
  std::vector<double> rho;  // eigenvalues of B, each >= 1

  static MultiplicityConfig uniform(int d) { return {d, std::vector<double>(d, 1.0)}; }
  void validate() const;
};

struct InitialConfig {
  int m = 1;
  std::vector<double> alpha;  // eigenvalues of A, each >= 1

  static InitialConfig trivial(int m = 1) { return {m, std::vector<double>(m, 1.0)}; }
  void validate() const;
};

struct TimeGrid {
  double T = 1.0;
  int n = 1;

  double dt() const { return T / n; }
  double at(int k) const { return k == n ? T : T * k / n; }
  /// Index k with t == t_k; throws GridError otherwise.
  int index_of(double t) const;
  void validate() const;
};

/// Exponents of A^p = A^{p1} (x) Gamma(e^{p2} I (x) B^{p3}).
struct WeightTriple {
  double p1 = 0.0, p2 = 0.0, p3 = 0.0;

  bool nonnegative() const { return p1 >= 0 && p2 >= 0 && p3 >= 0; }
  bool nonpositive() const { return p1 <= 0 && p2 <= 0 && p3 <= 0; }
  bool is_zero() const { return p1 == 0 && p2 == 0 && p3 == 0; }
  /// p - q lies in R_+^3.
  bool dominates(const WeightTriple& q) const {
    return p1 >= q.p1 && p2 >= q.p2 && p3 >= q.p3;
  }
  WeightTriple operator-() const { return {-p1, -p2, -p3}; }
  WeightTriple operator*(double c) const { return {c * p1, c * p2, c * p3}; }
  bool operator==(const WeightTriple&) const = default;
};

struct OccupationState {
  int init = 0;
  std::vector<Occupation> occ;  // row-major over (slice, channel)

  int total() const;
};

class ModelSpace;

/// Index maps realising G = G_{t_k]} (x) H_{[t_k}: every basis state splits
/// into a past configuration (initial index, slices < k) and a future
/// configuration (slices >= k).
class SliceFactorization {
 public:
  int slice() const { return k_; }
  int past_dim() const { return static_cast<int>(past_vacuum_state_.size()); }
  int future_dim() const { return static_cast<int>(future_total_.size()); }

  int past_of(int state) const { return past_of_[state]; }
  int future_of(int state) const { return future_of_[state]; }
  /// Full index of (past, future) or -1 when the pair exceeds the truncation.
  int merge(int past, int future) const;
  /// Full index of the past configuration with an empty future.
  int past_vacuum_state(int past) const { return past_vacuum_state_[past]; }
  int past_total(int past) const { return past_total_[past]; }
  int future_total(int future) const { return future_total_[future]; }
  /// Future configuration with every slice >= k empty (always index 0).
  int future_vacuum() const { return 0; }
  /// Full indices of all states whose future part is `future`.
  const std::vector<int>& states_with_future(int future) const { return by_future_[future]; }

 private:
  friend class ModelSpace;
  int k_ = 0;
  std::vector<int> past_of_, future_of_;
  std::vector<int> past_vacuum_state_, past_total_, future_total_;
  std::vector<std::vector<int>> by_future_;
  std::unordered_map<long long, int> merge_;
  int past_stride_ = 0;
};

class ModelSpace {
 public:
  /// Default basis budget; overridable with QSC_MAX_DIM.
  static constexpr long long kDefaultMaxDim = 20000;
  static long long budget_from_env();

  /// Counting formula D = m * sum_{k<=N} C(nd+k-1, k).
  static long long count_dimension(int d, int m, int n, int N);

  static std::shared_ptr<const ModelSpace> build(const MultiplicityConfig& mult,
                                                 const InitialConfig& init, const TimeGrid& grid,
                                                 int N, long long max_dim = budget_from_env());

  int d() const { return mult_.d; }
  int m() const { return init_.m; }
  int n() const { return grid_.n; }
  int N() const { return N_; }
  int modes() const { return grid_.n * mult_.d; }
  int dim() const { return static_cast<int>(init_of_.size()); }
  double dt() const { return grid_.dt(); }
  int mode(int slice, int channel) const { return slice * mult_.d + channel; }

  const MultiplicityConfig& multiplicity() const { return mult_; }
  const InitialConfig& initial() const { return init_; }
  const TimeGrid& grid() const { return grid_; }

  int init_of(int state) const { return init_of_[state]; }
  int total_of(int state) const { return total_of_[state]; }
  std::span<const Occupation> occ_of(int state) const {
    return {occ_.data() + static_cast<std::size_t>(state) * modes(),
            static_cast<std::size_t>(modes())};
  }
  OccupationState state(int index) const;
  /// Number of particles of state `index` in slice `s` (all channels).
  int slice_total(int index, int s) const;

  std::optional<int> find(int init, std::span<const Occupation> occ) const;
  int vacuum(int init = 0) const;

  /// weight(p) per basis state: alpha_k^{p1} prod (e^{p2} rho_i^{p3})^{n_{s,i}}.
  std::vector<double> weight_vector(const WeightTriple& p) const;
  double weight(int state, const WeightTriple& p) const;

  const SliceFactorization& factorization(int k) const { return factor_.at(k); }

  bool same_as(const ModelSpace& other) const { return this == &other; }

 private:
  ModelSpace() = default;
  std::string key(int init, std::span<const Occupation> occ) const;

  MultiplicityConfig mult_;
  InitialConfig init_;
  TimeGrid grid_;
  int N_ = 0;
  std::vector<int> init_of_, total_of_;
  std::vector<Occupation> occ_;
  std::unordered_map<std::string, int> index_;
  std::vector<SliceFactorization> factor_;
};

using ModelPtr = std::shared_ptr<const ModelSpace>;

/// Piecewise-constant map grid -> C^d; values(s, i) = f_i on slice s.
struct StepFunction {
  Eigen::MatrixXcd values;

  static StepFunction zero(int n, int d) { return {Eigen::MatrixXcd::Zero(n, d)}; }
  static StepFunction constant(int n, int d, cplx c) {
    return {Eigen::MatrixXcd::Constant(n, d, c)};
  }
  /// c on channel `channel` for slices in [k0, k1), zero elsewhere.
  static StepFunction channel_indicator(int n, int d, int channel, int k0, int k1, cplx c = 1.0);

  int slices() const { return static_cast<int>(values.rows()); }
  int channels() const { return static_cast<int>(values.cols()); }
  cplx operator()(int s, int i) const { return values(s, i); }

  /// 1_{[t_k0, t_k1)} f.
  StepFunction restricted(int k0, int k1) const;
  /// sum_s sum_i rho_i^{2 p3} |f_i(s)|^2 dt
  double norm_sq(double dt, std::span<const double> rho = {}, double p3 = 0.0) const;
  /// sum_s sum_i f_i(s) g_i(s) dt (no conjugation)
  cplx bilinear(const StepFunction& g, double dt) const;
  /// Channels that carry a nonzero value somewhere.
  std::vector<int> support() const;

  StepFunction operator+(const StepFunction& o) const { return {values + o.values}; }
  StepFunction operator*(cplx c) const { return {values * c}; }
};

struct StateVector {
  ModelPtr model;
  Eigen::VectorXcd coeffs;

  static StateVector zero(ModelPtr model);
  static StateVector basis(ModelPtr model, int index);
  std::span<const cplx> span() const { return {coeffs.data(), static_cast<std::size_t>(coeffs.size())}; }
  std::span<cplx> span() { return {coeffs.data(), static_cast<std::size_t>(coeffs.size())}; }
  double norm() const;
};

ModelPtr build_model(const MultiplicityConfig& mult, const InitialConfig& init,
                     const TimeGrid& grid, int N);

/// u (x) phi_f truncated at N: coefficient of (k, {n_{s,i}}) is
/// u_k prod (f_i(s) sqrt(dt))^{n_{s,i}} / sqrt(n_{s,i}!).
StateVector tensor_with_initial(const ModelPtr& model, const Eigen::VectorXcd& u,
                                const StepFunction& f);
/// e_0 (x) phi_f.
StateVector exponential_vector(const StepFunction& f, const ModelPtr& model);
/// Drops every component with total particle number above `max_total`.
StateVector truncate_grade(const StateVector& v, int max_total);

/// sum_k x_k y_k, no conjugation.
cplx pair_bilinear(const StateVector& x, const StateVector& y);
/// sum_k conj(x_k) y_k.
cplx inner(const StateVector& x, const StateVector& y);

StateVector apply_weight(const WeightTriple& p, const StateVector& v);
double weighted_norm(const WeightTriple& p, const StateVector& v);

/// sqrt(sum_{k>N} x^k / k!) with x = ||f||^2, the norm of the part of phi_f
/// discarded by the particle-number truncation.
double truncation_bound(double norm_sq, int N);
double truncation_bound(const StepFunction& f, double dt, int N);

/// Factorisation at grid time t; throws GridError when t is not a grid point.
const SliceFactorization& factorize(double t, const ModelSpace& model);

/// Coefficient matrix C(past, future) of v against the factorisation at t_k.
Eigen::MatrixXcd split(const StateVector& v, int k);
StateVector merge(const ModelPtr& model, int k, const Eigen::MatrixXcd& coeffs);

/// Canonical basis listing: "index,init,occ..." lines.
std::string basis_csv(const ModelSpace& model);

}  // namespace qsc
