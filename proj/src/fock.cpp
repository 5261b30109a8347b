#include "qsc/fock.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "qsc/kernels.hpp"

namespace qsc {

void MultiplicityConfig::validate() const {
  if (d < 1) throw ConfigError("multiplicity: d must be >= 1");
  if (static_cast<int>(rho.size()) != d)
    throw ConfigError("multiplicity: rho must have d entries");
  for (double r : rho)
    if (!(r >= 1.0)) throw ConfigError("multiplicity: every rho_i must be >= 1");
}

void InitialConfig::validate() const {
  if (m < 1) throw ConfigError("initial: m must be >= 1");
  if (static_cast<int>(alpha.size()) != m)
    throw ConfigError("initial: alpha must have m entries");
  for (double a : alpha)
    if (!(a >= 1.0)) throw ConfigError("initial: every alpha_k must be >= 1");
}

void TimeGrid::validate() const {
  if (!(T > 0.0)) throw ConfigError("grid: T must be positive");
  if (n < 1) throw ConfigError("grid: n must be >= 1");
}

int TimeGrid::index_of(double t) const {
  const double x = t / T * n;
  const double k = std::round(x);
  if (k < 0 || k > n || std::abs(x - k) > 1e-9)
    throw GridError("time " + std::to_string(t) + " is not a grid point");
  return static_cast<int>(k);
}

int OccupationState::total() const {
  int s = 0;
  for (auto v : occ) s += v;
  return s;
}

int SliceFactorization::merge(int past, int future) const {
  auto it = merge_.find((static_cast<long long>(past) << 32) | static_cast<unsigned>(future));
  return it == merge_.end() ? -1 : it->second;
}

long long ModelSpace::budget_from_env() {
  if (const char* env = std::getenv("QSC_MAX_DIM")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end != env && v > 0) return v;
  }
  return kDefaultMaxDim;
}

long long ModelSpace::count_dimension(int d, int m, int n, int N) {
  constexpr long long cap = std::numeric_limits<long long>::max() / 4;
  const long long modes = static_cast<long long>(n) * d;
  long long total = 0;
  __int128 binom = 1;  // C(modes + k - 1, k)
  for (int k = 0; k <= N; ++k) {
    if (k > 0) {
      binom = binom * (modes + k - 1) / k;
      if (binom > cap) return cap;
    }
    total += static_cast<long long>(binom);
    if (total > cap / std::max(m, 1)) return cap;
  }
  return total * m;
}

std::string ModelSpace::key(int init, std::span<const Occupation> occ) const {
  std::string k;
  k.reserve(occ.size() + 4);
  k.push_back(static_cast<char>(init & 0xff));
  k.push_back(static_cast<char>((init >> 8) & 0xff));
  k.append(reinterpret_cast<const char*>(occ.data()), occ.size());
  return k;
}

namespace {

// Occupation vectors of length `len` summing to `total`, lexicographically ascending.
void enumerate_compositions(int len, int total, std::vector<Occupation>& cur, int pos,
                            std::vector<std::vector<Occupation>>& out) {
  if (pos == len - 1) {
    cur[pos] = static_cast<Occupation>(total);
    out.push_back(cur);
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur[pos] = static_cast<Occupation>(v);
    enumerate_compositions(len, total - v, cur, pos + 1, out);
  }
  cur[pos] = 0;
}

}  // namespace

std::shared_ptr<const ModelSpace> ModelSpace::build(const MultiplicityConfig& mult,
                                                    const InitialConfig& init,
                                                    const TimeGrid& grid, int N,
                                                    long long max_dim) {
  mult.validate();
  init.validate();
  grid.validate();
  if (N < 1) throw ConfigError("truncation N must be >= 1");
  if (N > 255) throw ConfigError("truncation N must fit one byte per mode");

  const long long D = count_dimension(mult.d, init.m, grid.n, N);
  if (D > max_dim) throw DimensionError(D, max_dim);

  std::shared_ptr<ModelSpace> model(new ModelSpace());
  model->mult_ = mult;
  model->init_ = init;
  model->grid_ = grid;
  model->N_ = N;
  const int M = model->modes();

  model->init_of_.reserve(D);
  model->total_of_.reserve(D);
  model->occ_.reserve(D * M);
  for (int total = 0; total <= N; ++total) {
    std::vector<std::vector<Occupation>> comps;
    std::vector<Occupation> cur(M, 0);
    enumerate_compositions(M, total, cur, 0, comps);
    for (int k = 0; k < init.m; ++k) {
      for (const auto& c : comps) {
        const int idx = static_cast<int>(model->init_of_.size());
        model->init_of_.push_back(k);
        model->total_of_.push_back(total);
        model->occ_.insert(model->occ_.end(), c.begin(), c.end());
        model->index_.emplace(model->key(k, c), idx);
      }
    }
  }

  const int d = mult.d;
  const int dim = model->dim();
  model->factor_.resize(grid.n + 1);
  for (int k = 0; k <= grid.n; ++k) {
    SliceFactorization& f = model->factor_[k];
    f.k_ = k;
    f.past_of_.resize(dim);
    f.future_of_.resize(dim);
    std::unordered_map<std::string, int> past_ids, future_ids;
    // Future vacuum first so it gets id 0.
    future_ids.emplace(std::string(static_cast<std::size_t>((grid.n - k) * d), '\0'), 0);
    f.future_total_.push_back(0);
    f.by_future_.emplace_back();
    for (int s = 0; s < dim; ++s) {
      auto occ = model->occ_of(s);
      std::string pk = model->key(model->init_of_[s], occ.subspan(0, k * d));
      std::string fk(reinterpret_cast<const char*>(occ.data()) + k * d,
                     static_cast<std::size_t>((grid.n - k) * d));
      int ptot = 0, ftot = 0;
      for (int j = 0; j < k * d; ++j) ptot += occ[j];
      for (int j = k * d; j < M; ++j) ftot += occ[j];
      auto [pit, pnew] = past_ids.emplace(pk, static_cast<int>(past_ids.size()));
      if (pnew) {
        f.past_total_.push_back(ptot);
        f.past_vacuum_state_.push_back(-1);
      }
      auto [fit, fnew] = future_ids.emplace(fk, static_cast<int>(future_ids.size()));
      if (fnew) {
        f.future_total_.push_back(ftot);
        f.by_future_.emplace_back();
      }
      f.past_of_[s] = pit->second;
      f.future_of_[s] = fit->second;
      if (fit->second == 0) f.past_vacuum_state_[pit->second] = s;
      f.by_future_[fit->second].push_back(s);
      f.merge_.emplace((static_cast<long long>(pit->second) << 32) |
                           static_cast<unsigned>(fit->second),
                       s);
    }
  }
  return model;
}

OccupationState ModelSpace::state(int index) const {
  auto occ = occ_of(index);
  return {init_of_[index], std::vector<Occupation>(occ.begin(), occ.end())};
}

int ModelSpace::slice_total(int index, int s) const {
  auto occ = occ_of(index);
  int t = 0;
  for (int i = 0; i < d(); ++i) t += occ[mode(s, i)];
  return t;
}

std::optional<int> ModelSpace::find(int init, std::span<const Occupation> occ) const {
  auto it = index_.find(key(init, occ));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int ModelSpace::vacuum(int init) const {
  std::vector<Occupation> zero(modes(), 0);
  return *find(init, zero);
}

double ModelSpace::weight(int state, const WeightTriple& p) const {
  double log_w = p.p1 * std::log(init_.alpha[init_of_[state]]);
  auto occ = occ_of(state);
  for (int s = 0; s < n(); ++s)
    for (int i = 0; i < d(); ++i) {
      const int c = occ[mode(s, i)];
      if (c != 0) log_w += c * (p.p2 + p.p3 * std::log(mult_.rho[i]));
    }
  return std::exp(log_w);
}

std::vector<double> ModelSpace::weight_vector(const WeightTriple& p) const {
  std::vector<double> w(dim());
  for (int s = 0; s < dim(); ++s) w[s] = weight(s, p);
  return w;
}

const SliceFactorization& factorize(double t, const ModelSpace& model) {
  return model.factorization(model.grid().index_of(t));
}

StepFunction StepFunction::channel_indicator(int n, int d, int channel, int k0, int k1, cplx c) {
  StepFunction f = zero(n, d);
  for (int s = std::max(k0, 0); s < std::min(k1, n); ++s) f.values(s, channel) = c;
  return f;
}

StepFunction StepFunction::restricted(int k0, int k1) const {
  StepFunction out = zero(slices(), channels());
  for (int s = std::max(k0, 0); s < std::min(k1, slices()); ++s) out.values.row(s) = values.row(s);
  return out;
}

double StepFunction::norm_sq(double dt, std::span<const double> rho, double p3) const {
  double acc = 0.0;
  for (int s = 0; s < slices(); ++s)
    for (int i = 0; i < channels(); ++i) {
      const double w = rho.empty() ? 1.0 : std::pow(rho[i], 2.0 * p3);
      acc += w * std::norm(values(s, i));
    }
  return acc * dt;
}

cplx StepFunction::bilinear(const StepFunction& g, double dt) const {
  cplx acc = 0.0;
  for (int s = 0; s < slices(); ++s)
    for (int i = 0; i < channels(); ++i) acc += values(s, i) * g.values(s, i);
  return acc * dt;
}

std::vector<int> StepFunction::support() const {
  std::vector<int> out;
  for (int i = 0; i < channels(); ++i)
    if (values.col(i).cwiseAbs().maxCoeff() > 0.0) out.push_back(i);
  return out;
}

StateVector StateVector::zero(ModelPtr model) {
  const int D = model->dim();
  return {std::move(model), Eigen::VectorXcd::Zero(D)};
}

StateVector StateVector::basis(ModelPtr model, int index) {
  StateVector v = zero(std::move(model));
  v.coeffs(index) = 1.0;
  return v;
}

double StateVector::norm() const {
  return std::sqrt(std::max(0.0, kernels::dot_hermitian(span(), span()).real()));
}

ModelPtr build_model(const MultiplicityConfig& mult, const InitialConfig& init,
                     const TimeGrid& grid, int N) {
  return ModelSpace::build(mult, init, grid, N);
}

StateVector tensor_with_initial(const ModelPtr& model, const Eigen::VectorXcd& u,
                                const StepFunction& f) {
  if (u.size() != model->m()) throw ModelMismatch("initial vector has wrong dimension");
  if (f.slices() != model->n() || f.channels() != model->d())
    throw ModelMismatch("step function does not match the model grid");
  const double sdt = std::sqrt(model->dt());
  const int n = model->n(), d = model->d();
  // Per-mode amplitude c = f sqrt(dt) and the table c^k / sqrt(k!).
  std::vector<std::vector<cplx>> powers(n * d, std::vector<cplx>(model->N() + 1));
  for (int s = 0; s < n; ++s)
    for (int i = 0; i < d; ++i) {
      const cplx c = f(s, i) * sdt;
      auto& row = powers[model->mode(s, i)];
      row[0] = 1.0;
      for (int k = 1; k <= model->N(); ++k) row[k] = row[k - 1] * c / std::sqrt(double(k));
    }
  StateVector v = StateVector::zero(model);
  for (int st = 0; st < model->dim(); ++st) {
    const cplx uk = u(model->init_of(st));
    if (uk == 0.0) continue;
    cplx c = uk;
    auto occ = model->occ_of(st);
    for (int mo = 0; mo < n * d && c != 0.0; ++mo)
      if (occ[mo] != 0) c *= powers[mo][occ[mo]];
    v.coeffs(st) = c;
  }
  return v;
}

StateVector exponential_vector(const StepFunction& f, const ModelPtr& model) {
  Eigen::VectorXcd e0 = Eigen::VectorXcd::Zero(model->m());
  e0(0) = 1.0;
  return tensor_with_initial(model, e0, f);
}

StateVector truncate_grade(const StateVector& v, int max_total) {
  StateVector out = v;
  for (int s = 0; s < v.model->dim(); ++s)
    if (v.model->total_of(s) > max_total) out.coeffs(s) = 0.0;
  return out;
}

namespace {
void require_same_model(const StateVector& x, const StateVector& y) {
  if (!x.model || !y.model || !x.model->same_as(*y.model))
    throw ModelMismatch("state vectors belong to different models");
}
}  // namespace

cplx pair_bilinear(const StateVector& x, const StateVector& y) {
  require_same_model(x, y);
  return kernels::dot_bilinear(x.span(), y.span());
}

cplx inner(const StateVector& x, const StateVector& y) {
  require_same_model(x, y);
  return kernels::dot_hermitian(x.span(), y.span());
}

StateVector apply_weight(const WeightTriple& p, const StateVector& v) {
  StateVector out = StateVector::zero(v.model);
  if (p.is_zero()) {
    out.coeffs = v.coeffs;
    return out;
  }
  const auto w = v.model->weight_vector(p);
  kernels::scale_diag(w, v.span(), out.span());
  return out;
}

double weighted_norm(const WeightTriple& p, const StateVector& v) {
  if (p.is_zero()) return v.norm();
  const auto w = v.model->weight_vector(p);
  return std::sqrt(kernels::weighted_sqnorm(w, v.span()));
}

double truncation_bound(double x, int N) {
  if (x <= 0.0) return 0.0;
  // term_k = x^k / k!, summed for k > N until the terms stop contributing.
  double term = 1.0;
  for (int k = 1; k <= N; ++k) term *= x / k;
  double tail = 0.0;
  for (int k = N + 1; k < N + 10000; ++k) {
    term *= x / k;
    tail += term;
    if (term < tail * 1e-17 && k > x) break;
  }
  return std::sqrt(tail);
}

double truncation_bound(const StepFunction& f, double dt, int N) {
  return truncation_bound(f.norm_sq(dt), N);
}

Eigen::MatrixXcd split(const StateVector& v, int k) {
  const auto& f = v.model->factorization(k);
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(f.past_dim(), f.future_dim());
  for (int s = 0; s < v.model->dim(); ++s) c(f.past_of(s), f.future_of(s)) = v.coeffs(s);
  return c;
}

StateVector merge(const ModelPtr& model, int k, const Eigen::MatrixXcd& coeffs) {
  const auto& f = model->factorization(k);
  if (coeffs.rows() != f.past_dim() || coeffs.cols() != f.future_dim())
    throw ModelMismatch("coefficient matrix does not match the factorisation");
  StateVector v = StateVector::zero(model);
  for (int s = 0; s < model->dim(); ++s) v.coeffs(s) = coeffs(f.past_of(s), f.future_of(s));
  return v;
}

std::string basis_csv(const ModelSpace& model) {
  std::ostringstream os;
  os << "index,init";
  for (int s = 0; s < model.n(); ++s)
    for (int i = 0; i < model.d(); ++i) os << ",n_" << s << "_" << i;
  os << "\n";
  for (int st = 0; st < model.dim(); ++st) {
    os << st << "," << model.init_of(st);
    for (auto o : model.occ_of(st)) os << "," << static_cast<int>(o);
    os << "\n";
  }
  return os.str();
}

}  // namespace qsc
