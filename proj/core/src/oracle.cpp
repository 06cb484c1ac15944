#include "starris/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace starris {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Saturating multiply so guard checks cannot overflow.
std::uint64_t Mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

std::uint64_t Pow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) r = Mul(r, base);
  return r;
}

// Allocations i_1..i_K >= 0 with sum <= n: C(n + K, K).
std::uint64_t Simplex(int n, int K) {
  long double r = 1.0L;
  for (int i = 1; i <= K; ++i) r = r * (n + i) / i;
  return r > 1.8e19L ? UINT64_MAX : static_cast<std::uint64_t>(std::llround(r));
}

// One coefficient configuration in mixed-radix form:
// [beta index per element (ES only)] [phase index per free element, side t] [side r].
struct CoefficientGrid {
  int N = 0;
  int levels = 0;   // beta levels, ES only
  int phases = 0;
  bool coupled = true;
  std::array<std::vector<int>, 2> free;  // elements whose phase is scanned
  ElementLayout layout;
  std::vector<int> radix;

  CoefficientGrid(const SystemInstance& inst, const GridSpec& g, RisMode mode)
      : N(inst.dims.num_ris_elements), levels(g.BetaLevels()), phases(g.phase_points),
        coupled(mode == RisMode::kStarEs), layout(MakeLayout(mode, inst.dims.num_ris_elements)) {
    if (coupled) radix.assign(N, levels);
    for (int c = 0; c < 2; ++c) {
      const auto& e = layout.elements[c];
      for (std::size_t i = 1; i < e.size(); ++i) {
        free[c].push_back(e[i]);
        radix.push_back(phases);
      }
    }
  }

  std::uint64_t Count() const {
    std::uint64_t n = 1;
    for (int r : radix) n = Mul(n, static_cast<std::uint64_t>(r));
    return n;
  }

  // Levels and phases as exact ratios, so refined grids reproduce old points bit for bit.
  StarCoefficients Make(const std::vector<int>& digit) const {
    StarCoefficients phi;
    phi.beta_t = RVector::Zero(N);
    phi.beta_r = RVector::Zero(N);
    phi.theta_t = RVector::Zero(N);
    phi.theta_r = RVector::Zero(N);
    std::size_t d = 0;
    if (coupled) {
      for (int n = 0; n < N; ++n) {
        phi.beta_t[n] = static_cast<double>(digit[d]) / (levels - 1);
        phi.beta_r[n] = 1.0 - phi.beta_t[n];
        ++d;
      }
    } else {
      for (int n : layout.elements[0]) phi.beta_t[n] = 1.0;
      for (int n : layout.elements[1]) phi.beta_r[n] = 1.0;
    }
    for (int c = 0; c < 2; ++c) {
      RVector& theta = c == 0 ? phi.theta_t : phi.theta_r;
      for (int n : free[c]) theta[n] = kTau * digit[d++] / phases;
    }
    return phi;
  }
};

bool Next(std::vector<int>& digit, const std::vector<int>& radix) {
  // Last digit varies fastest, so enumeration is lexicographic.
  for (int i = static_cast<int>(digit.size()) - 1; i >= 0; --i) {
    if (++digit[i] < radix[i]) return true;
    digit[i] = 0;
  }
  return false;
}

// Plain-loop effective channel, independent of the library's matrix code.
std::vector<std::vector<Complex>> Channels(const SystemInstance& inst, const StarCoefficients& phi) {
  const int K = inst.dims.num_users;
  const int M = inst.dims.num_bs_antennas;
  const int N = inst.dims.num_ris_elements;
  std::vector<std::vector<Complex>> h(K, std::vector<Complex>(M, Complex(0.0, 0.0)));
  for (int k = 0; k < K; ++k) {
    const bool t = inst.channels.sides[k] == UserSide::kTransmission;
    for (int n = 0; n < N; ++n) {
      const double beta = t ? phi.beta_t[n] : phi.beta_r[n];
      if (beta == 0.0) continue;
      const double theta = t ? phi.theta_t[n] : phi.theta_r[n];
      const Complex c = inst.channels.g[k][n] * std::polar(std::sqrt(beta), theta);
      for (int m = 0; m < M; ++m) h[k][m] += c * inst.channels.H(n, m);
    }
  }
  return h;
}

struct Evaluator {
  int K;
  double noise, p_static, gamma, step;

  // gains[k][j] = |h_k d_j|^2 for unit directions d_j; counts on the power lattice.
  // Returns min-EE, or -1 when the rate threshold fails.
  double MinEe(const std::vector<double>& gains, const std::vector<int>& count) const {
    double worst = INFINITY;
    for (int k = 0; k < K; ++k) {
      double signal = 0.0, interference = 0.0;
      for (int j = 0; j < K; ++j) {
        const double p = gains[k * K + j] * (count[j] * step);
        if (j == k) signal = p;
        else interference += p;
      }
      const double sinr = signal / (interference + noise);
      if (gamma > 0.0 && sinr < gamma * (1.0 - 1e-12)) return -1.0;
      const double ee = std::log2(1.0 + sinr) / (count[k] * step + p_static);
      worst = std::min(worst, ee);
    }
    return worst;
  }
};

bool NextAllocation(std::vector<int>& count, int total) {
  // Lexicographic over i_1..i_K with sum <= total, last index fastest.
  const int K = static_cast<int>(count.size());
  int sum = 0;
  for (int c : count) sum += c;
  for (int i = K - 1; i >= 0; --i) {
    if (sum < total) {
      ++count[i];
      return true;
    }
    sum -= count[i];
    count[i] = 0;
  }
  return false;
}

std::vector<std::vector<Complex>> SphereDirections(const GridSpec& g, int M) {
  std::vector<std::vector<Complex>> dirs;
  if (M == 1) {
    dirs.push_back({Complex(1.0, 0.0)});
    return dirs;
  }
  for (int a = 0; a < g.sphere_points; ++a) {
    const double polar = 0.5 * std::numbers::pi * a / (g.sphere_points - 1);
    // Poles carry no relative phase; list them once.
    const int phases = (a == 0 || a == g.sphere_points - 1) ? 1 : g.phase_points;
    for (int p = 0; p < phases; ++p)
      dirs.push_back({Complex(std::cos(polar), 0.0), std::polar(std::sin(polar), kTau * p / g.phase_points)});
  }
  return dirs;
}

}  // namespace

void GridSpec::Validate() const {
  if (phase_points < 2 || power_points < 2) throw ContractError("GridSpec: grids need >= 2 points");
  if (!(beta_step > 0.0) || beta_step > 1.0) throw ContractError("GridSpec: beta step outside (0, 1]");
  const double inv = 1.0 / beta_step;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv) {
    throw ContractError("GridSpec: 1 / beta_step must be an integer");
  }
  if (directions == BeamDirections::kSphere && sphere_points < 2) {
    throw ContractError("GridSpec: sphere grid needs >= 2 polar points");
  }
}

int GridSpec::BetaLevels() const { return static_cast<int>(std::lround(1.0 / beta_step)) + 1; }

GridSpec GridSpec::Refined() const {
  GridSpec g = *this;
  g.phase_points *= 2;
  g.beta_step *= 0.5;
  g.power_points = 2 * power_points - 1;
  g.sphere_points = 2 * sphere_points - 1;
  return g;
}

GridCounts CountGrid(const SystemInstance& instance, const GridSpec& grid, RisMode mode) {
  grid.Validate();
  const int K = instance.dims.num_users;
  GridCounts c;
  c.coefficients = CoefficientGrid(instance, grid, mode).Count();
  c.powers = Simplex(grid.power_points - 1, K);
  if (grid.directions == BeamDirections::kSphere)
    c.directions = Pow(SphereDirections(grid, instance.dims.num_bs_antennas).size(), K);
  return c;
}

OracleResult OracleGridSearch(const SystemInstance& instance, const GridSpec& grid, RisMode mode) {
  instance.Validate();
  grid.Validate();
  const int K = instance.dims.num_users;
  const int M = instance.dims.num_bs_antennas;
  if (grid.directions == BeamDirections::kSphere && M > 2) {
    throw ContractError("OracleGridSearch: sphere directions need M <= 2");
  }
  const GridCounts counts = CountGrid(instance, grid, mode);
  const bool scalar = M == 1;
  // With one antenna the gain vector fully describes a configuration, so the
  // coefficient and power grids are searched as a product after pruning and
  // only each factor is guarded. Otherwise the whole product is.
  if (scalar) {
    if (counts.coefficients > kOracleGuard || counts.powers > kOracleGuard)
      throw ContractError("OracleGridSearch: grid exceeds the point guard");
  } else if (Mul(Mul(counts.coefficients, counts.powers), counts.directions) > kOracleGuard) {
    throw ContractError("OracleGridSearch: grid exceeds the point guard");
  }

  const CoefficientGrid cg(instance, grid, mode);
  const Evaluator ev{K, instance.power.noise_power_watts, instance.power.static_power_watts,
                     instance.power.SinrThreshold(),
                     instance.power.p_max_watts / (grid.power_points - 1)};
  const int total = grid.power_points - 1;

  OracleResult best;
  best.min_ee = -INFINITY;
  std::vector<int> best_digit, best_count;
  std::vector<int> best_dirs;

  std::vector<int> digit(cg.radix.size(), 0);
  auto scan_powers = [&](const std::vector<double>& gains, const std::vector<int>& digits,
                         const std::vector<int>& dir_index) {
    std::vector<int> count(K, 0);
    do {
      ++best.evaluated;
      const double v = ev.MinEe(gains, count);
      if (v >= 0.0 && v > best.min_ee) {
        best.min_ee = v;
        best.feasible = true;
        best_digit = digits;
        best_count = count;
        best_dirs = dir_index;
      }
    } while (NextAllocation(count, total));
  };

  if (scalar) {
    // Gains a_k = |h_k|^2; more gain never hurts any user, so only the
    // Pareto front needs the power scan.
    struct Cand {
      std::vector<double> a;
      std::vector<int> digit;
    };
    std::vector<Cand> cands;
    do {
      const auto h = Channels(instance, cg.Make(digit));
      Cand c{std::vector<double>(K), digit};
      for (int k = 0; k < K; ++k) c.a[k] = std::norm(h[k][0]);
      cands.push_back(std::move(c));
    } while (Next(digit, cg.radix));
    // Stable sort keeps earlier grid points first among equal gain vectors.
    std::vector<std::size_t> order(cands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return cands[x].a > cands[y].a; });
    std::vector<std::size_t> front;
    for (std::size_t i : order) {
      bool dominated = false;
      for (std::size_t f : front) {
        bool ge = true;
        for (int k = 0; k < K && ge; ++k) ge = cands[f].a[k] >= cands[i].a[k];
        if (ge) {
          dominated = true;
          break;
        }
      }
      if (!dominated) front.push_back(i);
    }
    std::sort(front.begin(), front.end());  // grid order for the tie rule
    for (std::size_t f : front) {
      std::vector<double> gains(K * K);
      for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j) gains[k * K + j] = cands[f].a[k];
      scan_powers(gains, cands[f].digit, {});
    }
  } else {
    const auto sphere = SphereDirections(grid, M);
    do {
      const StarCoefficients phi = cg.Make(digit);
      const auto h = Channels(instance, phi);
      if (grid.directions == BeamDirections::kMatchedFilter) {
        std::vector<double> gains(K * K);
        for (int j = 0; j < K; ++j) {
          double norm = 0.0;
          for (int m = 0; m < M; ++m) norm += std::norm(h[j][m]);
          norm = std::sqrt(norm);
          for (int k = 0; k < K; ++k) {
            Complex s(0.0, 0.0);
            for (int m = 0; m < M; ++m) {
              const Complex d = norm > 0.0 ? std::conj(h[j][m]) / norm : Complex(m == 0 ? 1.0 : 0.0, 0.0);
              s += h[k][m] * d;
            }
            gains[k * K + j] = std::norm(s);
          }
        }
        scan_powers(gains, digit, {});
      } else {
        std::vector<int> dir(K, 0);
        const std::vector<int> dir_radix(K, static_cast<int>(sphere.size()));
        do {
          std::vector<double> gains(K * K);
          for (int k = 0; k < K; ++k)
            for (int j = 0; j < K; ++j) {
              Complex s(0.0, 0.0);
              for (int m = 0; m < M; ++m) s += h[k][m] * sphere[dir[j]][m];
              gains[k * K + j] = std::norm(s);
            }
          scan_powers(gains, digit, dir);
        } while (Next(dir, dir_radix));
      }
    } while (Next(digit, cg.radix));
  }

  if (!best.feasible) {
    best.min_ee = 0.0;
    return best;
  }
  best.phi = cg.Make(best_digit);
  const auto h = Channels(instance, best.phi);
  const auto sphere = SphereDirections(grid, std::min(M, 2));
  for (int k = 0; k < K; ++k) {
    CVector v = CVector::Zero(M);
    const double p = best_count[k] * ev.step;
    if (grid.directions == BeamDirections::kSphere) {
      for (int m = 0; m < M; ++m) v[m] = sphere[best_dirs[k]][m];
    } else {
      double norm = 0.0;
      for (int m = 0; m < M; ++m) norm += std::norm(h[k][m]);
      norm = std::sqrt(norm);
      for (int m = 0; m < M; ++m)
        v[m] = norm > 0.0 ? std::conj(h[k][m]) / norm : Complex(m == 0 ? 1.0 : 0.0, 0.0);
    }
    best.beamformers.v.push_back(std::sqrt(p) * v);
  }
  return best;
}

ProjectedPoint ProjectToGrid(const SystemInstance& instance, const GridSpec& grid,
                             const StarCoefficients& phi, const BeamformerSet& beamformers,
                             RisMode mode) {
  grid.Validate();
  const int N = instance.dims.num_ris_elements;
  const ElementLayout layout = MakeLayout(mode, N);
  ProjectedPoint out;
  out.phi = phi;
  const int L = grid.BetaLevels() - 1;
  for (int n = 0; n < N; ++n) {
    if (mode == RisMode::kStarEs) {
      const double b = std::clamp(std::round(phi.beta_t[n] * L), 0.0, static_cast<double>(L));
      out.phi.beta_t[n] = b / L;
      out.phi.beta_r[n] = 1.0 - out.phi.beta_t[n];
    }
  }
  for (int c = 0; c < 2; ++c) {
    RVector& theta = c == 0 ? out.phi.theta_t : out.phi.theta_r;
    const auto& e = layout.elements[c];
    if (e.empty()) continue;
    const double ref = theta[e[0]];
    for (int n : e) {
      const double rel = WrapPhase(theta[n] - ref);
      const long q = std::lround(rel / kTau * grid.phase_points) % grid.phase_points;
      theta[n] = kTau * q / grid.phase_points;
    }
  }
  const double step = instance.power.p_max_watts / (grid.power_points - 1);
  for (const CVector& v : beamformers.v) {
    const double p = v.squaredNorm();
    const double count = std::floor(p / step + 1e-9);
    out.beamformers.v.push_back(p > 0.0 ? CVector(v * std::sqrt(count * step / p)) : v);
  }
  return out;
}

}  // namespace starris
