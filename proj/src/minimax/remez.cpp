#include "hebert/minimax/remez.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <sstream>

#include "hebert/common/error.hpp"

namespace hebert::minimax {

namespace {
constexpr const char* kModule = "minimax-approx";
constexpr long double kPi = std::numbers::pi_v<long double>;

long double clenshaw(std::span<const long double> c, long double t) {
  long double b1 = 0, b2 = 0;
  for (std::size_t k = c.size(); k-- > 1;) {
    const long double b0 = 2 * t * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c[0];
}

struct Fit {
  long double lo, hi;
  long double to_x(long double t) const { return (lo + hi) / 2 + (hi - lo) / 2 * t; }
};

// Solve A x = b in place (partial pivoting).
std::vector<long double> solve(std::vector<std::vector<long double>> a, std::vector<long double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    require(a[col][col] != 0, kModule, ErrorCode::Convergence, "singular Remez system");
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    long double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

struct TPoint {
  long double t;
  long double e;
};

// One extremum per sign run of err(t) on a theta-uniform grid, refined by
// golden-section search.
template <typename Err>
std::vector<TPoint> sign_run_extrema(const Err& err, std::size_t grid) {
  std::vector<long double> ts(grid), es(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    ts[i] = -std::cos(kPi * static_cast<long double>(i) / static_cast<long double>(grid - 1));
    es[i] = err(ts[i]);
  }
  std::vector<TPoint> out;
  std::size_t i = 0;
  while (i < grid) {
    const bool pos = es[i] >= 0;
    std::size_t best = i;
    std::size_t j = i;
    while (j < grid && (es[j] >= 0) == pos) {
      if (std::abs(es[j]) > std::abs(es[best])) best = j;
      ++j;
    }
    long double lo = ts[best == 0 ? 0 : best - 1];
    long double hi = ts[best + 1 >= grid ? grid - 1 : best + 1];
    const long double s = pos ? 1 : -1;
    TPoint p{ts[best], es[best]};
    if (best != 0 && best != grid - 1) {
      const long double g = (std::sqrt(5.0L) - 1) / 2;
      long double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      long double f1 = s * err(x1), f2 = s * err(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 > f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - g * (hi - lo);
          f1 = s * err(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + g * (hi - lo);
          f2 = s * err(x2);
        }
      }
      const long double tm = (lo + hi) / 2;
      const long double em = err(tm);
      if (s * em > s * p.e) p = {tm, em};
    }
    out.push_back(p);
    i = j;
  }
  return out;
}

std::vector<long double> widen(const std::vector<double>& c) { return {c.begin(), c.end()}; }

std::size_t auto_grid(std::size_t degree) { return std::max<std::size_t>(4096, 256 * (degree + 2)); }

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

Target sigmoid_target() {
  return {"sigmoid", [](long double x) { return 1.0L / (1.0L + std::exp(-x)); }};
}

Target identity_target() {
  return {"identity", [](long double x) { return x; }};
}

Target evalmod_target(int k, int r) {
  const long double kk = k + 1;
  const long double div = std::ldexp(1.0L, r);
  return {"evalmod:" + std::to_string(k) + ":" + std::to_string(r),
          [=](long double x) { return std::cos(2 * kPi * (kk * x - 0.25L) / div); }};
}

Target target_by_name(const std::string& name) {
  if (name == "sigmoid") return sigmoid_target();
  if (name == "identity") return identity_target();
  int k = 0, r = 0;
  if (std::sscanf(name.c_str(), "evalmod:%d:%d", &k, &r) == 2) return evalmod_target(k, r);
  fail(kModule, ErrorCode::InvalidArgument, "unknown target " + name);
}

MinimaxPoly remez_fit(const Target& target, double lo, double hi, std::size_t degree, const RemezOptions& opt) {
  require(degree >= 1, kModule, ErrorCode::InvalidArgument, "degree must be >= 1");
  require(lo < hi, kModule, ErrorCode::InvalidArgument, "empty domain");
  const Fit fit{lo, hi};
  const std::size_t m = degree + 2;
  const std::size_t grid = opt.grid ? opt.grid : auto_grid(degree);

  std::vector<long double> ref(m);
  for (std::size_t k = 0; k < m; ++k) ref[k] = -std::cos(kPi * static_cast<long double>(k) / (m - 1));

  std::vector<long double> c(degree + 1, 0);
  long double spread = 1;
  std::vector<TPoint> ext;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    std::vector<std::vector<long double>> a(m, std::vector<long double>(m));
    std::vector<long double> rhs(m);
    for (std::size_t k = 0; k < m; ++k) {
      long double tp = 1, tc = ref[k];
      for (std::size_t j = 0; j <= degree; ++j) {
        a[k][j] = j == 0 ? 1 : (j == 1 ? ref[k] : 0);
        if (j >= 2) {
          const long double tn = 2 * ref[k] * tc - tp;
          tp = tc;
          tc = tn;
          a[k][j] = tn;
        }
      }
      a[k][m - 1] = (k % 2 == 0) ? 1 : -1;
      rhs[k] = target.f(fit.to_x(ref[k]));
    }
    auto sol = solve(a, rhs);
    std::copy(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(degree + 1), c.begin());

    auto err = [&](long double t) { return clenshaw(c, t) - target.f(fit.to_x(t)); };
    ext = sign_run_extrema(err, grid);
    while (ext.size() > m) {
      if (std::abs(ext.front().e) < std::abs(ext.back().e))
        ext.erase(ext.begin());
      else
        ext.pop_back();
    }
    if (ext.size() < m) {
      // polynomial already exact to working precision
      long double mx = 0;
      for (auto& p : ext) mx = std::max(mx, std::abs(p.e));
      if (mx < 1e-15L) break;
      fail(kModule, ErrorCode::Convergence,
           "Remez lost alternation at iteration " + std::to_string(iter) + " with " + std::to_string(ext.size()) +
               " sign runs, max error " + std::to_string(static_cast<double>(mx)));
    }
    long double mx = 0, mn = INFINITY;
    for (std::size_t k = 0; k < m; ++k) {
      ref[k] = ext[k].t;
      mx = std::max(mx, std::abs(ext[k].e));
      mn = std::min(mn, std::abs(ext[k].e));
    }
    spread = mx > 0 ? (mx - mn) / mx : 0;
    // rounding in f bounds how flat the reference can get
    const long double floor = 1e3L * std::numeric_limits<long double>::epsilon();
    if (spread < opt.tolerance || mx - mn < floor || mx < 1e-15L) break;
    if (iter + 1 == opt.max_iterations) {
      std::ostringstream os;
      os << "Remez did not converge after " << opt.max_iterations << " iterations; last |E| profile:";
      for (auto& p : ext) os << ' ' << static_cast<double>(p.e);
      fail(kModule, ErrorCode::Convergence, os.str());
    }
  }

  MinimaxPoly p;
  p.cheb_coeffs.assign(c.begin(), c.end());
  p.domain_lo = lo;
  p.domain_hi = hi;
  p.degree = degree;
  p.target_name = target.name;
  double cert = 0;
  for (const auto& e : error_extrema(p, target, grid)) cert = std::max(cert, std::abs(e.error));
  p.certified_max_error = cert;
  return p;
}

long double eval_cheb_ld(const MinimaxPoly& p, long double x) {
  const long double lo = p.domain_lo, hi = p.domain_hi;
  const long double t = (2 * x - lo - hi) / (hi - lo);
  const auto c = widen(p.cheb_coeffs);
  return clenshaw(c, t);
}

double eval_cheb(const MinimaxPoly& p, double x, bool* out_of_domain) {
  if (out_of_domain) *out_of_domain = x < p.domain_lo || x > p.domain_hi;
  const double t = (2 * x - p.domain_lo - p.domain_hi) / (p.domain_hi - p.domain_lo);
  double b1 = 0, b2 = 0;
  const auto& c = p.cheb_coeffs;
  for (std::size_t k = c.size(); k-- > 1;) {
    const double b0 = 2 * t * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c[0];
}

std::vector<double> eval_cheb(const MinimaxPoly& p, std::span<const double> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = eval_cheb(p, xs[i]);
  return out;
}

double max_error_scan(const MinimaxPoly& p, const Target& target, std::size_t grid_points) {
  require(grid_points >= 2, kModule, ErrorCode::InvalidArgument, "grid needs at least two points");
  const long double lo = p.domain_lo, hi = p.domain_hi;
  const auto c = widen(p.cheb_coeffs);
  long double mx = 0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    const long double t = -std::cos(kPi * static_cast<long double>(i) / static_cast<long double>(grid_points - 1));
    const long double x = (lo + hi) / 2 + (hi - lo) / 2 * t;
    mx = std::max(mx, std::abs(clenshaw(c, t) - target.f(x)));
  }
  return static_cast<double>(mx);
}

std::vector<Extremum> error_extrema(const MinimaxPoly& p, const Target& target, std::size_t grid) {
  const Fit fit{p.domain_lo, p.domain_hi};
  const auto c = widen(p.cheb_coeffs);
  auto err = [&](long double t) { return clenshaw(c, t) - target.f(fit.to_x(t)); };
  std::vector<Extremum> out;
  for (const auto& e : sign_run_extrema(err, grid ? grid : auto_grid(p.degree)))
    out.push_back({static_cast<double>(fit.to_x(e.t)), static_cast<double>(e.e)});
  return out;
}

bool equioscillation_certificate(const MinimaxPoly& p, const Target& target) {
  const auto ext = error_extrema(p, target);
  std::size_t run = 0, best = 0;
  for (std::size_t i = 0; i < ext.size(); ++i) {
    const bool big = std::abs(ext[i].error) >= 0.98 * p.certified_max_error;
    run = big ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best >= p.degree + 2;
}

std::vector<long double> to_monomial(const MinimaxPoly& p) {
  const std::size_t n = p.cheb_coeffs.size();
  // T_k(t) in powers of t
  std::vector<std::vector<long double>> tk(n, std::vector<long double>(n, 0));
  tk[0][0] = 1;
  if (n > 1) tk[1][1] = 1;
  for (std::size_t k = 2; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      tk[k][j] = -tk[k - 2][j];
      if (j > 0) tk[k][j] += 2 * tk[k - 1][j - 1];
    }
  std::vector<long double> in_t(n, 0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) in_t[j] += p.cheb_coeffs[k] * tk[k][j];
  // substitute t = alpha*x + beta
  const long double alpha = 2.0L / (p.domain_hi - p.domain_lo);
  const long double beta = -(static_cast<long double>(p.domain_hi) + p.domain_lo) / (p.domain_hi - p.domain_lo);
  std::vector<long double> out(n, 0), pw(n, 0);
  pw[0] = 1;  // (alpha x + beta)^j
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) out[i] += in_t[j] * pw[i];
    std::vector<long double> next(n, 0);
    for (std::size_t i = 0; i <= j && i + 1 < n; ++i) {
      next[i + 1] += alpha * pw[i];
      next[i] += beta * pw[i];
    }
    if (j + 1 < n) pw = next;
  }
  return out;
}

std::string to_text(const MinimaxPoly& p) {
  std::ostringstream os;
  os << "hebert-minimax v1\n";
  os << "target " << p.target_name << "\n";
  os << "domain " << hexfloat(p.domain_lo) << ' ' << hexfloat(p.domain_hi) << "\n";
  os << "degree " << p.degree << "\n";
  os << "certified_max_error " << hexfloat(p.certified_max_error) << "\n";
  os << "coeffs";
  for (double c : p.cheb_coeffs) os << ' ' << hexfloat(c);
  os << "\n";
  return os.str();
}

MinimaxPoly from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "hebert-minimax v1", kModule, ErrorCode::Format,
          "missing minimax header");
  MinimaxPoly p;
  auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key, a, b;
    if (!(ls >> key)) continue;
    if (key == "target") {
      ls >> p.target_name;
    } else if (key == "domain") {
      ls >> a >> b;
      p.domain_lo = num(a);
      p.domain_hi = num(b);
    } else if (key == "degree") {
      ls >> p.degree;
    } else if (key == "certified_max_error") {
      ls >> a;
      p.certified_max_error = num(a);
    } else if (key == "coeffs") {
      while (ls >> a) p.cheb_coeffs.push_back(num(a));
    }
  }
  require(p.cheb_coeffs.size() == p.degree + 1, kModule, ErrorCode::Format, "coefficient count does not match degree");
  return p;
}

}  // namespace hebert::minimax
