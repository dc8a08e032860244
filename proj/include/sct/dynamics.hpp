#pragma once

// Circle maps f: T -> T and coupling kernels h: T x T -> R with analytic
// derivatives. Every map/kernel used by the bundled scenarios lives here.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sct/circle.hpp"

namespace sct {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

using ParamMap = std::map<std::string, double>;

class MapSpec {
 public:
  using Fn = std::function<double(double)>;

  /// `lift` may return any real; eval reduces it mod 1. `seams` lists the
  /// points where the derivative is discontinuous.
  MapSpec(std::string name, ParamMap params, Fn lift, Fn deriv, Fn deriv2 = {},
          std::vector<double> seams = {})
      : name_(std::move(name)),
        params_(std::move(params)),
        lift_(std::move(lift)),
        deriv_(std::move(deriv)),
        deriv2_(std::move(deriv2)),
        seams_(std::move(seams)) {}

  const std::string& name() const noexcept { return name_; }
  const ParamMap& params() const noexcept { return params_; }
  const std::vector<double>& seams() const noexcept { return seams_; }
  bool has_deriv2() const noexcept { return static_cast<bool>(deriv2_); }

  double eval(double x) const { return wrap_unit(lift_(x)); }
  CirclePoint eval(CirclePoint x) const { return CirclePoint(lift_(x.value())); }
  double deriv(double x) const { return deriv_(x); }
  double deriv2(double x) const {
    if (!deriv2_) throw std::logic_error("map " + name_ + " has no second derivative");
    return deriv2_(x);
  }

 private:
  std::string name_;
  ParamMap params_;
  Fn lift_;
  Fn deriv_;
  Fn deriv2_;
  std::vector<double> seams_;
};

namespace maps {

/// f(x) = 2x mod 1.
inline MapSpec doubling() {
  return MapSpec(
      "doubling", {}, [](double x) { return 2.0 * x; }, [](double) { return 2.0; },
      [](double) { return 0.0; });
}

/// f(x) = x + omega mod 1.
inline MapSpec rotation(double omega) {
  return MapSpec(
      "rotation", {{"omega", omega}}, [omega](double x) { return x + omega; },
      [](double) { return 1.0; }, [](double) { return 0.0; });
}

/// f(x) = x + omega - (K / 2pi) sin(2 pi x) mod 1.
inline MapSpec sine_circle(double omega, double k) {
  return MapSpec(
      "sine_circle", {{"omega", omega}, {"K", k}},
      [=](double x) { return x + omega - k / two_pi * std::sin(two_pi * x); },
      [=](double x) { return 1.0 - k * std::cos(two_pi * x); },
      [=](double x) { return k * two_pi * std::sin(two_pi * x); });
}

/// Logistic-like branch 4x(1-2x) on [0,1/2], (4x-3)^2 on (1/2,1). The right
/// branch has the repelling fixed point 9/16 with slope -6.
inline MapSpec chimera2_map() {
  auto lift = [](double x) {
    x = wrap_unit(x);
    if (x <= 0.5) return 4.0 * x * (1.0 - 2.0 * x);
    double s = 4.0 * x - 3.0;
    return s * s;
  };
  auto deriv = [](double x) {
    x = wrap_unit(x);
    return x <= 0.5 ? 4.0 - 16.0 * x : 8.0 * (4.0 * x - 3.0);
  };
  auto deriv2 = [](double x) { return wrap_unit(x) <= 0.5 ? -16.0 : 32.0; };
  return MapSpec("chimera2_map", {}, lift, deriv, deriv2, {0.0, 0.5});
}

inline constexpr double chimera2_fixed_point = 9.0 / 16.0;

}  // namespace maps

/// One term phi(x) psi(y) of a separable decomposition (strength excluded).
struct SeparableTerm {
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  std::function<double(double)> psi;
};

enum class KernelStructure { general, separable, diffusive };

inline const char* to_string(KernelStructure s) {
  switch (s) {
    case KernelStructure::general: return "general";
    case KernelStructure::separable: return "separable";
    case KernelStructure::diffusive: return "diffusive";
  }
  return "?";
}

/// Interaction h(x, y) = strength * shape(x, y): the influence felt at x from
/// a unit at y.
///
/// `terms`, when non-empty, is an exact low-rank decomposition
/// shape(x,y) = sum_r phi_r(x) psi_r(y). It is what the O(n) particle update
/// and the frozen mean-field maps use; kernels of any structure may carry one.
/// For diffusive kernels `profile` is phi with shape(x,y) = profile(y - x).
class CouplingKernel {
 public:
  using Fn2 = std::function<double(double, double)>;
  using Fn1 = std::function<double(double)>;

  CouplingKernel(std::string name, double strength, ParamMap params,
                 KernelStructure structure, Fn2 shape, Fn2 shape_dx,
                 std::vector<SeparableTerm> terms = {}, Fn1 profile = {},
                 double profile_slope0 = 0.0)
      : name_(std::move(name)),
        strength_(strength),
        params_(std::move(params)),
        structure_(structure),
        shape_(std::move(shape)),
        shape_dx_(std::move(shape_dx)),
        terms_(std::move(terms)),
        profile_(std::move(profile)),
        profile_slope0_(profile_slope0) {}

  const std::string& name() const noexcept { return name_; }
  double strength() const noexcept { return strength_; }
  const ParamMap& params() const noexcept { return params_; }
  KernelStructure structure() const noexcept { return structure_; }
  const std::vector<SeparableTerm>& terms() const noexcept { return terms_; }
  bool has_terms() const noexcept { return !terms_.empty(); }
  bool is_zero() const noexcept { return name_ == "zero" || strength_ == 0.0; }

  double eval(double x, double y) const { return strength_ * shape_(x, y); }
  double eval(CirclePoint x, CirclePoint y) const { return eval(x.value(), y.value()); }
  /// d/dx h(x, y).
  double dx(double x, double y) const { return strength_ * shape_dx_(x, y); }

  /// phi(d) of a diffusive kernel, strength included.
  double diffusive_profile(double d) const {
    require_diffusive();
    return strength_ * profile_(d);
  }
  /// phi'(0) of a diffusive kernel, strength included.
  double diffusive_slope() const {
    require_diffusive();
    return strength_ * profile_slope0_;
  }

  /// Same kernel with the strength multiplied by `factor`.
  CouplingKernel scaled(double factor) const {
    CouplingKernel k = *this;
    k.strength_ *= factor;
    return k;
  }

 private:
  void require_diffusive() const {
    if (structure_ != KernelStructure::diffusive) {
      throw std::logic_error("kernel " + name_ + " is not diffusive");
    }
  }

  std::string name_;
  double strength_;
  ParamMap params_;
  KernelStructure structure_;
  Fn2 shape_;
  Fn2 shape_dx_;
  std::vector<SeparableTerm> terms_;
  Fn1 profile_;
  double profile_slope0_;
};

namespace kernels {

inline CouplingKernel zero() {
  return CouplingKernel(
      "zero", 0.0, {}, KernelStructure::diffusive, [](double, double) { return 0.0; },
      [](double, double) { return 0.0; }, {}, [](double) { return 0.0; }, 0.0);
}

/// h(x,y) = -strength/(10 pi) sin(6 pi x) cos(6 pi y). Vanishes for x in
/// {0, 1/3, 2/3}.
inline CouplingKernel chimera1(double strength = 1.0) {
  constexpr double c = -1.0 / (10.0 * std::numbers::pi);
  constexpr double w = 3.0 * two_pi;
  SeparableTerm term{[](double x) { return c * std::sin(w * x); },
                     [](double x) { return c * w * std::cos(w * x); },
                     [](double y) { return std::cos(w * y); }};
  return CouplingKernel(
      "chimera1", strength, {}, KernelStructure::separable,
      [](double x, double y) { return c * std::sin(w * x) * std::cos(w * y); },
      [](double x, double y) { return c * w * std::cos(w * x) * std::cos(w * y); },
      {term});
}

namespace detail {

// Smooth bump exp(1 - 1/(1 - s^2)) on |s| < 1, equal to 1 at s = 0.
inline double bump(double s) {
  if (std::fabs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

}  // namespace detail

/// v(x) = -(x - x*) bump((x - x*)/w): zero outside (x*-w, x*+w), v'(x*) = -1.
inline double chimera2_v(double x, double center, double width) {
  double d = wrap_signed(x - center);
  return -d * detail::bump(d / width);
}

inline double chimera2_dv(double x, double center, double width) {
  double d = wrap_signed(x - center);
  double s = d / width;
  if (std::fabs(s) >= 1.0) return 0.0;
  double q = 1.0 - s * s;
  return -detail::bump(s) * (1.0 - 2.0 * s * s / (q * q));
}

/// u(y) = max(0, sin(2 pi y))^2: positive inside [0,1/2], zero on [1/2,1].
inline double chimera2_u(double y) {
  double s = std::max(0.0, std::sin(two_pi * y));
  return s * s;
}

inline constexpr double chimera2_default_width = 1.0 / 16.0;

/// h(x,y) = strength v(x) u(y) with v centred on the repelling fixed point.
inline CouplingKernel chimera2(double strength, double center = maps::chimera2_fixed_point,
                               double width = chimera2_default_width) {
  SeparableTerm term{[=](double x) { return chimera2_v(x, center, width); },
                     [=](double x) { return chimera2_dv(x, center, width); },
                     [](double y) { return chimera2_u(y); }};
  return CouplingKernel(
      "chimera2", strength, {{"center", center}, {"width", width}},
      KernelStructure::separable,
      [=](double x, double y) { return chimera2_v(x, center, width) * chimera2_u(y); },
      [=](double x, double y) { return chimera2_dv(x, center, width) * chimera2_u(y); },
      {term});
}

/// h(x,y) = strength * sin(2 pi p x)/(2 pi p) * (c + cos(2 pi q y)).
/// With p = q = 1, c = 2 this is the drive of the driven-synchronization
/// example: phi(0) = 0, phi'(0) = 1, Lebesgue mean of psi = 2.
inline CouplingKernel sine_product(double strength, double p = 1.0, double c = 2.0,
                                   double q = 1.0) {
  const double wp = two_pi * p;
  const double wq = two_pi * q;
  SeparableTerm term{[=](double x) { return std::sin(wp * x) / wp; },
                     [=](double x) { return std::cos(wp * x); },
                     [=](double y) { return c + std::cos(wq * y); }};
  return CouplingKernel(
      "sine_product", strength, {{"p", p}, {"c", c}, {"q", q}}, KernelStructure::separable,
      [=](double x, double y) { return std::sin(wp * x) / wp * (c + std::cos(wq * y)); },
      [=](double x, double y) { return std::cos(wp * x) * (c + std::cos(wq * y)); }, {term});
}

/// h(x,y) = strength * sin(2 pi (y - x)) / (2 pi); diffusive with phi'(0) =
/// strength. Carries its exact rank-2 decomposition.
inline CouplingKernel diffusive_sine(double strength) {
  std::vector<SeparableTerm> terms{
      {[](double x) { return std::cos(two_pi * x) / two_pi; },
       [](double x) { return -std::sin(two_pi * x); },
       [](double y) { return std::sin(two_pi * y); }},
      {[](double x) { return -std::sin(two_pi * x) / two_pi; },
       [](double x) { return -std::cos(two_pi * x); },
       [](double y) { return std::cos(two_pi * y); }}};
  return CouplingKernel(
      "diffusive_sine", strength, {}, KernelStructure::diffusive,
      [](double x, double y) { return std::sin(two_pi * (y - x)) / two_pi; },
      [](double x, double y) { return -std::cos(two_pi * (y - x)); }, std::move(terms),
      [](double d) { return std::sin(two_pi * d) / two_pi; }, 1.0);
}

/// h(x,y) = strength * exp(kappa (cos(2 pi d) - 1)) sin(2 pi d) / (2 pi),
/// d = y - x. Diffusive with phi'(0) = strength; not finite-rank.
inline CouplingKernel von_mises_diffusive(double strength, double kappa) {
  auto profile = [kappa](double d) {
    return std::exp(kappa * (std::cos(two_pi * d) - 1.0)) * std::sin(two_pi * d) / two_pi;
  };
  auto dprofile = [kappa](double d) {
    double c = std::cos(two_pi * d);
    double s = std::sin(two_pi * d);
    return std::exp(kappa * (c - 1.0)) * (c - kappa * s * s);
  };
  return CouplingKernel(
      "von_mises_diffusive", strength, {{"kappa", kappa}}, KernelStructure::diffusive,
      [=](double x, double y) { return profile(y - x); },
      [=](double x, double y) { return -dprofile(y - x); }, {}, profile, 1.0);
}

/// h(x,y) = strength * sin(2 pi (y - x) + beta) / (2 pi). Nonzero on the
/// diagonal when beta != 0, so it moves fixed points; treated as general.
inline CouplingKernel phase_shift(double strength, double beta) {
  return CouplingKernel(
      "phase_shift", strength, {{"beta", beta}}, KernelStructure::general,
      [=](double x, double y) { return std::sin(two_pi * (y - x) + beta) / two_pi; },
      [=](double x, double y) { return -std::cos(two_pi * (y - x) + beta); });
}

}  // namespace kernels

namespace detail {

inline double param(const ParamMap& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument("missing parameter '" + key + "'");
  return it->second;
}

inline double param_or(const ParamMap& p, const std::string& key, double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

}  // namespace detail

/// Resolve a map by identifier. Unknown names or missing parameters throw
/// std::invalid_argument.
inline MapSpec make_map(const std::string& name, const ParamMap& params) {
  using detail::param;
  if (name == "doubling") return maps::doubling();
  if (name == "rotation") return maps::rotation(param(params, "omega"));
  if (name == "sine_circle") return maps::sine_circle(param(params, "omega"), param(params, "K"));
  if (name == "chimera2_map") return maps::chimera2_map();
  throw std::invalid_argument("unknown map '" + name + "'");
}

/// Resolve a kernel by identifier; "strength" defaults to 1.
inline CouplingKernel make_kernel(const std::string& name, const ParamMap& params) {
  using detail::param;
  using detail::param_or;
  const double strength = param_or(params, "strength", 1.0);
  if (name == "zero") return kernels::zero();
  if (name == "chimera1") return kernels::chimera1(strength);
  if (name == "chimera2") {
    return kernels::chimera2(strength, param_or(params, "center", maps::chimera2_fixed_point),
                             param_or(params, "width", kernels::chimera2_default_width));
  }
  if (name == "sine_product") {
    return kernels::sine_product(strength, param_or(params, "p", 1.0),
                                 param_or(params, "c", 2.0), param_or(params, "q", 1.0));
  }
  if (name == "diffusive_sine") return kernels::diffusive_sine(strength);
  if (name == "von_mises_diffusive") {
    return kernels::von_mises_diffusive(strength, param(params, "kappa"));
  }
  if (name == "phase_shift") return kernels::phase_shift(strength, param(params, "beta"));
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

}  // namespace sct
