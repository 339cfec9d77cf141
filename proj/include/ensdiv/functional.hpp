#ifndef ENSDIV_FUNCTIONAL_HPP
#define ENSDIV_FUNCTIONAL_HPP

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "ensdiv/error.hpp"

namespace ensdiv {

enum class FunctionalKind { kl_forward, kl_reverse, renyi_alpha, chernoff_alpha, hellinger };

// The smooth g in G(f1, f2) = E_{f2}[ g(f1/f2) ].
//   kl_forward      g(L) = L ln L       -> KL(f1 || f2)
//   kl_reverse      g(L) = -ln L        -> KL(f2 || f1)
//   renyi_alpha     g(L) = L^alpha
//   chernoff_alpha  g(L) = L^alpha      -> c_alpha(f1 || f2)
//   hellinger       g(L) = L^(1/2)
// Non-smooth choices such as total variation are rejected by parse().
class Functional {
 public:
  static Functional kl_forward() { return Functional(FunctionalKind::kl_forward, std::nullopt); }
  static Functional kl_reverse() { return Functional(FunctionalKind::kl_reverse, std::nullopt); }
  static Functional renyi(double alpha) { return Functional(FunctionalKind::renyi_alpha, checked(alpha)); }
  static Functional chernoff(double alpha) { return Functional(FunctionalKind::chernoff_alpha, checked(alpha)); }
  static Functional hellinger() { return Functional(FunctionalKind::hellinger, 0.5); }

  /// Accepts "kl_forward", "kl" (alias), "kl_reverse", "hellinger",
  /// "renyi_alpha" / "chernoff_alpha" with `alpha` supplied.
  static Functional parse(std::string_view name, std::optional<double> alpha = std::nullopt) {
    if (name == "kl_forward" || name == "kl") return kl_forward();
    if (name == "kl_reverse") return kl_reverse();
    if (name == "hellinger") return hellinger();
    if (name == "renyi_alpha" || name == "chernoff_alpha") {
      if (!alpha) throw Error(ErrorKind::parameter, std::string(name) + " requires alpha");
      return name == "renyi_alpha" ? renyi(*alpha) : chernoff(*alpha);
    }
    if (name == "total_variation" || name == "tv")
      throw Error(ErrorKind::parameter, "total variation is not smooth and cannot be estimated by this plug-in scheme");
    throw Error(ErrorKind::parameter, "unknown functional '" + std::string(name) + "'");
  }

  FunctionalKind kind() const noexcept { return kind_; }
  std::optional<double> alpha() const noexcept { return alpha_; }

  std::string name() const {
    switch (kind_) {
      case FunctionalKind::kl_forward: return "kl_forward";
      case FunctionalKind::kl_reverse: return "kl_reverse";
      case FunctionalKind::renyi_alpha: return "renyi_alpha";
      case FunctionalKind::chernoff_alpha: return "chernoff_alpha";
      case FunctionalKind::hellinger: return "hellinger";
    }
    return "unknown";
  }

  double operator()(double ratio) const {
    if (!(ratio > 0.0) || !std::isfinite(ratio))
      throw Error(ErrorKind::domain, "likelihood ratio must be positive and finite, got " + std::to_string(ratio));
    switch (kind_) {
      case FunctionalKind::kl_forward: return ratio * std::log(ratio);
      case FunctionalKind::kl_reverse: return -std::log(ratio);
      case FunctionalKind::renyi_alpha:
      case FunctionalKind::chernoff_alpha:
      case FunctionalKind::hellinger: return std::pow(ratio, *alpha_);
    }
    return 0.0;
  }

 private:
  Functional(FunctionalKind kind, std::optional<double> alpha) : kind_(kind), alpha_(alpha) {}

  static double checked(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw Error(ErrorKind::parameter, "alpha must lie in (0, 1), got " + std::to_string(alpha));
    return alpha;
  }

  FunctionalKind kind_;
  std::optional<double> alpha_;
};

inline double eval_functional(const Functional& f, double ratio) { return f(ratio); }

}  // namespace ensdiv

#endif  // ENSDIV_FUNCTIONAL_HPP
