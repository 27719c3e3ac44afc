#pragma once

#include <cmath>
#include <random>
#include <type_traits>
#include <variant>

#include "momentprop/distmoments.hpp"

namespace momentprop {

template <class Rng>
double sample(const Distribution& dist, Rng& rng) {
  return std::visit(
      [&rng](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Degenerate>) {
          return d.value;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return std::normal_distribution<double>(d.mean, std::sqrt(d.variance))(rng);
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return std::uniform_real_distribution<double>(d.lower, d.upper)(rng);
        } else {
          const double x = std::gamma_distribution<double>(d.a, 1.0)(rng);
          const double y = std::gamma_distribution<double>(d.b, 1.0)(rng);
          return x / (x + y);
        }
      },
      dist.kind());
}

}  // namespace momentprop
