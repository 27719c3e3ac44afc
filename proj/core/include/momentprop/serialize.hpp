#pragma once

#include <string>

#include "momentprop/compiler.hpp"

namespace momentprop {

/// Versioned text format for compiled systems. Lossless: coefficients are written
/// as exact fractions and the basis order is preserved.
std::string serialize_system(const MomentStateSystem& system);
MomentStateSystem deserialize_system(const std::string& text);

void save_system(const MomentStateSystem& system, const std::string& path);
MomentStateSystem load_system(const std::string& path);

}  // namespace momentprop
