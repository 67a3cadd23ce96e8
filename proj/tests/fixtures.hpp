#pragma once

#include <brockwell/mixed_distribution.hpp>

namespace fixtures {

using brockwell::mixed_distribution;

inline mixed_distribution bern() { return {{{0.0, 0.3}, {1.0, 0.7}}, {}}; }
inline mixed_distribution uni() { return mixed_distribution::uniform(); }
inline mixed_distribution mix() { return {{{0.5, 0.5}}, {{0.0, 1.0, 0.5}}}; }
inline mixed_distribution gap() { return {{}, {{0.0, 1.0, 0.5}, {2.0, 3.0, 0.5}}}; }
inline mixed_distribution two_atom_h() { return {{{0.5, 0.5}, {1.0, 0.5}}, {}}; }

} // namespace fixtures
