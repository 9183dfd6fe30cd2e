#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clab/qform.hpp"

namespace clab {

struct Preset {
  std::string name;
  std::string description;
  QuadraticForm form;
  std::vector<ExactMatrix> generators;
};

// x_1^2 + ... + x_{n+1}^2 - x_{n+2}^2 over Q, or with -sqrt(p) x_{n+2}^2 over
// Q(sqrt p).
QuadraticForm builtin_form(int n, std::optional<std::int64_t> p = std::nullopt);

using RootVector = std::vector<RingElement>;

// Simple roots of the reflection group of the diagonal rational form
// (n <= 7, where the Vinberg algorithm stops after the first extra root).
std::vector<RootVector> diagonal_roots(int n);

// tau_{r[word[0]]} ... tau_{r[word.back()]} over O_F.
ExactMatrix reflection_word(const QuadraticForm& form, const std::vector<RootVector>& roots,
                            const std::vector<int>& word);
// All products tau_i tau_j, i < j: generators of the rotation subgroup.
std::vector<ExactMatrix> rotation_generators(const QuadraticForm& form, const std::vector<RootVector>& roots);

// Rotation subgroup of the full reflection group of the diagonal form.
Preset arithmetic_preset(int n);
// Two-generator subgroup (squares of reflection words), n in {1, 2}.
Preset thin_preset(int n);
// n = 2, block diagonal 1 + SO(2,1): stabilizes e_1, so never surjective.
Preset reducible_preset();
// n = 1, a parabolic P and P^2: abelian control.
Preset abelian_preset();
// Rotations of a reflection group for x1^2 + x2^2 + x3^2 - sqrt5 x4^2 over
// Z[(1 + sqrt 5)/2] (n = 2).
Preset golden_preset();

std::vector<std::string> preset_names();
Preset preset_by_name(const std::string& name);

}  // namespace clab
