#include "clab/presets.hpp"

namespace clab {

namespace {

RingElement el(std::int64_t a, std::int64_t b = 0) { return {BigInt(a), BigInt(b)}; }

ExactMatrix int_matrix(std::size_t n, std::initializer_list<std::int64_t> xs) {
  std::vector<RingElement> data;
  for (auto x : xs) data.push_back(el(x));
  return ExactMatrix(n, std::move(data));
}

}  // namespace

QuadraticForm builtin_form(int n, std::optional<std::int64_t> p) {
  if (n < 1) fail(ErrorKind::kDimension, "builtin form needs n >= 1");
  const std::size_t m = static_cast<std::size_t>(n) + 2;
  ExactMatrix gram(m, el(0));
  for (std::size_t i = 0; i + 1 < m; ++i) gram(i, i) = el(1);
  if (!p) {
    gram(m - 1, m - 1) = el(-1);
    return QuadraticForm(FieldSpec::rational(), gram);
  }
  if (!is_prime(*p)) fail(ErrorKind::kValidation, "builtin form: p must be prime");
  const FieldSpec field = FieldSpec::quadratic(*p);
  // sqrt p = w, or 2w - 1 when p = 1 mod 4
  gram(m - 1, m - 1) = field.uses_half_integers() ? el(1, -2) : el(0, -1);
  return QuadraticForm(field, gram);
}

std::vector<RootVector> diagonal_roots(int n) {
  if (n < 1 || n > 7) fail(ErrorKind::kDimension, "diagonal roots are tabulated for 1 <= n <= 7");
  const std::size_t m = static_cast<std::size_t>(n) + 2;
  std::vector<RootVector> roots;
  for (std::size_t i = 0; i + 2 < m; ++i) {
    RootVector r(m, el(0));
    r[i] = el(1);
    r[i + 1] = el(-1);
    roots.push_back(r);
  }
  RootVector last(m, el(0));
  last[m - 2] = el(1);
  roots.push_back(last);
  // The extra root touching the cusp side: -(e1 + e2) + e_m for n = 1,
  // -(e1 + e2 + e3) + e_m for n >= 2.
  RootVector extra(m, el(0));
  for (std::size_t i = 0; i < (n == 1 ? 2u : 3u); ++i) extra[i] = el(-1);
  extra[m - 1] = el(1);
  roots.push_back(extra);
  return roots;
}

ExactMatrix reflection_word(const QuadraticForm& form, const std::vector<RootVector>& roots,
                            const std::vector<int>& word) {
  const ExactRing ring(form.field());
  ExactMatrix m = identity(ring, form.dim());
  for (int i : word)
    m = multiply(ring, m, reflect(ring, std::span<const RingElement>(roots.at(static_cast<std::size_t>(i))), form.gram()));
  return m;
}

std::vector<ExactMatrix> rotation_generators(const QuadraticForm& form, const std::vector<RootVector>& roots) {
  std::vector<ExactMatrix> gens;
  for (int i = 0; i < static_cast<int>(roots.size()); ++i)
    for (int j = i + 1; j < static_cast<int>(roots.size()); ++j) gens.push_back(reflection_word(form, roots, {i, j}));
  return gens;
}

Preset arithmetic_preset(int n) {
  QuadraticForm form = builtin_form(n);
  auto gens = rotation_generators(form, diagonal_roots(n));
  return {"arithmetic-n" + std::to_string(n), "rotation subgroup of the reflection group of diag(1,...,1,-1)", form,
          std::move(gens)};
}

Preset thin_preset(int n) {
  QuadraticForm form = builtin_form(n);
  std::vector<ExactMatrix> gens;
  if (n == 1) {
    gens.push_back(int_matrix(3, {1, -4, -4, 4, -7, -8, -4, 8, 9}));
    gens.push_back(int_matrix(3, {-7, -4, -8, 4, 1, 4, 8, 4, 9}));
  } else if (n == 2) {
    gens.push_back(int_matrix(4, {-1, 0, -2, -2, 0, 1, 2, 2, 2, 2, 3, 4, 2, 2, 4, 5}));
    gens.push_back(int_matrix(4, {-3, 2, -2, -4, -2, 1, 0, -2, 2, 0, 1, 2, 4, -2, 2, 5}));
  } else {
    fail(ErrorKind::kDimension, "thin preset exists for n = 1, 2");
  }
  return {"thin-n" + std::to_string(n), "two squares of hyperbolic reflection words", form, std::move(gens)};
}

Preset reducible_preset() {
  QuadraticForm form = builtin_form(2);
  const ExactRing ring(form.field());
  const Preset small = arithmetic_preset(1);
  std::vector<ExactMatrix> gens;
  for (const auto& g : small.generators) {
    ExactMatrix big = identity(ring, 4);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) big(i + 1, j + 1) = g(i, j);
    gens.push_back(big);
  }
  return {"reducible-n2", "1 + SO(2,1;Z) block diagonal; fixes e1", form, std::move(gens)};
}

Preset abelian_preset() {
  QuadraticForm form = builtin_form(1);
  const ExactRing ring(form.field());
  const auto roots = diagonal_roots(1);
  // roots 1 and 2 are parallel walls, so their product is parabolic
  const ExactMatrix p = reflection_word(form, roots, {1, 2});
  return {"abelian-n1", "parabolic P and P^2", form, {p, multiply(ring, p, p)}};
}

Preset golden_preset() {
  QuadraticForm form = builtin_form(2, 5);
  // w = (1 + sqrt 5)/2; w1 = (w, 0, 0, 1) has q = 2 - w, a unit; w2 = (1 + w, 0, 0, w) has q = 1.
  std::vector<RootVector> roots = {
      {el(1), el(-1), el(0), el(0)},
      {el(0), el(1), el(-1), el(0)},
      {el(0), el(0), el(1), el(0)},
      {el(0, 1), el(0), el(0), el(1)},
      {el(1, 1), el(0), el(0), el(0, 1)},
  };
  auto gens = rotation_generators(form, roots);
  return {"golden-n2", "rotations from reflections for x1^2+x2^2+x3^2-sqrt5 x4^2", form, std::move(gens)};
}

std::vector<std::string> preset_names() {
  return {"arithmetic-n1", "arithmetic-n2", "arithmetic-n3", "thin-n1", "thin-n2",
          "reducible-n2",  "abelian-n1",    "golden-n2"};
}

Preset preset_by_name(const std::string& name) {
  if (name == "arithmetic-n1") return arithmetic_preset(1);
  if (name == "arithmetic-n2") return arithmetic_preset(2);
  if (name == "arithmetic-n3") return arithmetic_preset(3);
  if (name == "thin-n1") return thin_preset(1);
  if (name == "thin-n2") return thin_preset(2);
  if (name == "reducible-n2") return reducible_preset();
  if (name == "abelian-n1") return abelian_preset();
  if (name == "golden-n2") return golden_preset();
  fail(ErrorKind::kValidation, "unknown preset '" + name + "'");
}

}  // namespace clab
