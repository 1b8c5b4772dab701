#pragma once

#include "lily/numerics/matrix.hpp"

#include <functional>

namespace lily {

using ScalarField = std::function<double(const Vector&)>;

/// Central-difference gradient: (f(x + h e_i) - f(x - h e_i)) / 2h for each
/// coordinate. Throws NumericDomain if any evaluation is non-finite.
Vector finite_diff_grad(const ScalarField& f, const Vector& x, double h = 1e-5);

}  // namespace lily
