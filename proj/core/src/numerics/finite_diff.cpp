#include "lily/numerics/finite_diff.hpp"

#include "lily/error.hpp"

#include <cmath>
#include <string>

namespace lily {

Vector finite_diff_grad(const ScalarField& f, const Vector& x, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite_diff_grad: step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericDomain("finite_diff_grad: non-finite evaluation at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace lily
