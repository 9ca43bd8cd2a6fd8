#include "numlex/optim.hpp"

#include <cmath>

#include "numlex/errors.hpp"

namespace numlex {

void Sgd::step(ParamSet& params) {
  for (auto& [name, t] : params) {
    if (!t.has_grad()) throw MissingGradient("no gradient buffer for parameter " + name);
    for (size_t i = 0; i < t.data().size(); ++i) t.data()[i] -= lr * t.grad()[i];
  }
}

void Adam::step(ParamSet& params) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (auto& [name, t] : params) {
    if (!t.has_grad()) throw MissingGradient("no gradient buffer for parameter " + name);
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(t.size(), 0.0);
      mom.v.assign(t.size(), 0.0);
    }
    for (size_t i = 0; i < t.size(); ++i) {
      double g = t.grad()[i];
      mom.m[i] = beta1 * mom.m[i] + (1.0 - beta1) * g;
      mom.v[i] = beta2 * mom.v[i] + (1.0 - beta2) * g * g;
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      t.data()[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace numlex
