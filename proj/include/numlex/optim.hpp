#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "numlex/tensor.hpp"

namespace numlex {

struct Sgd {
  double lr = 0.1;
  void step(ParamSet& params);
};

// Adam with bias correction. Moment state lives in the optimizer, keyed by
// parameter name.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(ParamSet& params);

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  std::unordered_map<std::string, Moments> state_;
  long t_ = 0;
};

}  // namespace numlex
