#ifndef FPAD_ADAM_HPP
#define FPAD_ADAM_HPP

#include <cmath>
#include <vector>

#include "fpad/nn.hpp"

namespace fpad {

// Bias-corrected Adam over a fixed parameter list.
template <class S>
class Adam {
 public:
  Adam(const std::vector<nn::ParamRef<S>>& params, S lr, S beta1, S beta2, S eps = S(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    if (!(lr > S(0))) throw InvalidParams("learning rate must be positive");
    if (beta1 < S(0) || beta1 >= S(1) || beta2 < S(0) || beta2 >= S(1))
      throw InvalidParams("adam betas must lie in [0,1)");
    for (const auto& p : params) {
      if (!p.trainable) continue;
      slots_.push_back({p.value, p.grad, nn::Mat<S>::Zero(p.value->rows(), p.value->cols()),
                        nn::Mat<S>::Zero(p.value->rows(), p.value->cols())});
    }
  }

  void step() {
    ++t_;
    const S bc1 = S(1) - std::pow(beta1_, static_cast<S>(t_));
    const S bc2 = S(1) - std::pow(beta2_, static_cast<S>(t_));
    for (auto& s : slots_) {
      s.m = beta1_ * s.m + (S(1) - beta1_) * (*s.grad);
      s.v = (beta2_ * s.v.array() + (S(1) - beta2_) * s.grad->array().square()).matrix();
      *s.value -= (lr_ * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps_)).matrix();
    }
  }

  long steps() const { return t_; }

 private:
  struct Slot {
    nn::Mat<S>* value;
    nn::Mat<S>* grad;
    nn::Mat<S> m, v;
  };

  S lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Slot> slots_;
};

// Single standalone Adam update (the spec-level adam_step operation; the
// Adam class above is this rule applied per tensor with persistent state).
template <class S>
struct AdamScalarState {
  S m = S(0), v = S(0);
  long t = 0;
};

template <class S>
S adam_step_scalar(S param, S grad, AdamScalarState<S>& st, S lr, S beta1, S beta2,
                   S eps = S(1e-8)) {
  ++st.t;
  st.m = beta1 * st.m + (S(1) - beta1) * grad;
  st.v = beta2 * st.v + (S(1) - beta2) * grad * grad;
  const S mhat = st.m / (S(1) - std::pow(beta1, static_cast<S>(st.t)));
  const S vhat = st.v / (S(1) - std::pow(beta2, static_cast<S>(st.t)));
  return param - lr * mhat / (std::sqrt(vhat) + eps);
}

}  // namespace fpad

#endif  // FPAD_ADAM_HPP
