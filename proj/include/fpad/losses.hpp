#ifndef FPAD_LOSSES_HPP
#define FPAD_LOSSES_HPP

#include <cmath>

#include "fpad/models.hpp"
#include "fpad/nn.hpp"
#include "fpad/rng.hpp"

namespace fpad {

// Non-saturating DCGAN losses on post-sigmoid scores.
// d_loss = (mean(-ln r) + mean(-ln(1-f))) / 2, g_loss = mean(-ln f).
template <class S>
struct DcganLosses {
  S d_loss, g_loss;
  nn::Vec<S> d_grad_real;  // d d_loss / d real scores
  nn::Vec<S> d_grad_fake;  // d d_loss / d fake scores
  nn::Vec<S> g_grad_fake;  // d g_loss / d fake scores
};

template <class S>
DcganLosses<S> dcgan_losses(const nn::Vec<S>& real, const nn::Vec<S>& fake) {
  for (const auto* v : {&real, &fake})
    for (Eigen::Index i = 0; i < v->size(); ++i)
      if (!((*v)[i] > S(0) && (*v)[i] < S(1)))
        throw DomainError("dcgan score outside (0,1): " + std::to_string((*v)[i]));
  const S nr = static_cast<S>(real.size()), nf = static_cast<S>(fake.size());
  DcganLosses<S> out;
  out.d_loss = (-real.array().log()).mean() / S(2) + (-(S(1) - fake.array()).log()).mean() / S(2);
  out.g_loss = (-fake.array().log()).mean();
  out.d_grad_real = (-S(1) / (S(2) * nr * real.array())).matrix();
  out.d_grad_fake = (S(1) / (S(2) * nf * (S(1) - fake.array()))).matrix();
  out.g_grad_fake = (-S(1) / (nf * fake.array())).matrix();
  return out;
}

// Wasserstein losses on unbounded critic scores.
// critic_loss = mean(fake) - mean(real), generator_loss = -mean(fake).
template <class S>
struct WganLosses {
  S critic_loss, generator_loss;
  nn::Vec<S> critic_grad_real;
  nn::Vec<S> critic_grad_fake;
  nn::Vec<S> generator_grad_fake;
};

template <class S>
WganLosses<S> wgan_losses(const nn::Vec<S>& real, const nn::Vec<S>& fake) {
  for (const auto* v : {&real, &fake})
    if (!v->allFinite()) throw NonFiniteLoss("non-finite critic score");
  WganLosses<S> out;
  out.critic_loss = fake.mean() - real.mean();
  out.generator_loss = -fake.mean();
  out.critic_grad_real = nn::Vec<S>::Constant(real.size(), S(-1) / static_cast<S>(real.size()));
  out.critic_grad_fake = nn::Vec<S>::Constant(fake.size(), S(1) / static_cast<S>(fake.size()));
  out.generator_grad_fake = nn::Vec<S>::Constant(fake.size(), S(-1) / static_cast<S>(fake.size()));
  return out;
}

// Gradient penalty lambda * E[(||grad_x D(xhat)|| - 1)^2] at per-sample
// uniform mixes xhat = eps*real + (1-eps)*fake.
//
// When accumulate_grads is set, d penalty / d theta is folded into the
// critic's weight gradients via the frozen-adjoint identity
//   dP/dtheta = d(u . grad_x D)/dtheta,  u = 2*lambda*(||g||-1)/(B*||g||) g,
// computed with one extra backward_input pass and one tangent pass. Exact
// for the piecewise-linear wgan_gp critic (no batch norm allowed).
template <class S>
S gradient_penalty(Network<S>& critic, const nn::Mat<S>& real, const nn::Mat<S>& fake,
                   RngStream& rng, S lambda, bool accumulate_grads = true) {
  if (critic.seq.has_batchnorm())
    throw ModeError("gradient penalty requires a batch-norm-free critic");
  if (real.rows() != fake.rows() || real.cols() != fake.cols())
    throw ShapeMismatch("gradient penalty: real/fake batch shapes differ");

  const Eigen::Index b = real.cols();
  nn::Mat<S> xhat(real.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const S eps = static_cast<S>(rng.uniform());
    xhat.col(j) = eps * real.col(j) + (S(1) - eps) * fake.col(j);
  }

  critic.seq.forward(xhat, false);
  nn::Mat<S> g = critic.seq.backward_input(nn::Mat<S>::Ones(1, b));

  S penalty = S(0);
  nn::Mat<S> u(g.rows(), b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const S norm = g.col(j).norm();
    const S dev = norm - S(1);
    penalty += dev * dev;
    if (accumulate_grads) {
      const S coeff = S(2) * lambda * dev / (static_cast<S>(b) * std::max(norm, S(1e-12)));
      u.col(j) = coeff * g.col(j);
    }
  }
  penalty *= lambda / static_cast<S>(b);

  if (accumulate_grads) critic.seq.tangent(u, true);
  return penalty;
}

}  // namespace fpad

#endif  // FPAD_LOSSES_HPP
