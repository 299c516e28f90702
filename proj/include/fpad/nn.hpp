#ifndef FPAD_NN_HPP
#define FPAD_NN_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fpad/common.hpp"

// Minimal sequential-network machinery on Eigen dense types.
//
// Activation layout: one column per sample; features are flattened
// position-major with channel fastest, i.e. index (y*W + x)*C + c. With
// column-major Eigen storage a whole batch can then be reinterpreted as a
// (C, H*W*batch) map for per-channel operations, and convolution outputs
// fall out of a single GEMM without any reshuffling.
//
// Besides forward/backward, layers used inside a gradient-penalty critic
// implement a linearized `tangent` pass: the Jacobian-vector product of the
// layer at its last forward point. For piecewise-linear layers (conv,
// dense, leaky-ReLU) this is exact and is all that is needed to
// differentiate the critic's input gradient with respect to its weights.

namespace fpad::nn {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct TensorShape {
  std::vector<int> dims;
  int count() const {
    int n = 1;
    for (int d : dims) n *= d;
    return n;
  }
};

template <class S>
struct ParamRef {
  std::string name;
  Mat<S>* value;
  Mat<S>* grad;
  TensorShape shape;
  bool trainable;
};

struct ConvGeom {
  int in_c, in_h, in_w;
  int out_c;
  int k, stride, pad;
  int out_h, out_w;

  static ConvGeom make(int in_c, int in_h, int in_w, int out_c, int k, int stride, int pad) {
    ConvGeom g{in_c, in_h, in_w, out_c, k, stride, pad, 0, 0};
    g.out_h = (in_h + 2 * pad - k) / stride + 1;
    g.out_w = (in_w + 2 * pad - k) / stride + 1;
    return g;
  }
  int in_features() const { return in_c * in_h * in_w; }
  int out_features() const { return out_c * out_h * out_w; }
  int col_rows() const { return k * k * in_c; }
  int col_cols() const { return out_h * out_w; }
};

// col is (k*k*in_c, out_h*out_w), row index (ky*k + kx)*in_c + ci.
template <class S>
void im2col(const S* in, const ConvGeom& g, S* col) {
  const int oHW = g.out_h * g.out_w;
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      S* c = col + static_cast<std::ptrdiff_t>(oy * g.out_w + ox) * g.col_rows();
      for (int ky = 0; ky < g.k; ++ky) {
        const int iy = oy * g.stride + ky - g.pad;
        for (int kx = 0; kx < g.k; ++kx) {
          const int ix = ox * g.stride + kx - g.pad;
          S* dst = c + (ky * g.k + kx) * g.in_c;
          if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) {
            std::fill(dst, dst + g.in_c, S(0));
          } else {
            const S* src = in + static_cast<std::ptrdiff_t>(iy * g.in_w + ix) * g.in_c;
            std::copy(src, src + g.in_c, dst);
          }
        }
      }
    }
  }
  (void)oHW;
}

// Adjoint of im2col; accumulates into `in` (caller zero-fills).
template <class S>
void col2im(const S* col, const ConvGeom& g, S* in) {
  for (int oy = 0; oy < g.out_h; ++oy) {
    for (int ox = 0; ox < g.out_w; ++ox) {
      const S* c = col + static_cast<std::ptrdiff_t>(oy * g.out_w + ox) * g.col_rows();
      for (int ky = 0; ky < g.k; ++ky) {
        const int iy = oy * g.stride + ky - g.pad;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int kx = 0; kx < g.k; ++kx) {
          const int ix = ox * g.stride + kx - g.pad;
          if (ix < 0 || ix >= g.in_w) continue;
          const S* src = c + (ky * g.k + kx) * g.in_c;
          S* dst = in + static_cast<std::ptrdiff_t>(iy * g.in_w + ix) * g.in_c;
          for (int ci = 0; ci < g.in_c; ++ci) dst[ci] += src[ci];
        }
      }
    }
  }
}

template <class S>
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }

  virtual Mat<S> forward(const Mat<S>& x, bool training) = 0;
  // Accumulates parameter gradients, returns the input gradient.
  virtual Mat<S> backward(const Mat<S>& dy) = 0;
  // Input gradient only; param layers additionally record dy for a later
  // tangent pass.
  virtual Mat<S> backward_input(const Mat<S>& dy) { return backward(dy); }
  // Linearized forward at the last forward point (JVP). `accumulate` folds
  // the recorded adjoint x tangent outer product into the weight gradient.
  virtual Mat<S> tangent(const Mat<S>& /*t*/, bool /*accumulate*/) {
    throw ModeError("layer '" + name_ + "' does not support a tangent pass");
  }
  virtual void collect_params(std::vector<ParamRef<S>>& /*out*/) {}
  virtual bool is_batchnorm() const { return false; }
  virtual int out_features(int in_features) const { return in_features; }

 private:
  std::string name_;
};

template <class S>
class Conv2d final : public Layer<S> {
 public:
  Conv2d(std::string name, const ConvGeom& geom)
      : Layer<S>(std::move(name)),
        g_(geom),
        weight_(Mat<S>::Zero(g_.out_c, g_.col_rows())),
        bias_(Mat<S>::Zero(g_.out_c, 1)),
        gw_(Mat<S>::Zero(g_.out_c, g_.col_rows())),
        gb_(Mat<S>::Zero(g_.out_c, 1)) {}

  const ConvGeom& geom() const { return g_; }

  Mat<S> forward(const Mat<S>& x, bool) override {
    check_rows(x, g_.in_features(), "conv input");
    const int b = static_cast<int>(x.cols());
    col_.resize(g_.col_rows(), static_cast<Eigen::Index>(g_.col_cols()) * b);
    for (int s = 0; s < b; ++s)
      im2col(x.col(s).data(), g_, col_.data() + col_.rows() * g_.col_cols() * s);
    Mat<S> out = weight_ * col_;
    out.colwise() += bias_.col(0);
    return Eigen::Map<const Mat<S>>(out.data(), g_.out_features(), b);
  }

  Mat<S> backward(const Mat<S>& dy) override {
    const int b = static_cast<int>(dy.cols());
    Eigen::Map<const Mat<S>> dym(dy.data(), g_.out_c, static_cast<Eigen::Index>(g_.col_cols()) * b);
    gw_.noalias() += dym * col_.transpose();
    gb_.col(0) += dym.rowwise().sum();
    return input_grad(dym, b);
  }

  Mat<S> backward_input(const Mat<S>& dy) override {
    last_dy_ = dy;
    const int b = static_cast<int>(dy.cols());
    Eigen::Map<const Mat<S>> dym(dy.data(), g_.out_c, static_cast<Eigen::Index>(g_.col_cols()) * b);
    return input_grad(dym, b);
  }

  Mat<S> tangent(const Mat<S>& t, bool accumulate) override {
    const int b = static_cast<int>(t.cols());
    Mat<S> colt(g_.col_rows(), static_cast<Eigen::Index>(g_.col_cols()) * b);
    for (int s = 0; s < b; ++s)
      im2col(t.col(s).data(), g_, colt.data() + colt.rows() * g_.col_cols() * s);
    if (accumulate) {
      Eigen::Map<const Mat<S>> dym(last_dy_.data(), g_.out_c,
                                   static_cast<Eigen::Index>(g_.col_cols()) * b);
      gw_.noalias() += dym * colt.transpose();
      // The input gradient of a conv does not depend on the bias, so the
      // penalty contributes nothing to gb_.
    }
    Mat<S> out = weight_ * colt;
    return Eigen::Map<const Mat<S>>(out.data(), g_.out_features(), b);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name() + ".weight", &weight_, &gw_,
                   TensorShape{{g_.out_c, g_.k, g_.k, g_.in_c}}, true});
    out.push_back({this->name() + ".bias", &bias_, &gb_, TensorShape{{g_.out_c}}, true});
  }

  int out_features(int) const override { return g_.out_features(); }

 private:
  Mat<S> input_grad(const Eigen::Map<const Mat<S>>& dym, int b) const {
    Mat<S> dcol = weight_.transpose() * dym;
    Mat<S> dx = Mat<S>::Zero(g_.in_features(), b);
    for (int s = 0; s < b; ++s)
      col2im(dcol.data() + dcol.rows() * g_.col_cols() * s, g_, dx.col(s).data());
    return dx;
  }

  static void check_rows(const Mat<S>& x, int expected, const char* what) {
    if (x.rows() != expected)
      throw ShapeMismatch(std::string(what) + ": got " + std::to_string(x.rows()) +
                          " features, expected " + std::to_string(expected));
  }

  ConvGeom g_;
  Mat<S> weight_, bias_, gw_, gb_;
  Mat<S> col_;
  Mat<S> last_dy_;
};

// Transposed convolution, expressed through the adjoint of a regular conv
// whose "input" is this layer's output.
template <class S>
class ConvTranspose2d final : public Layer<S> {
 public:
  ConvTranspose2d(std::string name, int in_c, int in_h, int in_w, int out_c, int k, int stride,
                  int pad, int output_pad)
      : Layer<S>(std::move(name)) {
    const int out_h = (in_h - 1) * stride - 2 * pad + k + output_pad;
    const int out_w = (in_w - 1) * stride - 2 * pad + k + output_pad;
    g_ = ConvGeom::make(out_c, out_h, out_w, in_c, k, stride, pad);
    if (g_.out_h != in_h || g_.out_w != in_w)
      throw ShapeMismatch("transposed conv geometry is not invertible");
    weight_ = Mat<S>::Zero(in_c, g_.col_rows());
    gw_ = Mat<S>::Zero(in_c, g_.col_rows());
    bias_ = Mat<S>::Zero(out_c, 1);
    gb_ = Mat<S>::Zero(out_c, 1);
  }

  Mat<S> forward(const Mat<S>& x, bool) override {
    const int b = static_cast<int>(x.cols());
    x_ = x;
    Eigen::Map<const Mat<S>> xm(x.data(), small_c(), static_cast<Eigen::Index>(g_.col_cols()) * b);
    Mat<S> col = weight_.transpose() * xm;
    Mat<S> y = Mat<S>::Zero(g_.in_features(), b);
    for (int s = 0; s < b; ++s)
      col2im(col.data() + col.rows() * g_.col_cols() * s, g_, y.col(s).data());
    Eigen::Map<Mat<S>> ym(y.data(), g_.in_c, static_cast<Eigen::Index>(g_.in_h) * g_.in_w * b);
    ym.colwise() += bias_.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) override {
    const int b = static_cast<int>(dy.cols());
    Mat<S> dycol(g_.col_rows(), static_cast<Eigen::Index>(g_.col_cols()) * b);
    for (int s = 0; s < b; ++s)
      im2col(dy.col(s).data(), g_, dycol.data() + dycol.rows() * g_.col_cols() * s);
    Eigen::Map<const Mat<S>> xm(x_.data(), small_c(), static_cast<Eigen::Index>(g_.col_cols()) * b);
    gw_.noalias() += xm * dycol.transpose();
    Eigen::Map<const Mat<S>> dym(dy.data(), g_.in_c,
                                 static_cast<Eigen::Index>(g_.in_h) * g_.in_w * b);
    gb_.col(0) += dym.rowwise().sum();
    Mat<S> dxm = weight_ * dycol;
    return Eigen::Map<const Mat<S>>(dxm.data(), small_features(), b);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name() + ".weight", &weight_, &gw_,
                   TensorShape{{small_c(), g_.k, g_.k, g_.in_c}}, true});
    out.push_back({this->name() + ".bias", &bias_, &gb_, TensorShape{{g_.in_c}}, true});
  }

  int out_features(int) const override { return g_.in_features(); }

 private:
  int small_c() const { return g_.out_c; }
  int small_features() const { return g_.out_features(); }

  ConvGeom g_;  // geometry of the adjoint conv: big -> small
  Mat<S> weight_, bias_, gw_, gb_;
  Mat<S> x_;
};

template <class S>
class Dense final : public Layer<S> {
 public:
  Dense(std::string name, int in, int out)
      : Layer<S>(std::move(name)),
        weight_(Mat<S>::Zero(out, in)),
        bias_(Mat<S>::Zero(out, 1)),
        gw_(Mat<S>::Zero(out, in)),
        gb_(Mat<S>::Zero(out, 1)) {}

  Mat<S> forward(const Mat<S>& x, bool) override {
    x_ = x;
    Mat<S> y = weight_ * x;
    y.colwise() += bias_.col(0);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) override {
    gw_.noalias() += dy * x_.transpose();
    gb_.col(0) += dy.rowwise().sum();
    return weight_.transpose() * dy;
  }

  Mat<S> backward_input(const Mat<S>& dy) override {
    last_dy_ = dy;
    return weight_.transpose() * dy;
  }

  Mat<S> tangent(const Mat<S>& t, bool accumulate) override {
    if (accumulate) gw_.noalias() += last_dy_ * t.transpose();
    return weight_ * t;
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name() + ".weight", &weight_, &gw_,
                   TensorShape{{static_cast<int>(weight_.rows()), static_cast<int>(weight_.cols())}},
                   true});
    out.push_back(
        {this->name() + ".bias", &bias_, &gb_, TensorShape{{static_cast<int>(bias_.rows())}}, true});
  }

  int out_features(int) const override { return static_cast<int>(weight_.rows()); }

 private:
  Mat<S> weight_, bias_, gw_, gb_;
  Mat<S> x_, last_dy_;
};

template <class S>
class LeakyReLU final : public Layer<S> {
 public:
  LeakyReLU(std::string name, S alpha) : Layer<S>(std::move(name)), alpha_(alpha) {}

  Mat<S> forward(const Mat<S>& x, bool) override {
    mask_ = (x.array() > S(0)).select(Mat<S>::Ones(x.rows(), x.cols()), alpha_);
    return x.cwiseProduct(mask_);
  }
  Mat<S> backward(const Mat<S>& dy) override { return dy.cwiseProduct(mask_); }
  Mat<S> tangent(const Mat<S>& t, bool) override { return t.cwiseProduct(mask_); }

 private:
  S alpha_;
  Mat<S> mask_;
};

template <class S>
class Tanh final : public Layer<S> {
 public:
  using Layer<S>::Layer;
  Mat<S> forward(const Mat<S>& x, bool) override {
    y_ = x.array().tanh();
    return y_;
  }
  Mat<S> backward(const Mat<S>& dy) override {
    return dy.array() * (S(1) - y_.array().square());
  }

 private:
  Mat<S> y_;
};

template <class S>
class Sigmoid final : public Layer<S> {
 public:
  using Layer<S>::Layer;
  Mat<S> forward(const Mat<S>& x, bool) override {
    y_ = (S(1) / (S(1) + (-x.array()).exp()));
    return y_;
  }
  Mat<S> backward(const Mat<S>& dy) override {
    return dy.array() * y_.array() * (S(1) - y_.array());
  }

 private:
  Mat<S> y_;
};

template <class S>
class BatchNorm final : public Layer<S> {
 public:
  BatchNorm(std::string name, int channels, S momentum = S(0.1), S eps = S(1e-5))
      : Layer<S>(std::move(name)),
        c_(channels),
        momentum_(momentum),
        eps_(eps),
        gamma_(Mat<S>::Ones(channels, 1)),
        beta_(Mat<S>::Zero(channels, 1)),
        running_mean_(Mat<S>::Zero(channels, 1)),
        running_var_(Mat<S>::Ones(channels, 1)),
        ggamma_(Mat<S>::Zero(channels, 1)),
        gbeta_(Mat<S>::Zero(channels, 1)) {}

  Mat<S> forward(const Mat<S>& x, bool training) override {
    const Eigen::Index features = x.rows(), b = x.cols();
    const Eigen::Index m = features / c_ * b;
    Eigen::Map<const Mat<S>> xm(x.data(), c_, m);
    training_ = training;
    if (training) {
      Vec<S> mu = xm.rowwise().mean();
      Mat<S> centered = xm.colwise() - mu;
      Vec<S> var = centered.array().square().rowwise().mean();
      inv_std_ = (var.array() + eps_).sqrt().inverse();
      xhat_ = centered.array().colwise() * inv_std_.array();
      running_mean_.col(0) = (S(1) - momentum_) * running_mean_.col(0) + momentum_ * mu;
      running_var_.col(0) = (S(1) - momentum_) * running_var_.col(0) + momentum_ * var;
      Mat<S> ym = (xhat_.array().colwise() * gamma_.col(0).array()).colwise() + beta_.col(0).array();
      return Eigen::Map<const Mat<S>>(ym.data(), features, b);
    }
    Vec<S> inv = (running_var_.col(0).array() + eps_).sqrt().inverse();
    inv_std_inf_ = inv;
    Mat<S> ym = (((xm.colwise() - running_mean_.col(0)).array().colwise() * inv.array()).colwise() *
                 gamma_.col(0).array())
                    .colwise() +
                beta_.col(0).array();
    return Eigen::Map<const Mat<S>>(ym.data(), features, b);
  }

  Mat<S> backward(const Mat<S>& dy) override {
    const Eigen::Index features = dy.rows(), b = dy.cols();
    const Eigen::Index m = features / c_ * b;
    Eigen::Map<const Mat<S>> dym(dy.data(), c_, m);
    if (!training_) {
      Vec<S> scale = gamma_.col(0).cwiseProduct(inv_std_inf_);
      Mat<S> dxm = dym.array().colwise() * scale.array();
      return Eigen::Map<const Mat<S>>(dxm.data(), features, b);
    }
    Vec<S> dgamma = (dym.cwiseProduct(xhat_)).rowwise().sum();
    Vec<S> dbeta = dym.rowwise().sum();
    ggamma_.col(0) += dgamma;
    gbeta_.col(0) += dbeta;
    Mat<S> dxhat = dym.array().colwise() * gamma_.col(0).array();
    Vec<S> sum_dxhat = dxhat.rowwise().sum();
    Vec<S> sum_dxhat_xhat = (dxhat.cwiseProduct(xhat_)).rowwise().sum();
    Mat<S> dxm =
        ((dxhat * S(m)).colwise() - sum_dxhat) - (xhat_.array().colwise() * sum_dxhat_xhat.array()).matrix();
    dxm = (dxm.array().colwise() * (inv_std_.array() / S(m))).matrix();
    return Eigen::Map<const Mat<S>>(dxm.data(), features, b);
  }

  void collect_params(std::vector<ParamRef<S>>& out) override {
    out.push_back({this->name() + ".gamma", &gamma_, &ggamma_, TensorShape{{c_}}, true});
    out.push_back({this->name() + ".beta", &beta_, &gbeta_, TensorShape{{c_}}, true});
    out.push_back({this->name() + ".running_mean", &running_mean_, nullptr, TensorShape{{c_}}, false});
    out.push_back({this->name() + ".running_var", &running_var_, nullptr, TensorShape{{c_}}, false});
  }

  bool is_batchnorm() const override { return true; }

 private:
  int c_;
  S momentum_, eps_;
  Mat<S> gamma_, beta_, running_mean_, running_var_, ggamma_, gbeta_;
  Mat<S> xhat_;
  Vec<S> inv_std_, inv_std_inf_;
  bool training_ = false;
};

template <class S>
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }
  Layer<S>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<S>& layer(std::size_t i) const { return *layers_[i]; }

  Mat<S> forward(const Mat<S>& x, bool training) { return forward_range(x, 0, layers_.size(), training); }

  Mat<S> forward_range(const Mat<S>& x, std::size_t from, std::size_t to, bool training) {
    Mat<S> h = x;
    for (std::size_t i = from; i < to; ++i) h = layers_[i]->forward(h, training);
    return h;
  }

  Mat<S> backward(const Mat<S>& dy) {
    Mat<S> g = dy;
    for (std::size_t i = layers_.size(); i > 0; --i) g = layers_[i - 1]->backward(g);
    return g;
  }

  Mat<S> backward_range(const Mat<S>& dy, std::size_t from, std::size_t to) {
    Mat<S> g = dy;
    for (std::size_t i = to; i > from; --i) g = layers_[i - 1]->backward(g);
    return g;
  }

  Mat<S> backward_input(const Mat<S>& dy) {
    Mat<S> g = dy;
    for (std::size_t i = layers_.size(); i > 0; --i) g = layers_[i - 1]->backward_input(g);
    return g;
  }

  Mat<S> tangent(const Mat<S>& t, bool accumulate) {
    Mat<S> h = t;
    for (auto& l : layers_) h = l->tangent(h, accumulate);
    return h;
  }

  std::vector<ParamRef<S>> params() {
    std::vector<ParamRef<S>> out;
    for (auto& l : layers_) l->collect_params(out);
    return out;
  }

  void zero_grads() {
    for (auto& p : params())
      if (p.grad) p.grad->setZero();
  }

  bool has_batchnorm() const {
    for (const auto& l : layers_)
      if (l->is_batchnorm()) return true;
    return false;
  }

 private:
  std::vector<std::unique_ptr<Layer<S>>> layers_;
};

}  // namespace fpad::nn

#endif  // FPAD_NN_HPP
