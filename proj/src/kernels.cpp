#include "bea/kernels.hpp"

#include <cassert>

namespace bea::kernels {

int conv_out_size(int in_size, int kernel, int stride, int pad) {
  return (in_size + 2 * pad - kernel) / stride + 1;
}

void conv2d_forward(const Tensor& in, const Tensor& weight, const std::vector<double>& bias, int stride,
                    int pad, Tensor& out, bool parallel) {
  const int ic_n = in.dim(0), ih = in.dim(1), iw = in.dim(2);
  const int oc_n = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int oh = conv_out_size(ih, kh, stride, pad);
  const int ow = conv_out_size(iw, kw, stride, pad);
  assert(weight.dim(1) == ic_n);
  assert(out.dim(0) == oc_n && out.dim(1) == oh && out.dim(2) == ow);

#pragma omp parallel for schedule(static) if (parallel)
  for (int oc = 0; oc < oc_n; ++oc) {
    double* out_c = out.data() + static_cast<std::size_t>(oc) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[static_cast<std::size_t>(oc)];
        const int iy0 = oy * stride - pad;
        const int ix0 = ox * stride - pad;
        for (int ic = 0; ic < ic_n; ++ic) {
          const double* in_c = in.data() + static_cast<std::size_t>(ic) * ih * iw;
          const double* w_c = weight.data() + ((static_cast<std::size_t>(oc) * ic_n + ic) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = iy0 + ky;
            if (iy < 0 || iy >= ih) continue;
            const double* in_row = in_c + static_cast<std::size_t>(iy) * iw;
            const double* w_row = w_c + static_cast<std::size_t>(ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ix0 + kx;
              if (ix < 0 || ix >= iw) continue;
              acc += in_row[ix] * w_row[kx];
            }
          }
        }
        out_c[static_cast<std::size_t>(oy) * ow + ox] = acc;
      }
    }
  }
}

void conv2d_backward_input(const Tensor& dout, const Tensor& weight, int stride, int pad, Tensor& din,
                           bool parallel) {
  const int ic_n = din.dim(0), ih = din.dim(1), iw = din.dim(2);
  const int oc_n = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int oh = dout.dim(1), ow = dout.dim(2);

#pragma omp parallel for schedule(static) if (parallel)
  for (int ic = 0; ic < ic_n; ++ic) {
    double* din_c = din.data() + static_cast<std::size_t>(ic) * ih * iw;
    for (int iy = 0; iy < ih; ++iy) {
      for (int ix = 0; ix < iw; ++ix) {
        double acc = 0.0;
        for (int oc = 0; oc < oc_n; ++oc) {
          const double* dout_c = dout.data() + static_cast<std::size_t>(oc) * oh * ow;
          const double* w_c = weight.data() + ((static_cast<std::size_t>(oc) * ic_n + ic) * kh) * kw;
          for (int ky = 0; ky < kh; ++ky) {
            const int num_y = iy + pad - ky;
            if (num_y < 0 || num_y % stride != 0) continue;
            const int oy = num_y / stride;
            if (oy >= oh) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int num_x = ix + pad - kx;
              if (num_x < 0 || num_x % stride != 0) continue;
              const int ox = num_x / stride;
              if (ox >= ow) continue;
              acc += dout_c[static_cast<std::size_t>(oy) * ow + ox] * w_c[static_cast<std::size_t>(ky) * kw + kx];
            }
          }
        }
        din_c[static_cast<std::size_t>(iy) * iw + ix] = acc;
      }
    }
  }
}

void conv2d_backward_params(const std::vector<const Tensor*>& ins, const std::vector<const Tensor*>& douts,
                            int stride, int pad, Tensor& dweight, std::vector<double>& dbias, bool parallel) {
  const int oc_n = dweight.dim(0), ic_n = dweight.dim(1);
  const int kh = dweight.dim(2), kw = dweight.dim(3);
  assert(ins.size() == douts.size());

#pragma omp parallel for schedule(static) if (parallel)
  for (int oc = 0; oc < oc_n; ++oc) {
    double bias_acc = 0.0;
    for (std::size_t item = 0; item < ins.size(); ++item) {
      const Tensor& in = *ins[item];
      const Tensor& dout = *douts[item];
      const int ih = in.dim(1), iw = in.dim(2);
      const int oh = dout.dim(1), ow = dout.dim(2);
      const double* dout_c = dout.data() + static_cast<std::size_t>(oc) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = dout_c[static_cast<std::size_t>(oy) * ow + ox];
          if (g == 0.0) continue;
          bias_acc += g;
          const int iy0 = oy * stride - pad;
          const int ix0 = ox * stride - pad;
          for (int ic = 0; ic < ic_n; ++ic) {
            const double* in_c = in.data() + static_cast<std::size_t>(ic) * ih * iw;
            double* dw_c = dweight.data() + ((static_cast<std::size_t>(oc) * ic_n + ic) * kh) * kw;
            for (int ky = 0; ky < kh; ++ky) {
              const int iy = iy0 + ky;
              if (iy < 0 || iy >= ih) continue;
              const double* in_row = in_c + static_cast<std::size_t>(iy) * iw;
              double* dw_row = dw_c + static_cast<std::size_t>(ky) * kw;
              for (int kx = 0; kx < kw; ++kx) {
                const int ix = ix0 + kx;
                if (ix < 0 || ix >= iw) continue;
                dw_row[kx] += g * in_row[ix];
              }
            }
          }
        }
      }
    }
    dbias[static_cast<std::size_t>(oc)] += bias_acc;
  }
}

void leaky_relu_forward(const Tensor& in, double slope, Tensor& out) {
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    out[i] = v > 0.0 ? v : slope * v;
  }
}

void leaky_relu_backward(const Tensor& pre, const Tensor& dpost, double slope, Tensor& dpre) {
  for (std::size_t i = 0; i < pre.size(); ++i) {
    dpre[i] = dpost[i] * (pre[i] > 0.0 ? 1.0 : slope);
  }
}

void sgd_momentum_step(Tensor& param, const Tensor& grad, Tensor& velocity, double lr, double momentum) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] - lr * grad[i];
    param[i] += velocity[i];
  }
}

namespace reference {

void conv2d_forward(const Tensor& in, const Tensor& weight, const std::vector<double>& bias, int stride,
                    int pad, Tensor& out) {
  const int ic_n = in.dim(0), ih = in.dim(1), iw = in.dim(2);
  const int oc_n = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int oh = out.dim(1), ow = out.dim(2);
  for (int oc = 0; oc < oc_n; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[static_cast<std::size_t>(oc)];
        for (int ic = 0; ic < ic_n; ++ic)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int iy = oy * stride - pad + ky;
              const int ix = ox * stride - pad + kx;
              if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
              acc += in.at(ic, iy, ix) * weight.at(oc, ic, ky, kx);
            }
        out.at(oc, oy, ox) = acc;
      }
}

void conv2d_backward_input(const Tensor& dout, const Tensor& weight, int stride, int pad, Tensor& din) {
  const int ic_n = din.dim(0), ih = din.dim(1), iw = din.dim(2);
  const int oc_n = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  const int oh = dout.dim(1), ow = dout.dim(2);
  din.fill(0.0);
  for (int ic = 0; ic < ic_n; ++ic)
    for (int iy = 0; iy < ih; ++iy)
      for (int ix = 0; ix < iw; ++ix) {
        double acc = 0.0;
        for (int oc = 0; oc < oc_n; ++oc)
          for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
              const int ny = iy + pad - ky;
              const int nx = ix + pad - kx;
              if (ny < 0 || nx < 0 || ny % stride != 0 || nx % stride != 0) continue;
              const int oy = ny / stride, ox = nx / stride;
              if (oy >= oh || ox >= ow) continue;
              acc += dout.at(oc, oy, ox) * weight.at(oc, ic, ky, kx);
            }
        din.at(ic, iy, ix) = acc;
      }
}

void conv2d_backward_params(const std::vector<const Tensor*>& ins, const std::vector<const Tensor*>& douts,
                            int stride, int pad, Tensor& dweight, std::vector<double>& dbias) {
  const int oc_n = dweight.dim(0), ic_n = dweight.dim(1), kh = dweight.dim(2), kw = dweight.dim(3);
  for (std::size_t item = 0; item < ins.size(); ++item) {
    const Tensor& in = *ins[item];
    const Tensor& dout = *douts[item];
    const int ih = in.dim(1), iw = in.dim(2);
    const int oh = dout.dim(1), ow = dout.dim(2);
    for (int oc = 0; oc < oc_n; ++oc)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          const double g = dout.at(oc, oy, ox);
          dbias[static_cast<std::size_t>(oc)] += g;
          for (int ic = 0; ic < ic_n; ++ic)
            for (int ky = 0; ky < kh; ++ky)
              for (int kx = 0; kx < kw; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= ih || ix < 0 || ix >= iw) continue;
                dweight.at(oc, ic, ky, kx) += g * in.at(ic, iy, ix);
              }
        }
  }
}

}  // namespace reference

}  // namespace bea::kernels
