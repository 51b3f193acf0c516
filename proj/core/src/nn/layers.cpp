#include "hdrec/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "hdrec/error.hpp"

namespace hdrec::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMapMat = Eigen::Map<const RowMat>;

// Eigen's vectorized kernels peel according to the operand address, so the
// summation order (and the last bits) would follow heap placement. Products
// run on Eigen-owned copies, which always have the maximal alignment.
RowMat owned(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  return ConstMapMat(v.data(), rows, cols);
}

void store(const RowMat& m, std::vector<double>& dst) { std::copy(m.data(), m.data() + m.size(), dst.begin()); }

void accumulate(const RowMat& m, std::vector<double>& dst) {
  for (Eigen::Index i = 0; i < m.size(); ++i) dst[i] += m.data()[i];
}

int out_extent(int in, int k, int stride) { return (in + 2 * (k / 2) - k) / stride + 1; }

/// Rows are (c, ky, kx), columns are output pixels.
RowMat im2col(const Tensor& x, int k, int stride, int oh, int ow) {
  const int pad = k / 2;
  RowMat col(static_cast<Eigen::Index>(x.channels) * k * k, static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < x.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = col.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          double* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= x.height) {
            std::fill(dst, dst + ow, 0.0);
            continue;
          }
          const double* src = x.data.data() + (static_cast<std::size_t>(c) * x.height + iy) * x.width;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            dst[ox] = (ix >= 0 && ix < x.width) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
  return col;
}

void col2im(const RowMat& col, int k, int stride, int oh, int ow, Tensor& dx) {
  const int pad = k / 2;
  for (int c = 0; c < dx.channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = col.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= dx.height) continue;
          double* dst = dx.data.data() + (static_cast<std::size_t>(c) * dx.height + iy) * dx.width;
          const double* src = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < dx.width) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_conv(const Tensor& x, const ParamArray& w) {
  if (w.shape.size() != 4 || w.shape[1] != x.channels || w.shape[2] != w.shape[3]) {
    throw ShapeError("convolution weight does not match input with " + std::to_string(x.channels) + " channels");
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ParamArray& w, const ParamArray& b, int stride) {
  check_conv(x, w);
  const int c_out = w.shape[0];
  const int k = w.shape[2];
  const int oh = out_extent(x.height, k, stride);
  const int ow = out_extent(x.width, k, stride);
  Tensor y(c_out, oh, ow);
  const RowMat wm = owned(w.values, c_out, static_cast<Eigen::Index>(x.channels) * k * k);
  RowMat ym;
  if (k == 1 && stride == 1) {
    ym.noalias() = wm * owned(x.data, x.channels, static_cast<Eigen::Index>(x.plane()));
  } else {
    ym.noalias() = wm * im2col(x, k, stride, oh, ow);
  }
  store(ym, y.data);
  const std::size_t plane = y.plane();
  for (int c = 0; c < c_out; ++c) {
    for (std::size_t i = 0; i < plane; ++i) y.data[c * plane + i] += b.values[c];
  }
  return y;
}

Tensor conv2d_backward(const Tensor& x, const ParamArray& w, int stride, const Tensor& dy, ParamArray& dw,
                       ParamArray& db, bool need_dx) {
  const int c_out = w.shape[0];
  const int k = w.shape[2];
  const Eigen::Index kk = static_cast<Eigen::Index>(x.channels) * k * k;
  const Eigen::Index p = static_cast<Eigen::Index>(dy.plane());
  const RowMat dym = owned(dy.data, c_out, p);
  const RowMat wm = owned(w.values, c_out, kk);
  for (int c = 0; c < c_out; ++c) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) sum += dy.data[c * p + i];
    db.values[c] += sum;
  }

  Tensor dx(x.channels, x.height, x.width);
  if (k == 1 && stride == 1) {
    const RowMat xm = owned(x.data, x.channels, p);
    accumulate(dym * xm.transpose(), dw.values);
    if (need_dx) store(wm.transpose() * dym, dx.data);
    return dx;
  }
  const RowMat col = im2col(x, k, stride, dy.height, dy.width);
  accumulate(dym * col.transpose(), dw.values);
  if (need_dx) {
    const RowMat dcol = wm.transpose() * dym;
    col2im(dcol, k, stride, dy.height, dy.width, dx);
  }
  return dx;
}

Tensor conv_transpose2x(const Tensor& x, const ParamArray& w, const ParamArray& b) {
  if (w.shape.size() != 4 || w.shape[0] != x.channels || w.shape[2] != 2 || w.shape[3] != 2) {
    throw ShapeError("transposed convolution weight does not match input");
  }
  const int c_out = w.shape[1];
  const Eigen::Index p = static_cast<Eigen::Index>(x.plane());
  const RowMat wm = owned(w.values, x.channels, static_cast<Eigen::Index>(c_out) * 4);
  const RowMat z = wm.transpose() * owned(x.data, x.channels, p);
  Tensor y(c_out, 2 * x.height, 2 * x.width);
  for (int c = 0; c < c_out; ++c) {
    for (int a = 0; a < 2; ++a) {
      for (int bx = 0; bx < 2; ++bx) {
        const double* src = z.row(c * 4 + a * 2 + bx).data();
        for (int i = 0; i < x.height; ++i) {
          double* dst = &y.at(c, 2 * i + a, bx);
          const double* s = src + static_cast<std::size_t>(i) * x.width;
          for (int j = 0; j < x.width; ++j) dst[2 * j] = s[j] + b.values[c];
        }
      }
    }
  }
  return y;
}

Tensor conv_transpose2x_backward(const Tensor& x, const ParamArray& w, const Tensor& dy, ParamArray& dw,
                                 ParamArray& db) {
  const int c_out = w.shape[1];
  const Eigen::Index p = static_cast<Eigen::Index>(x.plane());
  RowMat dz(static_cast<Eigen::Index>(c_out) * 4, p);
  for (int c = 0; c < c_out; ++c) {
    double sum = 0.0;
    for (int a = 0; a < 2; ++a) {
      for (int bx = 0; bx < 2; ++bx) {
        double* dst = dz.row(c * 4 + a * 2 + bx).data();
        for (int i = 0; i < x.height; ++i) {
          const double* src = dy.data.data() + (static_cast<std::size_t>(c) * dy.height + 2 * i + a) * dy.width + bx;
          for (int j = 0; j < x.width; ++j) {
            dst[static_cast<std::size_t>(i) * x.width + j] = src[2 * j];
            sum += src[2 * j];
          }
        }
      }
    }
    db.values[c] += sum;
  }
  const RowMat wm = owned(w.values, x.channels, static_cast<Eigen::Index>(c_out) * 4);
  accumulate(owned(x.data, x.channels, p) * dz.transpose(), dw.values);
  Tensor dx(x.channels, x.height, x.width);
  store(wm * dz, dx.data);
  return dx;
}

Tensor leaky_relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : kLeakySlope * v;
  return y;
}

Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) {
    if (!(x.data[i] > 0.0)) dx.data[i] *= kLeakySlope;
  }
  return dx;
}

Tensor tanh_act(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= 1.0 - y.data[i] * y.data[i];
  return dx;
}

Tensor avg_pool2(const Tensor& x) {
  Tensor y(x.channels, x.height / 2, x.width / 2);
  for (int c = 0; c < x.channels; ++c) {
    for (int i = 0; i < y.height; ++i) {
      for (int j = 0; j < y.width; ++j) {
        y.at(c, i, j) = 0.25 * (x.at(c, 2 * i, 2 * j) + x.at(c, 2 * i, 2 * j + 1) + x.at(c, 2 * i + 1, 2 * j) +
                                x.at(c, 2 * i + 1, 2 * j + 1));
      }
    }
  }
  return y;
}

Tensor avg_pool2_backward(const Tensor& dy, int height, int width) {
  Tensor dx(dy.channels, height, width);
  for (int c = 0; c < dy.channels; ++c) {
    for (int i = 0; i < dy.height; ++i) {
      for (int j = 0; j < dy.width; ++j) {
        const double g = 0.25 * dy.at(c, i, j);
        dx.at(c, 2 * i, 2 * j) = g;
        dx.at(c, 2 * i, 2 * j + 1) = g;
        dx.at(c, 2 * i + 1, 2 * j) = g;
        dx.at(c, 2 * i + 1, 2 * j + 1) = g;
      }
    }
  }
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.height != b.height || a.width != b.width) throw ShapeError("concatenated feature maps differ in size");
  Tensor y(a.channels + b.channels, a.height, a.width);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& d, int channels_a) {
  Tensor a(channels_a, d.height, d.width);
  Tensor b(d.channels - channels_a, d.height, d.width);
  std::copy(d.data.begin(), d.data.begin() + static_cast<std::ptrdiff_t>(a.size()), a.data.begin());
  std::copy(d.data.begin() + static_cast<std::ptrdiff_t>(a.size()), d.data.end(), b.data.begin());
  return {std::move(a), std::move(b)};
}

void add_inplace(Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("tensor shapes differ in addition");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

}  // namespace hdrec::nn
