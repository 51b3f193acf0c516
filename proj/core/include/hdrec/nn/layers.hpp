#pragma once

#include "hdrec/nn/tensor.hpp"

namespace hdrec::nn {

inline constexpr double kLeakySlope = 0.01;

/// Zero-padded (k/2) convolution. Weight shape {c_out, c_in, k, k}, bias {c_out}.
Tensor conv2d(const Tensor& x, const ParamArray& w, const ParamArray& b, int stride = 1);

/// Accumulates dw, db; returns dL/dx when `need_dx`.
Tensor conv2d_backward(const Tensor& x, const ParamArray& w, int stride, const Tensor& dy, ParamArray& dw,
                       ParamArray& db, bool need_dx = true);

/// 2x upsampling transposed convolution, kernel 2, stride 2. Weight shape {c_in, c_out, 2, 2}.
Tensor conv_transpose2x(const Tensor& x, const ParamArray& w, const ParamArray& b);
Tensor conv_transpose2x_backward(const Tensor& x, const ParamArray& w, const Tensor& dy, ParamArray& dw,
                                 ParamArray& db);

Tensor leaky_relu(const Tensor& x);
Tensor leaky_relu_backward(const Tensor& x, const Tensor& dy);

Tensor tanh_act(const Tensor& x);
/// Takes the activation output y = tanh(x).
Tensor tanh_backward(const Tensor& y, const Tensor& dy);

Tensor avg_pool2(const Tensor& x);
Tensor avg_pool2_backward(const Tensor& dy, int height, int width);

Tensor concat_channels(const Tensor& a, const Tensor& b);
/// Splits dL/d(concat) back into the two parts.
std::pair<Tensor, Tensor> split_channels(const Tensor& d, int channels_a);

void add_inplace(Tensor& a, const Tensor& b);

}  // namespace hdrec::nn
